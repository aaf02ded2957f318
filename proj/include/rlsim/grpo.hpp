#ifndef RLSIM_GRPO_HPP_
#define RLSIM_GRPO_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rlsim/core.hpp"

namespace rlsim {

struct GrpoConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;   // asymmetric clipping, eps_high >= eps_low
  double learning_rate = 0.05;
  int train_batch_size = 64;
  int mini_batch_size = 16;
  int grad_updates_per_iteration = 4;
  double std_guard = 1e-8;
  double kl_coefficient = 0.0;  // KL loss removed; field documents that

  void validate() const;
};

// Categorical sequence policy: logits per (problem, position, token) plus a
// shared (position, token) table so problems interact through common
// parameters. Token j of a response is drawn independently per position.
class ToyPolicy {
 public:
  ToyPolicy(int vocab_size, int max_positions);

  int vocab_size() const { return vocab_size_; }
  int max_positions() const { return max_positions_; }

  void register_problem(const std::string& problem_id);
  bool has_problem(const std::string& problem_id) const;
  std::vector<std::string> problem_ids() const;

  double logit(const std::string& problem_id, int pos, int token) const;
  double& logit_ref(const std::string& problem_id, int pos, int token);
  double& shared_logit_ref(int pos, int token);

  // Probability vector over the vocabulary at (problem, position).
  std::vector<double> token_probs(const std::string& problem_id, int pos,
                                  double temperature = 1.0) const;

  // Samples `length` tokens; top_p < 1 truncates the nucleus before
  // renormalizing. Deterministic given the rng state.
  std::vector<int> sample_sequence(const std::string& problem_id, int length,
                                   std::uint64_t& rng_state, double temperature = 1.0,
                                   double top_p = 1.0) const;

  double log_prob(const std::string& problem_id, int pos, int token) const;

  int parameter_count() const;
  // Flat views for finite-difference checking: shared table first, then
  // per-problem tables in registration order.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  double mean_entropy() const;

 private:
  int vocab_size_;
  int max_positions_;
  std::vector<double> shared_;                       // [pos * vocab + tok]
  std::vector<std::string> order_;
  std::map<std::string, std::vector<double>> table_; // per-problem logits
};

// A scored response together with the old-policy per-token log-probs
// snapshotted at rollout time.
struct TrainSample {
  std::string problem_id;
  std::vector<int> tokens;
  std::vector<double> old_log_probs;
  double reward = 0.0;
};

struct TrainGroup {
  std::string problem_id;
  std::vector<TrainSample> samples;
};

// A_i = (r_i - mean) / max(population std, guard); all zeros when the group
// reward std falls below the guard (zero-gradient group).
std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_guard);

// Token-level mean of min(ratio*A, clip(ratio, 1-eps_low, 1+eps_high)*A)
// over all tokens of all responses. Loss for minimization is the negation.
double grpo_objective(const std::vector<std::vector<double>>& ratios,
                      const std::vector<double>& advantages, const GrpoConfig& cfg);

struct GradientStats {
  double objective = 0.0;
  double clip_fraction = 0.0;  // tokens where the clipped branch is active
};

// Analytic gradient of loss = -objective w.r.t. the flattened parameters.
GradientStats policy_gradient(const ToyPolicy& policy, const std::vector<TrainGroup>& batch,
                              const GrpoConfig& cfg, std::vector<double>& grad_out);

struct IterationStats {
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double objective = 0.0;
};

// One training iteration: mini-batch SGD steps on a fixed batch. Old-policy
// log-probs are part of the batch (snapshotted at rollout), so no extra
// snapshot happens here.
IterationStats train_iteration(ToyPolicy& policy, const std::vector<TrainGroup>& batch,
                               const GrpoConfig& cfg);

}  // namespace rlsim

#endif  // RLSIM_GRPO_HPP_
