#ifndef RLSIM_SAMPLER_HPP_
#define RLSIM_SAMPLER_HPP_

#include <set>
#include <string>
#include <vector>

#include "rlsim/core.hpp"
#include "rlsim/rng.hpp"

namespace rlsim {

enum class GroupClass { kKeep, kRouteToEasyPool, kDiscardZero };

enum class PrefilterDecision { kKeep, kDropEasy, kDropUnsolvable };

std::string to_string(GroupClass c);
std::string to_string(PrefilterDecision d);

// Dynamic-sampling classification: perfect groups move the problem to the
// easy pool, zero groups are dropped from the batch but the problem stays
// active, mixed groups are valid training samples.
GroupClass classify_group(const ResponseGroup& group);

// Offline curation decision for one problem. `solver_passes`, when present,
// is the pass count of a stronger solver pool; zero there marks the problem
// unsolvable (or mislabeled). Pass rate above `easy_threshold` drops it.
PrefilterDecision difficulty_prefilter(int passes, int rollouts,
                                       std::optional<int> solver_passes = std::nullopt,
                                       double easy_threshold = 0.9);

// Active dataset + easy pool with alpha re-sampling. Draws are uniform
// without replacement within a step; begin_step() resets the drawn set, and
// a step needing more draws than problems starts a fresh sweep. Drawing from
// an empty active dataset is an error.
class SamplerState {
 public:
  SamplerState(std::vector<std::string> problem_ids, double alpha, std::uint64_t seed);

  void begin_step();

  // With probability alpha (and a nonempty pool) draws from the easy pool,
  // otherwise from the active dataset.
  std::string sample_next_problem();

  // Applies classify_group routing for the given problem.
  GroupClass record_group(const std::string& problem_id, const ResponseGroup& group);

  // Same routing when the caller already classified the group.
  void record_class(const std::string& problem_id, GroupClass cls);

  // Deletes a problem from both the active set and the pool. Used by the
  // ablation that removes perfect-pass problems instead of pooling them.
  void remove_problem(const std::string& id);

  const std::vector<std::string>& active() const { return active_; }
  const std::vector<std::string>& easy_pool() const { return pool_; }
  bool in_pool(const std::string& id) const;
  double alpha() const { return alpha_; }

  // Current-step classification counts.
  int step_zero_groups() const { return step_zero_; }
  int step_perfect_groups() const { return step_perfect_; }
  int step_mixed_groups() const { return step_mixed_; }
  int step_pool_draws() const { return step_pool_draws_; }

 private:
  void move_to_pool(const std::string& id);
  void move_to_active(const std::string& id);

  std::vector<std::string> active_;  // insertion order preserved
  std::vector<std::string> pool_;
  double alpha_;
  Rng rng_;
  std::set<std::string> drawn_this_step_;
  int step_zero_ = 0;
  int step_perfect_ = 0;
  int step_mixed_ = 0;
  int step_pool_draws_ = 0;
};

// First B valid groups in arrival (launch) order. The engine guarantees the
// supply; short supply is an error here.
std::vector<ResponseGroup> assemble_batch(const std::vector<ResponseGroup>& valid_in_order,
                                          int batch_size);

}  // namespace rlsim

#endif  // RLSIM_SAMPLER_HPP_
