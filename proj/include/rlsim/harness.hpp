#ifndef RLSIM_HARNESS_HPP_
#define RLSIM_HARNESS_HPP_

#include <memory>
#include <string>
#include <vector>

#include "rlsim/core.hpp"
#include "rlsim/engine.hpp"
#include "rlsim/grpo.hpp"
#include "rlsim/reward.hpp"
#include "rlsim/sampler.hpp"

namespace rlsim {

// What happens to a problem once a group passes perfectly: pooled for alpha
// re-sampling, or removed from training outright (ablation).
enum class EasyDataPolicy { kResample, kDelete };

struct SyntheticTaskSpec {
  int math_count = 96;
  int code_count = 24;
  int hard_code_count = 8;   // long all-singleton-heavy problems
  int vocab_size = 4;
  int tests_per_code_problem = 6;
  int hard_sequence_length = 10;
  int level_count = 3;
  // Beta parameters for the per-problem difficulty prior used in sim mode.
  double prior_alpha = 2.0;
  double prior_beta = 2.0;
  // Probability that a math gold token is the shared majority token, so the
  // shared logit table carries cross-problem signal.
  double gold_majority_bias = 0.6;

  int total() const { return math_count + code_count + hard_code_count; }
  void validate() const;
};

struct ExperimentSpec {
  std::string name = "default";
  SimConfig sim;
  GrpoConfig grpo;
  RewardScheme scheme;
  SyntheticTaskSpec synth;
  std::string dataset_path;  // empty -> generate from synth
  int iterations = 50;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double alpha = 0.1;
  EasyDataPolicy easy_policy = EasyDataPolicy::kResample;
  int difficulty_pool_size = 64;  // rollouts for offline pass-rate estimation

  void validate() const;
};

ExperimentSpec load_experiment_spec(const std::string& path);
void save_experiment_spec(const ExperimentSpec& spec, const std::string& path);
ExperimentSpec default_toy_spec();

// Deterministic synthetic dataset. Math problems are short gold token
// sequences; code problems carry per-position membership tests whose accepted
// sets stratify initial pass rates across all L levels.
std::vector<ProblemSpec> generate_dataset(const SyntheticTaskSpec& spec, std::uint64_t seed);

bool is_hard_problem(const ProblemSpec& p);

// Table-driven test executor for the toy policy's token sequences.
// A test's `input` is a position index and `expected` a comma-separated list
// of accepted tokens at that position.
std::vector<bool> execute_tests(const ProblemSpec& problem, const std::vector<int>& tokens);

std::vector<int> parse_token_answer(const std::string& answer);
std::string format_token_answer(const std::vector<int>& tokens);
int problem_sequence_length(const ProblemSpec& p);

// Sim-mode workload over a real dataset: pass outcomes drawn from each
// problem's difficulty prior, problems drawn through the sampler.
class DatasetSimWorkload : public Workload {
 public:
  DatasetSimWorkload(const std::vector<ProblemSpec>& problems, SamplerState* sampler,
                     const SimConfig& cfg, int step);
  std::string next_problem(long launch_index) override;
  TaskDraw draw_task(const std::string& problem_id, long launch_index) override;
  void on_classified(const std::string& problem_id, GroupClass cls) override;

 private:
  std::map<std::string, const ProblemSpec*> by_id_;
  SamplerState* sampler_;
  const SimConfig& cfg_;
  int step_;
};

struct IterationRecord {
  int iteration = 0;
  double mean_reward = 0.0;        // over every response generated this iteration
  double eval_mean_reward = 0.0;   // fixed eval pass over the full dataset
  double batch_mean_reward = 0.0;  // over the assembled batch only
  double clip_fraction = 0.0;
  double entropy = 0.0;
  int pool_size = 0;
  int active_size = 0;
  int generated_groups = 0;
  double waste_ratio = 0.0;
};

struct ToyTrainingResult {
  std::vector<IterationRecord> iterations;
  int hard_problem_count = 0;
  int hard_problems_with_signal = 0;  // hard problems that ever scored > 0
  double final_mean_reward = 0.0;
};

// Full loop: sampler -> scheduler (live mode, virtual clock) -> reward ->
// GRPO update, for spec.iterations iterations on one seed.
ToyTrainingResult run_toy_training(const ExperimentSpec& spec, std::uint64_t seed);

void write_training_csv(const ToyTrainingResult& result, const std::string& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);
std::vector<AblationRow> read_ablation_csv(const std::string& path);

// Text table with the scheduling-ablation columns. Throws on empty input.
std::string render_report(const std::vector<AblationRow>& rows);
std::string render_validation_report(const ValidationMetrics& vm);

// Simulated prefilter: n rollouts from the difficulty prior, plus a stronger
// solver pool for the unsolvable check. Returns the kept problems.
struct PrefilterOutcome {
  std::vector<ProblemSpec> kept;
  int dropped_easy = 0;
  int dropped_unsolvable = 0;
};
PrefilterOutcome run_prefilter(const std::vector<ProblemSpec>& problems, int rollouts,
                               double easy_threshold, std::uint64_t seed);

}  // namespace rlsim

#endif  // RLSIM_HARNESS_HPP_
