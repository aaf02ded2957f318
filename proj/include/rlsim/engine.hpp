#ifndef RLSIM_ENGINE_HPP_
#define RLSIM_ENGINE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rlsim/core.hpp"
#include "rlsim/sampler.hpp"

namespace rlsim {

// Scheduler modes, cumulative from naive:
//   static          fixed batch, no filtering, barrier + serial reward
//   naive_dynamic   waves of B tasks, barrier per wave, serial reward
//   continuous rollout only (serial reward, no early termination)
//   continuous + async reward (reward server pool, no early termination)
//   full: continuous + async reward + FIFO early termination
enum class EngineMode {
  kStatic,
  kNaiveDynamic,
  kSeamlessNoAsyncNoEarlyTerm,
  kSeamlessNoEarlyTerm,
  kSeamless,
};

std::string to_string(EngineMode m);
EngineMode mode_from_string(const std::string& s);

struct SimConfig {
  int num_workers = 32;
  int reward_servers = 8;          // async modes; serial modes use 1
  double decode_rate = 100.0;      // tokens per sim second per worker

  // Response lengths: log-normal in tokens, truncated at max_tokens.
  double length_median_tokens = 4000.0;
  double length_sigma = 0.894;     // p99/median ~ 8
  double max_tokens = 65536.0;

  // Reward latency: math near-constant, code log-normal.
  double math_reward_latency = 0.05;
  double code_latency_median = 16.0;
  double code_latency_sigma = 0.5;
  double code_fraction = 0.5;

  // Pass model: per-problem pass probability ~ Beta with this mean.
  double pass_mean = 0.41;
  double pass_concentration = 2.0;

  int batch_size = 64;             // B, groups per training step
  int group_size = 16;             // G, responses per group
  EngineMode mode = EngineMode::kSeamless;
  std::uint64_t seed = 0;

  double demand_floor = 0.05;      // lower bound on estimated pass-through
  double stat_smoothing = 0.3;     // EMA factor for p0/p1
  double initial_invalid_rate = 0.4;  // p0+p1 prior before any stats exist
  double train_update_time = 60.0; // per-step non-rollout time (overall speedup)
  double time_budget = 1e7;        // sim seconds before declaring the step stuck

  void validate() const;
};

enum class TaskState { kQueued, kRolling, kRewarding, kValid, kFiltered, kAborted };

std::string to_string(TaskState s);

struct RolloutTask {
  long launch_index = 0;           // strictly increasing in launch order
  std::string problem_id;
  int worker = -1;
  double launch_time = 0.0;
  double start_time = 0.0;         // rollout start (= launch unless queued)
  double rollout_end_time = 0.0;
  double reward_end_time = 0.0;
  double duration = 0.0;           // rollout worker time
  double reward_latency = 0.0;
  TaskState state = TaskState::kQueued;
  GroupClass cls = GroupClass::kKeep;  // meaningful once valid/filtered
  ResponseGroup group;
};

struct StepMetrics {
  double wall_time = 0.0;          // rollout+reward phase, sim seconds
  double gpu_busy_time = 0.0;      // productive worker-seconds
  double gpu_idle_time = 0.0;      // includes time consumed by aborted tasks
  int launched = 0;
  int valid_generated = 0;
  int filtered_zero = 0;
  int filtered_perfect = 0;
  int aborted = 0;
  int zero_gradient_in_batch = 0;  // static mode only
  bool waste_defined = true;       // false for static mode
  double sample_waste_ratio = 0.0;       // (valid_generated - B) / B
  double sample_waste_ratio_gen = 0.0;   // (valid_generated - B) / valid_generated

  double gpu_idle_ratio() const {
    double total = gpu_busy_time + gpu_idle_time;
    return total > 0.0 ? gpu_idle_time / total : 0.0;
  }
};

// Pass-rate statistics of the running step, smoothed.
struct PassStats {
  double p_zero = 0.2;
  double p_perfect = 0.2;

  double invalid_rate() const { return p_zero + p_perfect; }
};

// Expected remaining launches needed to reach B valid samples; capped by the
// number of free workers.
int estimate_launch_demand(int valid_count, int in_flight, const PassStats& stats, int batch_size,
                           double demand_floor, int free_workers);

struct TerminationDecision {
  bool finalize = false;
  std::vector<long> batch_indices;   // launch indices of the selected batch
  std::vector<long> abort_indices;   // incomplete tasks past the selected prefix
};

// FIFO early-termination rule: finalize once the first B valid samples (by
// launch index) are preceded only by completed tasks; everything incomplete
// past that prefix is aborted.
TerminationDecision early_termination_check(const std::vector<RolloutTask>& tasks, int batch_size);

// Where a step's tasks come from. The sim workload draws everything from
// seeded distributions keyed by (seed, step, launch_index); the live workload
// in the harness samples a toy policy instead.
class Workload {
 public:
  virtual ~Workload() = default;
  virtual std::string next_problem(long launch_index) = 0;
  // Scored group plus its rollout duration and reward latency.
  struct TaskDraw {
    double duration = 0.0;
    double reward_latency = 0.0;
    ResponseGroup group;
  };
  virtual TaskDraw draw_task(const std::string& problem_id, long launch_index) = 0;
  virtual void on_classified(const std::string& problem_id, GroupClass cls) {}
};

std::unique_ptr<Workload> make_sim_workload(const SimConfig& cfg, int step);

struct StepResult {
  StepMetrics metrics;
  std::vector<ResponseGroup> batch;
  std::vector<RolloutTask> trace;  // every launched task, by launch index
};

// One training step's rollout+reward phase, driven to batch finalization.
// Deterministic for a fixed (config, seed, step).
StepResult run_step(const SimConfig& cfg, int step, Workload* workload = nullptr,
                    PassStats* carry_stats = nullptr);

struct AblationRow {
  EngineMode mode;
  double overall_speedup = 0.0;    // vs naive_dynamic
  double rollout_speedup = 0.0;
  double normalized_idle_time = 0.0;
  double gpu_idle_ratio = 0.0;
  bool waste_defined = true;
  double sample_waste_ratio = 0.0;
  double total_wall_time = 0.0;
  double total_idle_time = 0.0;
};

// Runs `steps` consecutive training steps per mode on a shared workload
// distribution and normalizes against naive dynamic sampling.
std::vector<AblationRow> run_ablation(const SimConfig& base, const std::vector<EngineMode>& modes,
                                      int steps = 5);

struct ValidationMetrics {
  double naive_wall_time = 0.0;
  double async_wall_time = 0.0;
  double speedup = 0.0;
  double naive_idle_ratio = 0.0;
  double async_idle_ratio = 0.0;
  double normalized_idle_time = 0.0;
};

// Validation pass: one task per problem, all launched at once; async reward
// overlap vs the sequential-reward baseline.
ValidationMetrics run_validation(int num_problems, const SimConfig& cfg);

}  // namespace rlsim

#endif  // RLSIM_ENGINE_HPP_
