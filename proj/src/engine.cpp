#include "rlsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>

#include "rlsim/rng.hpp"

namespace rlsim {

std::string to_string(EngineMode m) {
  switch (m) {
    case EngineMode::kStatic: return "static";
    case EngineMode::kNaiveDynamic: return "naive";
    case EngineMode::kSeamlessNoAsyncNoEarlyTerm: return "continuous";
    case EngineMode::kSeamlessNoEarlyTerm: return "continuous_async";
    case EngineMode::kSeamless: return "seamless";
  }
  return "?";
}

EngineMode mode_from_string(const std::string& s) {
  if (s == "static") return EngineMode::kStatic;
  if (s == "naive" || s == "naive_dynamic") return EngineMode::kNaiveDynamic;
  if (s == "continuous" || s == "seamless_minus_async") return EngineMode::kSeamlessNoAsyncNoEarlyTerm;
  if (s == "continuous_async" || s == "seamless_minus_early_term") return EngineMode::kSeamlessNoEarlyTerm;
  if (s == "seamless") return EngineMode::kSeamless;
  throw std::invalid_argument("unknown engine mode: " + s);
}

std::string to_string(TaskState s) {
  switch (s) {
    case TaskState::kQueued: return "queued";
    case TaskState::kRolling: return "rolling";
    case TaskState::kRewarding: return "rewarding";
    case TaskState::kValid: return "valid";
    case TaskState::kFiltered: return "filtered";
    case TaskState::kAborted: return "aborted";
  }
  return "?";
}

void SimConfig::validate() const {
  if (num_workers < 1) throw std::invalid_argument("num_workers must be >= 1");
  if (reward_servers < 1) throw std::invalid_argument("reward_servers must be >= 1");
  if (batch_size < 1 || group_size < 2) throw std::invalid_argument("bad batch/group size");
  if (decode_rate <= 0.0) throw std::invalid_argument("decode_rate must be positive");
  if (!(length_median_tokens > 0.0) || !std::isfinite(length_sigma) ||
      !std::isfinite(max_tokens) || max_tokens < length_median_tokens)
    throw std::invalid_argument("bad length distribution");
  if (pass_mean <= 0.0 || pass_mean >= 1.0 || pass_concentration <= 0.0)
    throw std::invalid_argument("bad pass model");
  if (code_fraction < 0.0 || code_fraction > 1.0)
    throw std::invalid_argument("code_fraction outside [0,1]");
  if (demand_floor <= 0.0 || demand_floor > 1.0)
    throw std::invalid_argument("demand_floor outside (0,1]");
  if (stat_smoothing <= 0.0 || stat_smoothing > 1.0)
    throw std::invalid_argument("stat_smoothing outside (0,1]");
}

int estimate_launch_demand(int valid_count, int in_flight, const PassStats& stats, int batch_size,
                           double demand_floor, int free_workers) {
  double pass_through = std::clamp(1.0 - stats.invalid_rate(), demand_floor, 1.0);
  double expected_valid = valid_count + in_flight * pass_through;
  if (expected_valid >= batch_size) return 0;
  int demand = static_cast<int>(std::ceil((batch_size - expected_valid) / pass_through));
  return std::min(demand, free_workers);
}

TerminationDecision early_termination_check(const std::vector<RolloutTask>& tasks,
                                            int batch_size) {
  std::vector<long> valid;
  for (const auto& t : tasks)
    if (t.state == TaskState::kValid) valid.push_back(t.launch_index);
  std::sort(valid.begin(), valid.end());
  TerminationDecision d;
  if (static_cast<int>(valid.size()) < batch_size) return d;
  valid.resize(batch_size);
  long max_selected = valid.back();
  for (const auto& t : tasks) {
    bool incomplete = t.state == TaskState::kQueued || t.state == TaskState::kRolling ||
                      t.state == TaskState::kRewarding;
    if (!incomplete) continue;
    if (t.launch_index <= max_selected) return d;  // earlier task still running
  }
  d.finalize = true;
  d.batch_indices = valid;
  for (const auto& t : tasks) {
    bool incomplete = t.state == TaskState::kQueued || t.state == TaskState::kRolling ||
                      t.state == TaskState::kRewarding;
    if (incomplete && t.launch_index > max_selected) d.abort_indices.push_back(t.launch_index);
  }
  return d;
}

namespace {

class SimWorkload : public Workload {
 public:
  SimWorkload(const SimConfig& cfg, int step) : cfg_(cfg), step_(step) {}

  std::string next_problem(long launch_index) override {
    return "s" + std::to_string(step_) + "-p" + std::to_string(launch_index);
  }

  TaskDraw draw_task(const std::string& problem_id, long launch_index) override {
    // All randomness keyed by (seed, step, launch_index): a task draws the
    // same workload in every mode and under any event ordering.
    std::uint64_t key = hash_combine(hash_combine(cfg_.seed, 0x5157ULL + step_),
                                     static_cast<std::uint64_t>(launch_index));
    Rng rng(key);

    TaskDraw d;
    d.group.problem_id = problem_id;
    double max_len = 0.0;
    double q = rng.beta(cfg_.pass_mean * cfg_.pass_concentration,
                        (1.0 - cfg_.pass_mean) * cfg_.pass_concentration);
    for (int i = 0; i < cfg_.group_size; ++i) {
      Response r;
      r.problem_id = problem_id;
      double len = std::min(rng.lognormal(std::log(cfg_.length_median_tokens), cfg_.length_sigma),
                            cfg_.max_tokens);
      r.token_length = std::max(1, static_cast<int>(len));
      r.reward = rng.uniform() < q ? 1.0 : 0.0;
      max_len = std::max(max_len, static_cast<double>(r.token_length));
      d.group.responses.push_back(std::move(r));
    }
    // One worker decodes the whole group; the longest response gates it.
    d.duration = max_len / cfg_.decode_rate;
    bool is_code = rng.uniform() < cfg_.code_fraction;
    d.reward_latency = is_code
        ? rng.lognormal(std::log(cfg_.code_latency_median), cfg_.code_latency_sigma)
        : cfg_.math_reward_latency;
    return d;
  }

 private:
  const SimConfig& cfg_;
  int step_;
};

struct Event {
  double time;
  long seq;
  int kind;  // 0 = rollout done, 1 = reward done
  size_t task;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

class StepSim {
 public:
  StepSim(const SimConfig& cfg, int step, Workload* wl, PassStats* carry)
      : cfg_(cfg), wl_(wl), carry_(carry) {
    (void)step;
    stats_.p_zero = cfg.initial_invalid_rate / 2.0;
    stats_.p_perfect = cfg.initial_invalid_rate / 2.0;
    if (carry_) stats_ = *carry_;
    for (int w = 0; w < cfg.num_workers; ++w) free_workers_.insert(w);
    bool serial_reward = cfg.mode == EngineMode::kStatic || cfg.mode == EngineMode::kNaiveDynamic ||
                         cfg.mode == EngineMode::kSeamlessNoAsyncNoEarlyTerm;
    server_free_.assign(serial_reward ? 1 : cfg.reward_servers, 0.0);
    barrier_mode_ = cfg.mode == EngineMode::kStatic || cfg.mode == EngineMode::kNaiveDynamic;
    early_term_ = cfg.mode == EngineMode::kSeamless;
  }

  StepResult run() {
    if (barrier_mode_) {
      launch_wave(cfg_.batch_size);
    } else {
      maybe_launch();
    }
    while (!finalized_) {
      if (events_.empty()) throw std::runtime_error("unreachable batch: event queue drained");
      Event e = events_.top();
      events_.pop();
      now_ = e.time;
      if (now_ > cfg_.time_budget) throw std::runtime_error("unreachable batch: time budget exceeded");
      RolloutTask& t = tasks_[e.task];
      if (t.state == TaskState::kAborted) continue;
      if (e.kind == 0)
        on_rollout_complete(e.task);
      else
        on_reward_complete(e.task);
    }
    if (carry_) *carry_ = stats_;
    return finish();
  }

 private:
  void schedule(double time, int kind, size_t task) {
    events_.push(Event{time, event_seq_++, kind, task});
  }

  size_t create_task() {
    RolloutTask t;
    t.launch_index = next_launch_index_++;
    t.problem_id = wl_->next_problem(t.launch_index);
    auto draw = wl_->draw_task(t.problem_id, t.launch_index);
    t.duration = draw.duration;
    t.reward_latency = draw.reward_latency;
    t.group = std::move(draw.group);
    t.launch_time = now_;
    t.state = TaskState::kQueued;
    tasks_.push_back(std::move(t));
    return tasks_.size() - 1;
  }

  void start_rollout(size_t idx) {
    RolloutTask& t = tasks_[idx];
    if (t.state != TaskState::kQueued) throw std::runtime_error("invalid state transition to rolling");
    int w = *free_workers_.begin();
    free_workers_.erase(free_workers_.begin());
    t.worker = w;
    t.start_time = now_;
    t.rollout_end_time = now_ + t.duration;
    t.state = TaskState::kRolling;
    schedule(t.rollout_end_time, 0, idx);
  }

  void launch_wave(int n) {
    wave_rollouts_pending_ = n;
    wave_rewards_pending_ = 0;
    wave_tasks_.clear();
    for (int i = 0; i < n; ++i) {
      size_t idx = create_task();
      wave_tasks_.push_back(idx);
      if (!free_workers_.empty())
        start_rollout(idx);
      else
        pending_.push_back(idx);
    }
  }

  void maybe_launch() {
    while (!free_workers_.empty()) {
      int demand = estimate_launch_demand(valid_count_, in_flight_, stats_, cfg_.batch_size,
                                          cfg_.demand_floor, static_cast<int>(free_workers_.size()));
      if (demand <= 0) return;
      for (int i = 0; i < demand; ++i) {
        size_t idx = create_task();
        ++in_flight_;
        start_rollout(idx);
      }
    }
  }

  void dispatch_reward(size_t idx) {
    RolloutTask& t = tasks_[idx];
    if (t.state != TaskState::kRolling) throw std::runtime_error("invalid state transition to rewarding");
    t.state = TaskState::kRewarding;
    auto it = std::min_element(server_free_.begin(), server_free_.end());
    double start = std::max(now_, *it);
    double end = start + t.reward_latency;
    *it = end;
    t.reward_end_time = end;
    schedule(end, 1, idx);
  }

  void on_rollout_complete(size_t idx) {
    RolloutTask& t = tasks_[idx];
    if (t.state != TaskState::kRolling) throw std::runtime_error("rollout completion in bad state");
    free_workers_.insert(t.worker);
    if (barrier_mode_) {
      t.state = TaskState::kRewarding;  // reward dispatched at the barrier
      if (!pending_.empty()) {
        size_t next = pending_.front();
        pending_.pop_front();
        start_rollout(next);
      }
      if (--wave_rollouts_pending_ == 0) {
        // Barrier reached: serialize every reward of this wave.
        wave_rewards_pending_ = static_cast<int>(wave_tasks_.size());
        for (size_t widx : wave_tasks_) {
          RolloutTask& wt = tasks_[widx];
          auto it = std::min_element(server_free_.begin(), server_free_.end());
          double start = std::max(now_, *it);
          double end = start + wt.reward_latency;
          *it = end;
          wt.reward_end_time = end;
          schedule(end, 1, widx);
        }
      }
    } else {
      dispatch_reward(idx);
      maybe_launch();  // the freed worker is eligible in this same tick
    }
  }

  void classify(size_t idx) {
    RolloutTask& t = tasks_[idx];
    if (t.state != TaskState::kRewarding) throw std::runtime_error("reward completion in bad state");
    GroupClass cls = classify_group(t.group);
    t.cls = cls;
    double zero_obs = cls == GroupClass::kDiscardZero ? 1.0 : 0.0;
    double perfect_obs = cls == GroupClass::kRouteToEasyPool ? 1.0 : 0.0;
    stats_.p_zero = (1.0 - cfg_.stat_smoothing) * stats_.p_zero + cfg_.stat_smoothing * zero_obs;
    stats_.p_perfect =
        (1.0 - cfg_.stat_smoothing) * stats_.p_perfect + cfg_.stat_smoothing * perfect_obs;
    if (cfg_.mode == EngineMode::kStatic) {
      // Static sampling keeps every group, zero-gradient or not.
      t.state = TaskState::kValid;
      if (cls == GroupClass::kKeep) ++valid_count_;
    } else if (cls == GroupClass::kKeep) {
      t.state = TaskState::kValid;
      ++valid_count_;
    } else {
      t.state = TaskState::kFiltered;
    }
    wl_->on_classified(t.problem_id, cls);
  }

  void on_reward_complete(size_t idx) {
    classify(idx);
    if (barrier_mode_) {
      if (--wave_rewards_pending_ > 0) return;
      if (cfg_.mode == EngineMode::kStatic) {
        finalize_static();
      } else if (valid_count_ >= cfg_.batch_size) {
        finalize_fifo();
      } else {
        launch_wave(cfg_.batch_size);
      }
      return;
    }

    --in_flight_;
    maybe_launch();
    if (early_term_) {
      TerminationDecision d = early_termination_check(tasks_, cfg_.batch_size);
      if (d.finalize) {
        for (long li : d.abort_indices) abort_task(static_cast<size_t>(li));
        finalize_fifo();
      }
    } else if (valid_count_ >= cfg_.batch_size && in_flight_ == 0) {
      finalize_fifo();
    }
  }

  void abort_task(size_t idx) {
    RolloutTask& t = tasks_[idx];
    if (t.state == TaskState::kRolling) free_workers_.insert(t.worker);
    t.state = TaskState::kAborted;
  }

  void finalize_static() {
    finalized_ = true;
    finalize_time_ = now_;
    for (const auto& t : tasks_) batch_.push_back(t.group);
  }

  void finalize_fifo() {
    finalized_ = true;
    finalize_time_ = now_;
    std::vector<const RolloutTask*> valid;
    for (const auto& t : tasks_)
      if (t.state == TaskState::kValid) valid.push_back(&t);
    std::sort(valid.begin(), valid.end(),
              [](const RolloutTask* a, const RolloutTask* b) { return a->launch_index < b->launch_index; });
    for (int i = 0; i < cfg_.batch_size; ++i) batch_.push_back(valid[i]->group);
  }

  StepResult finish() {
    StepResult out;
    out.trace = tasks_;
    out.batch = std::move(batch_);

    StepMetrics& m = out.metrics;
    m.wall_time = finalize_time_;
    m.launched = static_cast<int>(tasks_.size());
    double busy = 0.0;
    for (const auto& t : tasks_) {
      switch (t.state) {
        case TaskState::kValid:
          busy += t.duration;
          if (cfg_.mode == EngineMode::kStatic) {
            if (t.cls == GroupClass::kKeep)
              ++m.valid_generated;
            else
              ++m.zero_gradient_in_batch;
          } else {
            ++m.valid_generated;
          }
          break;
        case TaskState::kFiltered:
          busy += t.duration;
          if (t.cls == GroupClass::kDiscardZero) ++m.filtered_zero;
          if (t.cls == GroupClass::kRouteToEasyPool) ++m.filtered_perfect;
          break;
        case TaskState::kAborted:
          ++m.aborted;  // consumed worker time lands in idle
          break;
        default:
          throw std::runtime_error("task left in flight after finalization");
      }
    }
    m.gpu_busy_time = busy;
    m.gpu_idle_time = cfg_.num_workers * finalize_time_ - busy;
    if (cfg_.mode == EngineMode::kStatic) {
      m.waste_defined = false;
    } else {
      int excess = m.valid_generated - cfg_.batch_size;
      m.sample_waste_ratio = static_cast<double>(excess) / cfg_.batch_size;
      m.sample_waste_ratio_gen =
          m.valid_generated > 0 ? static_cast<double>(excess) / m.valid_generated : 0.0;
    }
    return out;
  }

  const SimConfig& cfg_;
  Workload* wl_;
  PassStats* carry_;
  PassStats stats_;

  std::vector<RolloutTask> tasks_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  long event_seq_ = 0;
  long next_launch_index_ = 0;
  std::set<int> free_workers_;
  std::deque<size_t> pending_;
  std::vector<double> server_free_;

  bool barrier_mode_ = false;
  bool early_term_ = false;
  int wave_rollouts_pending_ = 0;
  int wave_rewards_pending_ = 0;
  std::vector<size_t> wave_tasks_;

  int valid_count_ = 0;
  int in_flight_ = 0;
  double now_ = 0.0;
  bool finalized_ = false;
  double finalize_time_ = 0.0;
  std::vector<ResponseGroup> batch_;
};

}  // namespace

std::unique_ptr<Workload> make_sim_workload(const SimConfig& cfg, int step) {
  return std::make_unique<SimWorkload>(cfg, step);
}

StepResult run_step(const SimConfig& cfg, int step, Workload* workload, PassStats* carry_stats) {
  cfg.validate();
  std::unique_ptr<Workload> owned;
  if (workload == nullptr) {
    owned = make_sim_workload(cfg, step);
    workload = owned.get();
  }
  StepSim sim(cfg, step, workload, carry_stats);
  return sim.run();
}

std::vector<AblationRow> run_ablation(const SimConfig& base, const std::vector<EngineMode>& modes,
                                      int steps) {
  base.validate();
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");

  auto run_mode = [&](EngineMode mode) {
    SimConfig cfg = base;
    cfg.mode = mode;
    PassStats carry{cfg.initial_invalid_rate / 2.0, cfg.initial_invalid_rate / 2.0};
    AblationRow row;
    row.mode = mode;
    double busy = 0.0, idle = 0.0, rollout_wall = 0.0;
    int valid = 0, excess_base = 0;
    for (int s = 0; s < steps; ++s) {
      StepResult r = run_step(cfg, s, nullptr, &carry);
      rollout_wall += r.metrics.wall_time;
      busy += r.metrics.gpu_busy_time;
      idle += r.metrics.gpu_idle_time;
      valid += r.metrics.valid_generated;
      excess_base += cfg.batch_size;
      row.waste_defined = r.metrics.waste_defined;
    }
    row.total_wall_time = rollout_wall + steps * base.train_update_time;
    row.total_idle_time = idle;
    row.gpu_idle_ratio = idle / (busy + idle);
    if (row.waste_defined)
      row.sample_waste_ratio = static_cast<double>(valid - excess_base) / excess_base;
    row.rollout_speedup = rollout_wall;  // raw for now; normalized below
    return row;
  };

  AblationRow naive = run_mode(EngineMode::kNaiveDynamic);
  std::vector<AblationRow> rows;
  for (EngineMode m : modes) {
    AblationRow row = m == EngineMode::kNaiveDynamic ? naive : run_mode(m);
    row.overall_speedup = naive.total_wall_time / row.total_wall_time;
    row.rollout_speedup = naive.rollout_speedup / row.rollout_speedup;
    row.normalized_idle_time = row.total_idle_time / naive.total_idle_time;
    rows.push_back(row);
  }
  return rows;
}

ValidationMetrics run_validation(int num_problems, const SimConfig& cfg) {
  cfg.validate();
  if (num_problems < 1) throw std::invalid_argument("need at least one problem");
  auto wl = make_sim_workload(cfg, /*step=*/9001);

  struct Draw {
    double duration;
    double latency;
  };
  std::vector<Draw> draws;
  draws.reserve(num_problems);
  for (int i = 0; i < num_problems; ++i) {
    auto d = wl->draw_task("v" + std::to_string(i), i);
    draws.push_back({d.duration, d.reward_latency});
  }

  const int W = cfg.num_workers;
  // Rollout phase: all tasks queued at t=0, FIFO over workers.
  std::vector<double> worker_free(W, 0.0);
  std::vector<double> rollout_end(num_problems, 0.0);
  for (int i = 0; i < num_problems; ++i) {
    auto it = std::min_element(worker_free.begin(), worker_free.end());
    rollout_end[i] = *it + draws[i].duration;
    *it = rollout_end[i];
  }
  double rollout_makespan = *std::max_element(worker_free.begin(), worker_free.end());
  double busy = 0.0;
  for (const auto& d : draws) busy += d.duration;

  ValidationMetrics vm;
  // Naive: sequential reward computation once every rollout has finished.
  {
    double t = rollout_makespan;
    for (const auto& d : draws) t += d.latency;
    vm.naive_wall_time = t;
    vm.naive_idle_ratio = (W * t - busy) / (W * t);
  }
  // Async: each completed rollout streams into the reward server pool.
  {
    std::vector<double> server_free(cfg.reward_servers, 0.0);
    std::vector<int> order(num_problems);
    for (int i = 0; i < num_problems; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return rollout_end[a] != rollout_end[b] ? rollout_end[a] < rollout_end[b] : a < b; });
    double last = rollout_makespan;
    for (int i : order) {
      auto it = std::min_element(server_free.begin(), server_free.end());
      double start = std::max(rollout_end[i], *it);
      *it = start + draws[i].latency;
      last = std::max(last, *it);
    }
    vm.async_wall_time = last;
    vm.async_idle_ratio = (W * last - busy) / (W * last);
  }
  vm.speedup = vm.naive_wall_time / vm.async_wall_time;
  vm.normalized_idle_time = (cfg.num_workers * vm.async_wall_time - busy) /
                            (cfg.num_workers * vm.naive_wall_time - busy);
  return vm;
}

}  // namespace rlsim
