#include "rlsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rlsim/rng.hpp"

namespace rlsim {

using nlohmann::json;

void SyntheticTaskSpec::validate() const {
  if (math_count < 0 || code_count < 0 || hard_code_count < 0)
    throw std::invalid_argument("negative problem counts");
  if (total() < 1) throw std::invalid_argument("dataset must have at least one problem");
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  if (level_count < 1) throw std::invalid_argument("level_count must be >= 1");
  if ((code_count > 0 && level_count > tests_per_code_problem) ||
      (hard_code_count > 0 && level_count > hard_sequence_length))
    throw std::invalid_argument("impossible spec: more levels than tests per problem");
  if (code_count > 0 && tests_per_code_problem < 3)
    throw std::invalid_argument("code problems need at least 3 tests");
  if (hard_code_count > 0 && hard_sequence_length < 3)
    throw std::invalid_argument("hard problems need at least 3 positions");
  if (prior_alpha <= 0.0 || prior_beta <= 0.0)
    throw std::invalid_argument("prior parameters must be positive");
  if (gold_majority_bias < 0.0 || gold_majority_bias > 1.0)
    throw std::invalid_argument("gold_majority_bias outside [0,1]");
}

void ExperimentSpec::validate() const {
  synth.validate();
  grpo.validate();
  sim.validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("seeds must be nonempty");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha outside [0,1]");
  if (difficulty_pool_size < 1) throw std::invalid_argument("difficulty_pool_size must be >= 1");
}

namespace {

std::string join_tokens(const std::vector<int>& toks, char sep) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(sep);
    out += std::to_string(toks[i]);
  }
  return out;
}

// Accepted-set size for test position j. The first positions get the larger
// sets so every problem spans all initial pass-rate strata.
int accepted_size(int j, int vocab) {
  int cap = std::min(3, vocab - 1);
  return std::max(1, cap - j);
}

TestCase make_membership_test(int pos, int accepted, int vocab, Rng& rng) {
  TestCase t;
  t.id = "t" + std::to_string(pos);
  t.input = std::to_string(pos);
  std::vector<int> all(vocab);
  for (int v = 0; v < vocab; ++v) all[v] = v;
  for (int v = vocab - 1; v > 0; --v) std::swap(all[v], all[rng.uniform_int(v + 1)]);
  std::vector<int> chosen(all.begin(), all.begin() + accepted);
  std::sort(chosen.begin(), chosen.end());
  t.expected = join_tokens(chosen, ',');
  t.sim_pass_prob = static_cast<double>(accepted) / vocab;
  return t;
}

}  // namespace

std::vector<ProblemSpec> generate_dataset(const SyntheticTaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(hash_combine(seed, 0xDA7AULL));
  std::vector<ProblemSpec> out;

  for (int i = 0; i < spec.math_count; ++i) {
    ProblemSpec p;
    p.id = "math-" + std::to_string(i);
    p.domain = Domain::kMath;
    int len = 1 + rng.uniform_int(2);
    std::vector<int> gold(len);
    // Gold tokens share a majority choice so the shared logit table carries
    // real signal across problems; removing trained problems lets it drift.
    for (int j = 0; j < len; ++j)
      gold[j] = rng.uniform() < spec.gold_majority_bias
                    ? 0
                    : 1 + rng.uniform_int(spec.vocab_size - 1);
    p.gold_answer = join_tokens(gold, ' ');
    p.difficulty_prior = rng.beta(spec.prior_alpha, spec.prior_beta);
    out.push_back(std::move(p));
  }
  for (int i = 0; i < spec.code_count; ++i) {
    ProblemSpec p;
    p.id = "code-" + std::to_string(i);
    p.domain = Domain::kCode;
    for (int j = 0; j < spec.tests_per_code_problem; ++j) {
      int sz = accepted_size(j % std::min(3, spec.vocab_size - 1 < 3 ? spec.vocab_size - 1 : 3),
                             spec.vocab_size);
      p.tests.push_back(make_membership_test(j, sz, spec.vocab_size, rng));
    }
    p.difficulty_prior = rng.beta(spec.prior_alpha, spec.prior_beta);
    out.push_back(std::move(p));
  }
  for (int i = 0; i < spec.hard_code_count; ++i) {
    ProblemSpec p;
    p.id = "codeh-" + std::to_string(i);
    p.domain = Domain::kCode;
    for (int j = 0; j < spec.hard_sequence_length; ++j) {
      // Two easier leading tests, singletons after that: stratified rates but
      // a vanishing full-pass probability.
      int sz = j == 0 ? std::min(3, spec.vocab_size - 1) : (j == 1 ? std::min(2, spec.vocab_size - 1) : 1);
      p.tests.push_back(make_membership_test(j, sz, spec.vocab_size, rng));
    }
    p.difficulty_prior = rng.beta(spec.prior_alpha, spec.prior_beta) * 0.2;
    out.push_back(std::move(p));
  }
  return out;
}

bool is_hard_problem(const ProblemSpec& p) { return p.id.rfind("codeh-", 0) == 0; }

std::vector<int> parse_token_answer(const std::string& answer) {
  std::vector<int> toks;
  std::istringstream in(answer);
  int v;
  while (in >> v) toks.push_back(v);
  return toks;
}

std::string format_token_answer(const std::vector<int>& tokens) {
  return join_tokens(tokens, ' ');
}

int problem_sequence_length(const ProblemSpec& p) {
  if (p.domain == Domain::kMath) return static_cast<int>(parse_token_answer(p.gold_answer).size());
  int max_pos = 0;
  for (const auto& t : p.tests) max_pos = std::max(max_pos, std::stoi(t.input));
  return max_pos + 1;
}

std::vector<bool> execute_tests(const ProblemSpec& problem, const std::vector<int>& tokens) {
  std::vector<bool> passed;
  passed.reserve(problem.tests.size());
  for (const auto& t : problem.tests) {
    int pos = std::stoi(t.input);
    bool ok = false;
    if (pos >= 0 && pos < static_cast<int>(tokens.size())) {
      std::istringstream in(t.expected);
      std::string piece;
      while (std::getline(in, piece, ','))
        if (std::stoi(piece) == tokens[pos]) { ok = true; break; }
    }
    passed.push_back(ok);
  }
  return passed;
}

DatasetSimWorkload::DatasetSimWorkload(const std::vector<ProblemSpec>& problems,
                                       SamplerState* sampler, const SimConfig& cfg, int step)
    : sampler_(sampler), cfg_(cfg), step_(step) {
  for (const auto& p : problems) by_id_[p.id] = &p;
}

std::string DatasetSimWorkload::next_problem(long) { return sampler_->sample_next_problem(); }

Workload::TaskDraw DatasetSimWorkload::draw_task(const std::string& problem_id,
                                                 long launch_index) {
  auto it = by_id_.find(problem_id);
  if (it == by_id_.end()) throw std::runtime_error("unknown problem: " + problem_id);
  const ProblemSpec& p = *it->second;
  Rng rng(hash_combine(hash_combine(cfg_.seed, 0xD5ULL + step_),
                       static_cast<std::uint64_t>(launch_index)));
  TaskDraw d;
  d.group.problem_id = problem_id;
  double q = p.difficulty_prior;
  double max_len = 0.0;
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
  d.duration = max_len / cfg_.decode_rate;
  d.reward_latency = p.domain == Domain::kCode
      ? rng.lognormal(std::log(cfg_.code_latency_median), cfg_.code_latency_sigma)
      : cfg_.math_reward_latency;
  return d;
}

void DatasetSimWorkload::on_classified(const std::string& problem_id, GroupClass cls) {
  sampler_->record_class(problem_id, cls);
}

namespace {

// Live workload: rollouts actually sample the frozen old policy; durations
// become virtual time so the scheduler core runs unchanged.
class LiveWorkload : public Workload {
 public:
  LiveWorkload(const std::map<std::string, const ProblemSpec*>& by_id,
               const std::map<std::string, DifficultyGrouping>& groupings,
               SamplerState* sampler, const ToyPolicy& old_policy, const RewardScheme& scheme,
               const SimConfig& cfg, EasyDataPolicy easy_policy, std::uint64_t seed, int iteration)
      : by_id_(by_id), groupings_(groupings), sampler_(sampler), old_policy_(old_policy),
        scheme_(scheme), cfg_(cfg), easy_policy_(easy_policy), seed_(seed),
        iteration_(iteration) {}

  std::string next_problem(long) override { return sampler_->sample_next_problem(); }

  TaskDraw draw_task(const std::string& problem_id, long launch_index) override {
    const ProblemSpec& p = *by_id_.at(problem_id);
    int len = problem_sequence_length(p);
    std::uint64_t state = hash_combine(hash_combine(hash_string(seed_, problem_id), iteration_),
                                       static_cast<std::uint64_t>(launch_index));
    const DifficultyGrouping* grouping = nullptr;
    if (auto git = groupings_.find(problem_id); git != groupings_.end()) grouping = &git->second;

    TaskDraw d;
    d.group.problem_id = problem_id;
    for (int i = 0; i < cfg_.group_size; ++i) {
      std::vector<int> toks = old_policy_.sample_sequence(problem_id, len, state);
      Response r;
      r.problem_id = problem_id;
      r.token_length = len;
      r.answer = format_token_answer(toks);
      if (p.domain == Domain::kCode) r.test_passed = execute_tests(p, toks);
      r.reward = score_response(r, p, scheme_, grouping);
      reward_sum += *r.reward;
      ++reward_count;
      if (is_hard_problem(p) && *r.reward > 0.0) hard_with_signal.insert(problem_id);
      d.group.responses.push_back(std::move(r));
    }
    d.duration = static_cast<double>(len) / cfg_.decode_rate;
    d.reward_latency = p.domain == Domain::kCode ? cfg_.code_latency_median
                                                 : cfg_.math_reward_latency;
    return d;
  }

  void on_classified(const std::string& problem_id, GroupClass cls) override {
    sampler_->record_class(problem_id, cls);
    if (easy_policy_ == EasyDataPolicy::kDelete && cls == GroupClass::kRouteToEasyPool)
      sampler_->remove_problem(problem_id);
  }

  double reward_sum = 0.0;
  long reward_count = 0;
  std::set<std::string> hard_with_signal;

 private:
  const std::map<std::string, const ProblemSpec*>& by_id_;
  const std::map<std::string, DifficultyGrouping>& groupings_;
  SamplerState* sampler_;
  const ToyPolicy& old_policy_;
  const RewardScheme& scheme_;
  const SimConfig& cfg_;
  EasyDataPolicy easy_policy_;
  std::uint64_t seed_;
  int iteration_;
};

}  // namespace

ToyTrainingResult run_toy_training(const ExperimentSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<ProblemSpec> problems = spec.dataset_path.empty()
      ? generate_dataset(spec.synth, seed)
      : load_dataset(spec.dataset_path);
  auto violations = validate_dataset(problems);
  if (!violations.empty()) throw std::runtime_error("invalid dataset: " + violations.front());

  int max_pos = 1;
  for (const auto& p : problems) max_pos = std::max(max_pos, problem_sequence_length(p));
  ToyPolicy policy(spec.synth.vocab_size, max_pos);
  std::map<std::string, const ProblemSpec*> by_id;
  std::vector<std::string> ids;
  for (const auto& p : problems) {
    policy.register_problem(p.id);
    by_id[p.id] = &p;
    ids.push_back(p.id);
  }

  // Offline difficulty assignment from an initial-policy solution pool.
  std::map<std::string, DifficultyGrouping> groupings;
  if (spec.scheme.kind != RewardSchemeKind::kBinaryAllTests) {
    for (const auto& p : problems) {
      if (p.domain != Domain::kCode) continue;
      std::uint64_t state = hash_string(hash_combine(seed, 0xB001ULL), p.id);
      std::vector<Response> pool;
      int len = problem_sequence_length(p);
      for (int i = 0; i < spec.difficulty_pool_size; ++i) {
        Response r;
        r.problem_id = p.id;
        r.test_passed = execute_tests(p, policy.sample_sequence(p.id, len, state));
        pool.push_back(std::move(r));
      }
      auto rates = estimate_pass_rates(p, pool);
      groupings.emplace(p.id, assign_difficulty_levels(p.id, rates, spec.scheme.level_count,
                                                       spec.scheme.binning));
    }
  }

  SamplerState sampler(ids, spec.alpha, hash_combine(seed, 0x5A3FULL));
  SimConfig cfg = spec.sim;
  cfg.batch_size = spec.grpo.train_batch_size;
  cfg.group_size = std::max(cfg.group_size, 2);
  cfg.seed = seed;

  ToyTrainingResult result;
  std::set<std::string> hard_signal;
  for (const auto& p : problems)
    if (is_hard_problem(p)) ++result.hard_problem_count;

  PassStats carry{cfg.initial_invalid_rate / 2.0, cfg.initial_invalid_rate / 2.0};
  for (int iter = 0; iter < spec.iterations; ++iter) {
    ToyPolicy old_policy = policy;  // snapshot once per iteration
    LiveWorkload wl(by_id, groupings, &sampler, old_policy, spec.scheme, cfg,
                    spec.easy_policy, seed, iter);
    sampler.begin_step();
    StepResult step = run_step(cfg, iter, &wl, &carry);

    std::vector<TrainGroup> batch;
    for (const auto& g : step.batch) {
      TrainGroup tg;
      tg.problem_id = g.problem_id;
      for (const auto& r : g.responses) {
        TrainSample s;
        s.problem_id = g.problem_id;
        s.tokens = parse_token_answer(r.answer);
        s.reward = *r.reward;
        for (size_t j = 0; j < s.tokens.size(); ++j)
          s.old_log_probs.push_back(old_policy.log_prob(g.problem_id, static_cast<int>(j),
                                                        s.tokens[j]));
        tg.samples.push_back(std::move(s));
      }
      batch.push_back(std::move(tg));
    }
    IterationStats stats = train_iteration(policy, batch, spec.grpo);

    // Fixed eval pass over the full original dataset, deleted problems
    // included: measures the policy, not the sampling mix.
    double eval_sum = 0.0;
    long eval_n = 0;
    for (const auto& p : problems) {
      std::uint64_t state = hash_string(hash_combine(hash_combine(seed, 0xE7A1ULL), iter), p.id);
      int len = problem_sequence_length(p);
      const DifficultyGrouping* grouping = nullptr;
      if (auto git = groupings.find(p.id); git != groupings.end()) grouping = &git->second;
      for (int i = 0; i < cfg.group_size; ++i) {
        std::vector<int> toks = policy.sample_sequence(p.id, len, state);
        Response r;
        r.problem_id = p.id;
        r.token_length = len;
        r.answer = format_token_answer(toks);
        if (p.domain == Domain::kCode) r.test_passed = execute_tests(p, toks);
        eval_sum += score_response(r, p, spec.scheme, grouping);
        ++eval_n;
      }
    }

    IterationRecord rec;
    rec.iteration = iter;
    rec.mean_reward = wl.reward_count > 0 ? wl.reward_sum / wl.reward_count : 0.0;
    rec.eval_mean_reward = eval_sum / eval_n;
    rec.batch_mean_reward = stats.mean_reward;
    rec.clip_fraction = stats.clip_fraction;
    rec.entropy = stats.entropy;
    rec.pool_size = static_cast<int>(sampler.easy_pool().size());
    rec.active_size = static_cast<int>(sampler.active().size());
    rec.generated_groups = step.metrics.launched;
    rec.waste_ratio = step.metrics.sample_waste_ratio;
    result.iterations.push_back(rec);
    hard_signal.insert(wl.hard_with_signal.begin(), wl.hard_with_signal.end());
  }
  result.hard_problems_with_signal = static_cast<int>(hard_signal.size());
  result.final_mean_reward = result.iterations.back().mean_reward;
  return result;
}

// ---------------------------------------------------------------------------
// Config and report I/O.

ExperimentSpec default_toy_spec() {
  ExperimentSpec spec;
  spec.sim.num_workers = 8;
  spec.sim.reward_servers = 4;
  spec.sim.group_size = 8;
  spec.sim.decode_rate = 100.0;
  spec.sim.math_reward_latency = 0.01;
  spec.sim.code_latency_median = 0.05;
  spec.grpo.train_batch_size = 8;
  spec.grpo.mini_batch_size = 8;
  spec.grpo.grad_updates_per_iteration = 2;
  spec.grpo.learning_rate = 8.0;
  spec.scheme.kind = RewardSchemeKind::kSoft;
  spec.scheme.level_count = 3;
  spec.scheme.binning = BinningMode::kQuantile;
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  ExperimentSpec s = default_toy_spec();
  if (j.value("config_version", 1) != 1) throw std::runtime_error("unsupported config version");
  s.name = j.value("name", s.name);
  if (j.contains("sim")) {
    const auto& sj = j["sim"];
    auto& c = s.sim;
    c.num_workers = sj.value("num_workers", c.num_workers);
    c.reward_servers = sj.value("reward_servers", c.reward_servers);
    c.decode_rate = sj.value("decode_rate", c.decode_rate);
    c.length_median_tokens = sj.value("length_median_tokens", c.length_median_tokens);
    c.length_sigma = sj.value("length_sigma", c.length_sigma);
    c.max_tokens = sj.value("max_tokens", c.max_tokens);
    c.math_reward_latency = sj.value("math_reward_latency", c.math_reward_latency);
    c.code_latency_median = sj.value("code_latency_median", c.code_latency_median);
    c.code_latency_sigma = sj.value("code_latency_sigma", c.code_latency_sigma);
    c.code_fraction = sj.value("code_fraction", c.code_fraction);
    c.pass_mean = sj.value("pass_mean", c.pass_mean);
    c.pass_concentration = sj.value("pass_concentration", c.pass_concentration);
    c.batch_size = sj.value("batch_size", c.batch_size);
    c.group_size = sj.value("group_size", c.group_size);
    c.demand_floor = sj.value("demand_floor", c.demand_floor);
    c.stat_smoothing = sj.value("stat_smoothing", c.stat_smoothing);
    c.initial_invalid_rate = sj.value("initial_invalid_rate", c.initial_invalid_rate);
    c.train_update_time = sj.value("train_update_time", c.train_update_time);
    c.time_budget = sj.value("time_budget", c.time_budget);
    if (sj.contains("mode")) c.mode = mode_from_string(sj["mode"].get<std::string>());
  }
  if (j.contains("grpo")) {
    const auto& gj = j["grpo"];
    auto& g = s.grpo;
    g.eps_low = gj.value("eps_low", g.eps_low);
    g.eps_high = gj.value("eps_high", g.eps_high);
    g.learning_rate = gj.value("learning_rate", g.learning_rate);
    g.train_batch_size = gj.value("train_batch_size", g.train_batch_size);
    g.mini_batch_size = gj.value("mini_batch_size", g.mini_batch_size);
    g.grad_updates_per_iteration = gj.value("grad_updates_per_iteration", g.grad_updates_per_iteration);
    g.std_guard = gj.value("std_guard", g.std_guard);
  }
  if (j.contains("reward")) {
    const auto& rj = j["reward"];
    if (rj.contains("scheme")) s.scheme.kind = scheme_from_string(rj["scheme"].get<std::string>());
    s.scheme.level_count = rj.value("level_count", s.scheme.level_count);
    if (rj.value("binning", std::string("equal_width")) == "quantile")
      s.scheme.binning = BinningMode::kQuantile;
  }
  if (j.contains("synth")) {
    const auto& yj = j["synth"];
    auto& y = s.synth;
    y.math_count = yj.value("math_count", y.math_count);
    y.code_count = yj.value("code_count", y.code_count);
    y.hard_code_count = yj.value("hard_code_count", y.hard_code_count);
    y.vocab_size = yj.value("vocab_size", y.vocab_size);
    y.tests_per_code_problem = yj.value("tests_per_code_problem", y.tests_per_code_problem);
    y.hard_sequence_length = yj.value("hard_sequence_length", y.hard_sequence_length);
    y.level_count = yj.value("level_count", y.level_count);
    y.prior_alpha = yj.value("prior_alpha", y.prior_alpha);
    y.prior_beta = yj.value("prior_beta", y.prior_beta);
    y.gold_majority_bias = yj.value("gold_majority_bias", y.gold_majority_bias);
  }
  s.dataset_path = j.value("dataset_path", s.dataset_path);
  s.iterations = j.value("iterations", s.iterations);
  if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  s.alpha = j.value("alpha", s.alpha);
  if (j.value("easy_policy", std::string("resample")) == "delete")
    s.easy_policy = EasyDataPolicy::kDelete;
  s.difficulty_pool_size = j.value("difficulty_pool_size", s.difficulty_pool_size);
  s.validate();
  return s;
}

void save_experiment_spec(const ExperimentSpec& spec, const std::string& path) {
  json j;
  j["config_version"] = 1;
  j["name"] = spec.name;
  j["sim"] = {{"num_workers", spec.sim.num_workers},
              {"reward_servers", spec.sim.reward_servers},
              {"decode_rate", spec.sim.decode_rate},
              {"length_median_tokens", spec.sim.length_median_tokens},
              {"length_sigma", spec.sim.length_sigma},
              {"max_tokens", spec.sim.max_tokens},
              {"math_reward_latency", spec.sim.math_reward_latency},
              {"code_latency_median", spec.sim.code_latency_median},
              {"code_latency_sigma", spec.sim.code_latency_sigma},
              {"code_fraction", spec.sim.code_fraction},
              {"pass_mean", spec.sim.pass_mean},
              {"pass_concentration", spec.sim.pass_concentration},
              {"batch_size", spec.sim.batch_size},
              {"group_size", spec.sim.group_size},
              {"demand_floor", spec.sim.demand_floor},
              {"stat_smoothing", spec.sim.stat_smoothing},
              {"initial_invalid_rate", spec.sim.initial_invalid_rate},
              {"train_update_time", spec.sim.train_update_time},
              {"time_budget", spec.sim.time_budget},
              {"mode", to_string(spec.sim.mode)}};
  j["grpo"] = {{"eps_low", spec.grpo.eps_low},
               {"eps_high", spec.grpo.eps_high},
               {"learning_rate", spec.grpo.learning_rate},
               {"train_batch_size", spec.grpo.train_batch_size},
               {"mini_batch_size", spec.grpo.mini_batch_size},
               {"grad_updates_per_iteration", spec.grpo.grad_updates_per_iteration},
               {"std_guard", spec.grpo.std_guard}};
  j["reward"] = {{"scheme", to_string(spec.scheme.kind)},
                 {"level_count", spec.scheme.level_count},
                 {"binning", spec.scheme.binning == BinningMode::kQuantile ? "quantile" : "equal_width"}};
  j["synth"] = {{"math_count", spec.synth.math_count},
                {"code_count", spec.synth.code_count},
                {"hard_code_count", spec.synth.hard_code_count},
                {"vocab_size", spec.synth.vocab_size},
                {"tests_per_code_problem", spec.synth.tests_per_code_problem},
                {"hard_sequence_length", spec.synth.hard_sequence_length},
                {"level_count", spec.synth.level_count},
                {"prior_alpha", spec.synth.prior_alpha},
                {"prior_beta", spec.synth.prior_beta},
                {"gold_majority_bias", spec.synth.gold_majority_bias}};
  j["dataset_path"] = spec.dataset_path;
  j["iterations"] = spec.iterations;
  j["seeds"] = spec.seeds;
  j["alpha"] = spec.alpha;
  j["easy_policy"] = spec.easy_policy == EasyDataPolicy::kDelete ? "delete" : "resample";
  j["difficulty_pool_size"] = spec.difficulty_pool_size;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << j.dump(2) << "\n";
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_training_csv(const ToyTrainingResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "iteration,mean_reward,eval_mean_reward,batch_mean_reward,clip_fraction,entropy,pool_size,"
         "active_size,generated_groups,waste_ratio\n";
  for (const auto& r : result.iterations) {
    out << r.iteration << ',' << fmt(r.mean_reward) << ',' << fmt(r.eval_mean_reward) << ','
        << fmt(r.batch_mean_reward) << ','
        << fmt(r.clip_fraction) << ',' << fmt(r.entropy) << ',' << r.pool_size << ','
        << r.active_size << ',' << r.generated_groups << ',' << fmt(r.waste_ratio) << "\n";
  }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "mode,overall_speedup,rollout_speedup,normalized_idle_time,gpu_idle_ratio,"
         "sample_waste_ratio\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << fmt(r.overall_speedup) << ',' << fmt(r.rollout_speedup)
        << ',' << fmt(r.normalized_idle_time) << ',' << fmt(r.gpu_idle_ratio) << ','
        << (r.waste_defined ? fmt(r.sample_waste_ratio) : std::string("/")) << "\n";
  }
}

std::vector<AblationRow> read_ablation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty metrics file: " + path);
  const std::string expected =
      "mode,overall_speedup,rollout_speedup,normalized_idle_time,gpu_idle_ratio,"
      "sample_waste_ratio";
  if (header != expected) throw std::runtime_error("missing columns in " + path);
  std::vector<AblationRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    AblationRow r;
    std::getline(ls, field, ',');
    r.mode = mode_from_string(field);
    std::getline(ls, field, ',');
    r.overall_speedup = std::stod(field);
    std::getline(ls, field, ',');
    r.rollout_speedup = std::stod(field);
    std::getline(ls, field, ',');
    r.normalized_idle_time = std::stod(field);
    std::getline(ls, field, ',');
    r.gpu_idle_ratio = std::stod(field);
    std::getline(ls, field, ',');
    if (field == "/") {
      r.waste_defined = false;
    } else {
      r.sample_waste_ratio = std::stod(field);
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("empty metrics file: " + path);
  return rows;
}

namespace {

std::string row_label(EngineMode m) {
  switch (m) {
    case EngineMode::kStatic: return "Static Sampling";
    case EngineMode::kNaiveDynamic: return "Naive Dynamic Sampling";
    case EngineMode::kSeamlessNoAsyncNoEarlyTerm: return "+ Continuous Rollout";
    case EngineMode::kSeamlessNoEarlyTerm: return "+ Async Reward";
    case EngineMode::kSeamless: return "+ Early Termination";
  }
  return "?";
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
  return buf;
}

std::string times(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2fx", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_report(const std::vector<AblationRow>& rows) {
  if (rows.empty()) throw std::runtime_error("no metrics to report");
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method", "Overall Speedup", "Rollout Speedup", "Normalized GPU Idle Time",
                   "GPU Idle Ratio", "Sample Waste Ratio"});
  for (const auto& r : rows) {
    cells.push_back({row_label(r.mode), times(r.overall_speedup), times(r.rollout_speedup),
                     num(r.normalized_idle_time), pct(r.gpu_idle_ratio),
                     r.waste_defined ? pct(r.sample_waste_ratio) : std::string("/")});
  }
  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (size_t i = 0; i < cells.size(); ++i) {
    for (size_t c = 0; c < cells[i].size(); ++c) {
      out << cells[i][c] << std::string(width[c] - cells[i][c].size(), ' ');
      out << (c + 1 < cells[i].size() ? "  " : "");
    }
    out << "\n";
    if (i == 0) {
      size_t total = 0;
      for (size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

std::string render_validation_report(const ValidationMetrics& vm) {
  std::ostringstream out;
  out << "Method                  Speedup  Normalized GPU Idle Time  GPU Idle Ratio\n";
  out << "--------------------------------------------------------------------------\n";
  out << "Naive Validation        1.00x    1.00                      " << pct(vm.naive_idle_ratio)
      << "\n";
  out << "Streaming Async Reward  " << times(vm.speedup) << "    " << num(vm.normalized_idle_time)
      << "                      " << pct(vm.async_idle_ratio) << "\n";
  return out.str();
}

PrefilterOutcome run_prefilter(const std::vector<ProblemSpec>& problems, int rollouts,
                               double easy_threshold, std::uint64_t seed) {
  if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
  PrefilterOutcome out;
  for (const auto& p : problems) {
    Rng rng(hash_string(hash_combine(seed, 0xF117ULL), p.id));
    int k = rng.binomial(rollouts, p.difficulty_prior);
    // Advanced-solver pool: a stronger model with two independent tries'
    // worth of the prior per rollout.
    double solver_q = 1.0 - (1.0 - p.difficulty_prior) * (1.0 - p.difficulty_prior);
    int solver_k = rng.binomial(rollouts, solver_q);
    switch (difficulty_prefilter(k, rollouts, solver_k, easy_threshold)) {
      case PrefilterDecision::kKeep:
        out.kept.push_back(p);
        break;
      case PrefilterDecision::kDropEasy:
        ++out.dropped_easy;
        break;
      case PrefilterDecision::kDropUnsolvable:
        ++out.dropped_unsolvable;
        break;
    }
  }
  return out;
}

}  // namespace rlsim
