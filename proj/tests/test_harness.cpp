#include "rlsim/harness.hpp"

#include <cstdio>
#include <fstream>

#include "doctest.h"

using namespace rlsim;

TEST_CASE("generate_dataset is deterministic and well formed") {
  SyntheticTaskSpec spec;
  auto a = generate_dataset(spec, 9);
  auto b = generate_dataset(spec, 9);
  REQUIRE(a.size() == static_cast<size_t>(spec.total()));
  CHECK(validate_dataset(a).empty());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].difficulty_prior == b[i].difficulty_prior);
    CHECK(problem_to_json(a[i]) == problem_to_json(b[i]));
  }

  int math = 0, code = 0, hard = 0;
  for (const auto& p : a) {
    if (p.domain == Domain::kMath) {
      ++math;
      CHECK_FALSE(p.gold_answer.empty());
      CHECK(p.tests.empty());
    } else if (is_hard_problem(p)) {
      ++hard;
      CHECK(static_cast<int>(p.tests.size()) == spec.hard_sequence_length);
      CHECK(problem_sequence_length(p) == spec.hard_sequence_length);
    } else {
      ++code;
      CHECK(static_cast<int>(p.tests.size()) == spec.tests_per_code_problem);
    }
    CHECK(p.difficulty_prior > 0.0);
    CHECK(p.difficulty_prior < 1.0);
  }
  CHECK(math == spec.math_count);
  CHECK(code == spec.code_count);
  CHECK(hard == spec.hard_code_count);

  auto c = generate_dataset(spec, 10);
  bool any_prior_differs = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].difficulty_prior != c[i].difficulty_prior) any_prior_differs = true;
  CHECK(any_prior_differs);
}

TEST_CASE("token answers round trip") {
  CHECK(parse_token_answer("0 3 1") == std::vector<int>{0, 3, 1});
  CHECK(format_token_answer({2}) == "2");
  CHECK(format_token_answer({1, 2, 3}) == "1 2 3");
  CHECK(parse_token_answer(format_token_answer({1, 2, 3})) == std::vector<int>{1, 2, 3});
  CHECK(parse_token_answer("").empty());
}

TEST_CASE("execute_tests checks per-position membership") {
  ProblemSpec p;
  p.id = "c";
  p.domain = Domain::kCode;
  TestCase t0;
  t0.id = "t0";
  t0.input = "0";
  t0.expected = "1,2";
  TestCase t1;
  t1.id = "t1";
  t1.input = "1";
  t1.expected = "3";
  p.tests = {t0, t1};

  CHECK(execute_tests(p, {1, 3}) == std::vector<bool>{true, true});
  CHECK(execute_tests(p, {2, 0}) == std::vector<bool>{true, false});
  CHECK(execute_tests(p, {0, 3}) == std::vector<bool>{false, true});
  // Too-short responses fail the out-of-range positions.
  CHECK(execute_tests(p, {1}) == std::vector<bool>{true, false});
}

TEST_CASE("simulated prefilter drops easy and unsolvable problems") {
  SyntheticTaskSpec spec;
  auto data = generate_dataset(spec, 3);
  // Pin extremes so both drop reasons trigger.
  data[0].difficulty_prior = 0.999;  // near-always solved
  data[1].difficulty_prior = 1e-9;   // unsolvable even for the solver pool

  auto out = run_prefilter(data, 64, 0.9, 17);
  CHECK(out.dropped_easy >= 1);
  CHECK(out.dropped_unsolvable >= 1);
  CHECK(out.kept.size() + out.dropped_easy + out.dropped_unsolvable == data.size());
  for (const auto& p : out.kept) {
    CHECK(p.id != data[0].id);
    CHECK(p.id != data[1].id);
  }
}

TEST_CASE("experiment spec JSON round trip") {
  ExperimentSpec spec = default_toy_spec();
  spec.name = "round-trip";
  spec.iterations = 7;
  spec.alpha = 0.25;
  spec.easy_policy = EasyDataPolicy::kDelete;
  spec.scheme.kind = RewardSchemeKind::kStrict;
  spec.sim.num_workers = 5;
  spec.seeds = {4, 5};

  std::string path = "spec_round_trip.json";
  save_experiment_spec(spec, path);
  ExperimentSpec loaded = load_experiment_spec(path);
  std::remove(path.c_str());

  CHECK(loaded.name == "round-trip");
  CHECK(loaded.iterations == 7);
  CHECK(loaded.alpha == 0.25);
  CHECK(loaded.easy_policy == EasyDataPolicy::kDelete);
  CHECK(loaded.scheme.kind == RewardSchemeKind::kStrict);
  CHECK(loaded.sim.num_workers == 5);
  CHECK(loaded.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK_NOTHROW(loaded.validate());

  CHECK_THROWS(load_experiment_spec("does_not_exist.json"));
}

TEST_CASE("ablation CSV round trip") {
  std::vector<AblationRow> rows;
  AblationRow naive;
  naive.mode = EngineMode::kNaiveDynamic;
  naive.overall_speedup = 1.0;
  naive.rollout_speedup = 1.0;
  naive.normalized_idle_time = 1.0;
  naive.gpu_idle_ratio = 0.693;
  naive.sample_waste_ratio = 0.221;
  naive.total_wall_time = 1234.5;
  naive.total_idle_time = 777.0;
  AblationRow stat;
  stat.mode = EngineMode::kStatic;
  stat.waste_defined = false;
  stat.overall_speedup = 1.1;
  rows = {naive, stat};

  std::string path = "ablation_round_trip.csv";
  write_ablation_csv(rows, path);
  auto loaded = read_ablation_csv(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].mode == EngineMode::kNaiveDynamic);
  CHECK(loaded[0].gpu_idle_ratio == doctest::Approx(0.693));
  CHECK(loaded[0].sample_waste_ratio == doctest::Approx(0.221));
  CHECK_FALSE(loaded[1].waste_defined);
  CHECK(loaded[1].overall_speedup == doctest::Approx(1.1));

  CHECK_THROWS(read_ablation_csv("missing.csv"));
}

TEST_CASE("report renders one row per mode") {
  SimConfig cfg;
  cfg.num_workers = 8;
  cfg.reward_servers = 4;
  cfg.batch_size = 12;
  cfg.group_size = 4;
  cfg.length_median_tokens = 400.0;
  cfg.train_update_time = 5.0;
  cfg.seed = 3;
  auto rows = run_ablation(cfg,
                           {EngineMode::kStatic, EngineMode::kNaiveDynamic,
                            EngineMode::kSeamlessNoAsyncNoEarlyTerm,
                            EngineMode::kSeamlessNoEarlyTerm, EngineMode::kSeamless},
                           2);
  std::string report = render_report(rows);
  CHECK(report.find("Static Sampling") != std::string::npos);
  CHECK(report.find("Naive Dynamic Sampling") != std::string::npos);
  CHECK(report.find("+ Continuous Rollout") != std::string::npos);
  CHECK(report.find("+ Async Reward") != std::string::npos);
  CHECK(report.find("+ Early Termination") != std::string::npos);
  CHECK_THROWS(render_report({}));
}

TEST_CASE("dataset sim workload draws groups through the sampler") {
  SyntheticTaskSpec spec;
  spec.math_count = 10;
  spec.code_count = 4;
  spec.hard_code_count = 2;
  auto data = generate_dataset(spec, 21);

  std::vector<std::string> ids;
  for (const auto& p : data) ids.push_back(p.id);
  SamplerState sampler(ids, 0.1, 77);
  sampler.begin_step();

  SimConfig cfg;
  cfg.num_workers = 2;
  cfg.batch_size = 4;
  cfg.group_size = 4;
  cfg.length_median_tokens = 100.0;
  DatasetSimWorkload wl(data, &sampler, cfg, 0);

  std::string id = wl.next_problem(0);
  CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
  auto d = wl.draw_task(id, 0);
  CHECK(d.duration > 0.0);
  CHECK(d.group.responses.size() == 4);
  for (const auto& r : d.group.responses) {
    REQUIRE(r.reward.has_value());
    CHECK((*r.reward == 0.0 || *r.reward == 1.0));
  }
  wl.on_classified(id, GroupClass::kRouteToEasyPool);
  CHECK(sampler.in_pool(id));
}

TEST_CASE("toy training smoke run produces consistent records") {
  ExperimentSpec spec = default_toy_spec();
  spec.iterations = 3;
  auto result = run_toy_training(spec, 1);
  REQUIRE(result.iterations.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const auto& rec = result.iterations[i];
    CHECK(rec.iteration == i);
    CHECK(rec.mean_reward >= 0.0);
    CHECK(rec.mean_reward <= 1.0);
    CHECK(rec.batch_mean_reward > 0.0);
    CHECK(rec.batch_mean_reward < 1.0);
    CHECK(rec.generated_groups >= spec.grpo.train_batch_size);
    CHECK(rec.active_size + rec.pool_size == spec.synth.total());
  }
  CHECK(result.hard_problem_count == spec.synth.hard_code_count);
  CHECK(result.final_mean_reward == result.iterations.back().mean_reward);

  // Same seed, same trajectory.
  auto again = run_toy_training(spec, 1);
  for (int i = 0; i < 3; ++i)
    CHECK(again.iterations[i].mean_reward == result.iterations[i].mean_reward);

  std::string path = "training_smoke.csv";
  write_training_csv(result, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  in.close();
  std::remove(path.c_str());
  CHECK(header.find("mean_reward") != std::string::npos);
}
