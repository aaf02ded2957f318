#include "rlsim/core.hpp"

#include <algorithm>
#include <cstdio>

#include "doctest.h"
#include "rlsim/rng.hpp"

using namespace rlsim;

namespace {

ResponseGroup group_with_rewards(const std::vector<double>& rewards) {
  ResponseGroup g;
  g.problem_id = "p";
  for (double r : rewards) {
    Response resp;
    resp.problem_id = "p";
    resp.token_length = 1;
    resp.reward = r;
    g.responses.push_back(resp);
  }
  return g;
}

}  // namespace

TEST_CASE("pass_rate basic cases") {
  CHECK(pass_rate(group_with_rewards({1, 1, 1, 1})) == 1.0);
  CHECK(pass_rate(group_with_rewards({0, 0, 0, 0})) == 0.0);
  // Only exact 1.0 counts as a pass.
  CHECK(pass_rate(group_with_rewards({1, 0.5, 0, 1})) == 0.5);
}

TEST_CASE("pass_rate rejects unscored groups") {
  ResponseGroup g = group_with_rewards({1, 0});
  g.responses[1].reward.reset();
  CHECK_THROWS_WITH(pass_rate(g), "unscored group");
}

TEST_CASE("pass_rate is permutation invariant and pass_rate * G is integral") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + rng.uniform_int(15);
    std::vector<double> rewards(n);
    for (auto& r : rewards) r = rng.uniform_int(3) == 0 ? 1.0 : rng.uniform();
    ResponseGroup g = group_with_rewards(rewards);
    double p = pass_rate(g);
    double scaled = p * n;
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
    std::vector<double> shuffled = rewards;
    for (int i = n - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.uniform_int(i + 1)]);
    CHECK(pass_rate(group_with_rewards(shuffled)) == p);
  }
}

TEST_CASE("validate_dataset reports structural violations") {
  ProblemSpec math;
  math.id = "p1";
  math.domain = Domain::kMath;
  math.gold_answer = "42";

  SUBCASE("duplicate ids") {
    ProblemSpec dup = math;
    auto v = validate_dataset({math, dup});
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "duplicate id p1");
  }
  SUBCASE("code problem with no tests") {
    ProblemSpec code;
    code.id = "c1";
    code.domain = Domain::kCode;
    auto v = validate_dataset({code});
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("no tests") != std::string::npos);
  }
  SUBCASE("well formed set is ok") {
    ProblemSpec m2 = math;
    m2.id = "p2";
    ProblemSpec code;
    code.id = "c1";
    code.domain = Domain::kCode;
    TestCase t;
    t.id = "t0";
    t.sim_pass_prob = 0.5;
    code.tests.push_back(t);
    CHECK(validate_dataset({math, m2, code}).empty());
  }
}

TEST_CASE("dataset JSONL round trip") {
  ProblemSpec math;
  math.id = "m0";
  math.domain = Domain::kMath;
  math.gold_answer = "1/2";
  math.difficulty_prior = 0.25;

  ProblemSpec code;
  code.id = "c0";
  code.domain = Domain::kCode;
  code.difficulty_prior = 0.75;
  TestCase t;
  t.id = "t0";
  t.input = "0";
  t.expected = "1,2";
  t.sim_pass_prob = 0.5;
  t.level = 2;
  code.tests.push_back(t);

  std::string path = "round_trip_test.jsonl";
  save_dataset({math, code}, path);
  auto loaded = load_dataset(path);
  std::remove(path.c_str());

  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "m0");
  CHECK(loaded[0].gold_answer == "1/2");
  CHECK(loaded[0].difficulty_prior == 0.25);
  CHECK(loaded[1].domain == Domain::kCode);
  REQUIRE(loaded[1].tests.size() == 1);
  CHECK(loaded[1].tests[0].expected == "1,2");
  CHECK(loaded[1].tests[0].level == 2);
  // Serialization is stable.
  CHECK(problem_to_json(loaded[1]) == problem_to_json(code));
}
