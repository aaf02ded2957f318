#ifndef RLSIM_CORE_HPP_
#define RLSIM_CORE_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlsim {

enum class Domain { kMath, kCode };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

// One verifiable test of a code problem. In live mode `input`/`expected`
// drive the executor; in sim mode `sim_pass_prob` replaces execution.
// `level` is filled in by difficulty assignment, 1 = easiest.
struct TestCase {
  std::string id;
  std::string input;
  std::string expected;
  double sim_pass_prob = 0.0;
  int level = 0;
};

struct ProblemSpec {
  std::string id;
  Domain domain = Domain::kMath;
  std::string gold_answer;       // math only
  std::vector<TestCase> tests;   // code only
  double difficulty_prior = 0.5; // pass-probability prior used by the simulator
};

struct Response {
  std::string problem_id;
  int token_length = 0;
  std::string answer;                 // math outcome
  std::vector<bool> test_passed;      // code outcome, one bit per test
  std::optional<double> reward;       // absent until scored

  bool scored() const { return reward.has_value(); }
};

struct ResponseGroup {
  std::string problem_id;
  std::vector<Response> responses;

  int group_size() const { return static_cast<int>(responses.size()); }
  std::vector<double> rewards() const;
};

// Fraction of responses in the group with reward exactly 1.0. Partial credit
// never counts as a pass. Throws if any response is unscored.
double pass_rate(const ResponseGroup& group);

// Structural checks on a dataset: duplicate ids, code problems without tests,
// math problems without a gold answer, priors outside [0,1]. Violations are
// data, not exceptions.
std::vector<std::string> validate_dataset(const std::vector<ProblemSpec>& problems);

// Line-delimited JSON dataset file, one problem per line.
std::vector<ProblemSpec> load_dataset(const std::string& path);
void save_dataset(const std::vector<ProblemSpec>& problems, const std::string& path);

std::string problem_to_json(const ProblemSpec& p);
ProblemSpec problem_from_json(const std::string& line);

}  // namespace rlsim

#endif  // RLSIM_CORE_HPP_
