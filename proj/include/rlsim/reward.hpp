#ifndef RLSIM_REWARD_HPP_
#define RLSIM_REWARD_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rlsim/core.hpp"

namespace rlsim {

// Partition of a problem's tests into difficulty levels. Level 1 is the
// easiest (highest pass rates); every test of level l has pass rate >= every
// test of level l+1.
struct DifficultyLevel {
  int index = 0;               // 1-based
  std::vector<std::string> test_ids;
  double weight = 0.0;         // score share, weights sum to 1
};

struct DifficultyGrouping {
  std::string problem_id;
  std::vector<DifficultyLevel> levels;
  std::map<std::string, double> pass_rates;

  int level_count() const { return static_cast<int>(levels.size()); }
};

enum class RewardSchemeKind { kBinaryAllTests, kStrict, kSoft };

enum class BinningMode { kEqualWidth, kQuantile };

struct RewardScheme {
  RewardSchemeKind kind = RewardSchemeKind::kBinaryAllTests;
  int level_count = 3;
  BinningMode binning = BinningMode::kEqualWidth;
};

std::string to_string(RewardSchemeKind k);
RewardSchemeKind scheme_from_string(const std::string& s);

// Rule-based answer equivalence: normalized string match, then numeric
// comparison (decimals and integer fractions "a/b") within 1e-9 relative.
// Symbolic equivalence is out of scope.
bool math_verify(const std::string& answer, const std::string& gold);

// Per-test pass rate over a pool of scored solutions. Every response must
// carry a full pass bit-vector for the problem.
std::map<std::string, double> estimate_pass_rates(const ProblemSpec& problem,
                                                  const std::vector<Response>& pool);

// Cluster tests into L levels by pass rate. Equal-width mode bins on
// ((L-l)/L, (L-l+1)/L] with p=0 in level L and rejects empty levels;
// quantile mode splits the rate-sorted tests into L contiguous chunks.
// Weights default to uniform 1/L unless `weights` is given.
DifficultyGrouping assign_difficulty_levels(
    const std::string& problem_id, const std::map<std::string, double>& pass_rates,
    int level_count, BinningMode mode = BinningMode::kEqualWidth,
    const std::vector<double>& weights = {});

// Sum of level weights over the longest fully-passed prefix of levels.
double strict_reward(const std::set<std::string>& passed,
                     const DifficultyGrouping& grouping);

// Each level's weight split equally among its tests; sum over passed tests.
double soft_reward(const std::set<std::string>& passed,
                   const DifficultyGrouping& grouping);

// Accuracy-only reward. Math: math_verify. Code: all-or-nothing under
// binary_all_tests, otherwise the configured difficulty scheme. No format or
// length terms.
double score_response(const Response& response, const ProblemSpec& problem,
                      const RewardScheme& scheme,
                      const DifficultyGrouping* grouping = nullptr);

}  // namespace rlsim

#endif  // RLSIM_REWARD_HPP_
