#include "rlsim/reward.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace rlsim {

std::string to_string(RewardSchemeKind k) {
  switch (k) {
    case RewardSchemeKind::kBinaryAllTests: return "binary_all_tests";
    case RewardSchemeKind::kStrict: return "strict";
    case RewardSchemeKind::kSoft: return "soft";
  }
  return "?";
}

RewardSchemeKind scheme_from_string(const std::string& s) {
  if (s == "binary_all_tests" || s == "binary") return RewardSchemeKind::kBinaryAllTests;
  if (s == "strict") return RewardSchemeKind::kStrict;
  if (s == "soft") return RewardSchemeKind::kSoft;
  throw std::invalid_argument("unknown reward scheme: " + s);
}

namespace {

std::string normalize(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Parses a plain decimal or an integer fraction "a/b". No symbolic forms.
std::optional<double> parse_numeric(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    long long num = 0, den = 0;
    auto r1 = std::from_chars(s.data(), s.data() + slash, num);
    auto r2 = std::from_chars(s.data() + slash + 1, s.data() + s.size(), den);
    if (r1.ec != std::errc{} || r1.ptr != s.data() + slash) return std::nullopt;
    if (r2.ec != std::errc{} || r2.ptr != s.data() + s.size()) return std::nullopt;
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  }
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace

bool math_verify(const std::string& answer, const std::string& gold) {
  std::string a = normalize(answer);
  std::string g = normalize(gold);
  if (a == g) return true;
  auto av = parse_numeric(a);
  auto gv = parse_numeric(g);
  if (av && gv) {
    double scale = std::max({std::fabs(*av), std::fabs(*gv), 1.0});
    return std::fabs(*av - *gv) <= 1e-9 * scale;
  }
  return false;
}

std::map<std::string, double> estimate_pass_rates(const ProblemSpec& problem,
                                                  const std::vector<Response>& pool) {
  if (pool.empty()) throw std::runtime_error("no solutions");
  const size_t num_tests = problem.tests.size();
  std::vector<int> counts(num_tests, 0);
  for (const auto& r : pool) {
    if (r.test_passed.size() != num_tests)
      throw std::runtime_error("pass bit-vector length mismatch for " + problem.id);
    for (size_t t = 0; t < num_tests; ++t)
      if (r.test_passed[t]) ++counts[t];
  }
  std::map<std::string, double> rates;
  for (size_t t = 0; t < num_tests; ++t)
    rates[problem.tests[t].id] = static_cast<double>(counts[t]) / pool.size();
  return rates;
}

DifficultyGrouping assign_difficulty_levels(const std::string& problem_id,
                                            const std::map<std::string, double>& pass_rates,
                                            int level_count, BinningMode mode,
                                            const std::vector<double>& weights) {
  if (level_count < 1) throw std::invalid_argument("level count must be >= 1");
  if (static_cast<size_t>(level_count) > pass_rates.size())
    throw std::runtime_error("more levels than tests");
  for (const auto& [id, p] : pass_rates)
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("pass rate outside [0,1] for test " + id);

  // Sort by descending pass rate, ties by test id.
  std::vector<std::pair<std::string, double>> sorted(pass_rates.begin(), pass_rates.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  DifficultyGrouping g;
  g.problem_id = problem_id;
  g.pass_rates = pass_rates;
  g.levels.resize(level_count);
  for (int l = 0; l < level_count; ++l) g.levels[l].index = l + 1;

  const int L = level_count;
  if (mode == BinningMode::kEqualWidth) {
    for (const auto& [id, p] : sorted) {
      // Level l covers ((L-l)/L, (L-l+1)/L]; a boundary rate goes to the
      // easier level; p=0 lands in level L.
      int l = L - static_cast<int>(std::ceil(p * L - 1e-12));
      l = std::clamp(l, 0, L - 1);
      if (p == 0.0) l = L - 1;
      g.levels[l].test_ids.push_back(id);
    }
    for (const auto& level : g.levels)
      if (level.test_ids.empty()) throw std::runtime_error("empty difficulty level");
  } else {
    // Blocks of equal pass rate must land in one level; partition the blocks
    // into L contiguous chunks with roughly balanced test counts.
    std::vector<std::vector<std::string>> blocks;
    for (const auto& [id, p] : sorted) {
      if (blocks.empty() || p != pass_rates.at(blocks.back().back()))
        blocks.emplace_back();
      blocks.back().push_back(id);
    }
    if (blocks.size() < static_cast<size_t>(L))
      throw std::runtime_error("empty difficulty level");
    const size_t n = sorted.size();
    size_t block_idx = 0;
    size_t assigned = 0;
    for (int l = 0; l < L; ++l) {
      size_t target = (static_cast<size_t>(l) + 1) * n / L;
      size_t blocks_left = blocks.size() - block_idx;
      size_t levels_left = static_cast<size_t>(L) - l;
      do {
        for (const auto& id : blocks[block_idx]) g.levels[l].test_ids.push_back(id);
        assigned += blocks[block_idx].size();
        ++block_idx;
        blocks_left = blocks.size() - block_idx;
      } while (assigned < target && blocks_left > levels_left - 1);
    }
  }

  if (weights.empty()) {
    for (auto& level : g.levels) level.weight = 1.0 / L;
  } else {
    if (weights.size() != static_cast<size_t>(L))
      throw std::invalid_argument("weight count != level count");
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("negative level weight");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
    for (int l = 0; l < L; ++l) g.levels[l].weight = weights[l];
  }
  return g;
}

namespace {

void check_known_tests(const std::set<std::string>& passed, const DifficultyGrouping& g) {
  std::set<std::string> known;
  for (const auto& level : g.levels)
    for (const auto& id : level.test_ids) known.insert(id);
  for (const auto& id : passed)
    if (!known.count(id)) throw std::runtime_error("unknown test id: " + id);
}

}  // namespace

double strict_reward(const std::set<std::string>& passed, const DifficultyGrouping& grouping) {
  check_known_tests(passed, grouping);
  double total = 0.0;
  for (const auto& level : grouping.levels) {
    bool complete = true;
    for (const auto& id : level.test_ids)
      if (!passed.count(id)) { complete = false; break; }
    if (!complete) break;
    total += level.weight;
  }
  return total;
}

double soft_reward(const std::set<std::string>& passed, const DifficultyGrouping& grouping) {
  check_known_tests(passed, grouping);
  double total = 0.0;
  for (const auto& level : grouping.levels) {
    int hit = 0;
    for (const auto& id : level.test_ids)
      if (passed.count(id)) ++hit;
    total += level.weight * hit / static_cast<double>(level.test_ids.size());
  }
  return total;
}

double score_response(const Response& response, const ProblemSpec& problem,
                      const RewardScheme& scheme, const DifficultyGrouping* grouping) {
  if (problem.domain == Domain::kMath)
    return math_verify(response.answer, problem.gold_answer) ? 1.0 : 0.0;

  if (response.test_passed.size() != problem.tests.size())
    throw std::runtime_error("pass bit-vector length mismatch for " + problem.id);

  if (scheme.kind == RewardSchemeKind::kBinaryAllTests) {
    for (bool b : response.test_passed)
      if (!b) return 0.0;
    return 1.0;
  }

  if (grouping == nullptr)
    throw std::runtime_error("difficulty grouping required for strict/soft scheme");
  std::set<std::string> passed;
  for (size_t t = 0; t < problem.tests.size(); ++t)
    if (response.test_passed[t]) passed.insert(problem.tests[t].id);
  return scheme.kind == RewardSchemeKind::kStrict ? strict_reward(passed, *grouping)
                                                  : soft_reward(passed, *grouping);
}

}  // namespace rlsim
