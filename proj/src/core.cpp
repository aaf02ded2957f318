#include "rlsim/core.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rlsim {

using nlohmann::json;

std::string to_string(Domain d) { return d == Domain::kMath ? "math" : "code"; }

Domain domain_from_string(const std::string& s) {
  if (s == "math") return Domain::kMath;
  if (s == "code") return Domain::kCode;
  throw std::invalid_argument("unknown domain: " + s);
}

std::vector<double> ResponseGroup::rewards() const {
  std::vector<double> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    if (!r.scored()) throw std::runtime_error("unscored group");
    out.push_back(*r.reward);
  }
  return out;
}

double pass_rate(const ResponseGroup& group) {
  if (group.responses.empty()) throw std::runtime_error("empty group");
  int passes = 0;
  for (const auto& r : group.responses) {
    if (!r.scored()) throw std::runtime_error("unscored group");
    if (*r.reward == 1.0) ++passes;
  }
  return static_cast<double>(passes) / static_cast<double>(group.responses.size());
}

std::vector<std::string> validate_dataset(const std::vector<ProblemSpec>& problems) {
  std::vector<std::string> violations;
  std::set<std::string> seen;
  for (const auto& p : problems) {
    if (!seen.insert(p.id).second)
      violations.push_back("duplicate id " + p.id);
    if (p.domain == Domain::kMath) {
      if (p.gold_answer.empty())
        violations.push_back("math problem " + p.id + " has no gold answer");
      if (!p.tests.empty())
        violations.push_back("math problem " + p.id + " has tests");
    } else {
      if (p.tests.empty())
        violations.push_back("code problem " + p.id + " has no tests");
      if (!p.gold_answer.empty())
        violations.push_back("code problem " + p.id + " has a gold answer");
      std::set<std::string> tids;
      for (const auto& t : p.tests)
        if (!tids.insert(t.id).second)
          violations.push_back("problem " + p.id + " duplicate test id " + t.id);
    }
    if (p.difficulty_prior < 0.0 || p.difficulty_prior > 1.0)
      violations.push_back("problem " + p.id + " prior outside [0,1]");
  }
  return violations;
}

std::string problem_to_json(const ProblemSpec& p) {
  json j;
  j["id"] = p.id;
  j["domain"] = to_string(p.domain);
  j["difficulty_prior"] = p.difficulty_prior;
  if (p.domain == Domain::kMath) {
    j["gold_answer"] = p.gold_answer;
  } else {
    json tests = json::array();
    for (const auto& t : p.tests) {
      json tj;
      tj["id"] = t.id;
      if (!t.input.empty()) tj["input"] = t.input;
      if (!t.expected.empty()) tj["expected"] = t.expected;
      tj["sim_pass_prob"] = t.sim_pass_prob;
      if (t.level > 0) tj["level"] = t.level;
      tests.push_back(tj);
    }
    j["tests"] = tests;
  }
  return j.dump();
}

ProblemSpec problem_from_json(const std::string& line) {
  json j = json::parse(line);
  ProblemSpec p;
  p.id = j.at("id").get<std::string>();
  p.domain = domain_from_string(j.at("domain").get<std::string>());
  p.difficulty_prior = j.value("difficulty_prior", 0.5);
  p.gold_answer = j.value("gold_answer", std::string{});
  if (j.contains("tests")) {
    for (const auto& tj : j["tests"]) {
      TestCase t;
      t.id = tj.at("id").get<std::string>();
      t.input = tj.value("input", std::string{});
      t.expected = tj.value("expected", std::string{});
      t.sim_pass_prob = tj.value("sim_pass_prob", 0.0);
      t.level = tj.value("level", 0);
      p.tests.push_back(t);
    }
  }
  return p;
}

std::vector<ProblemSpec> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<ProblemSpec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(problem_from_json(line));
  }
  return out;
}

void save_dataset(const std::vector<ProblemSpec>& problems, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const auto& p : problems) out << problem_to_json(p) << "\n";
}

}  // namespace rlsim
