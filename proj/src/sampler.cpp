#include "rlsim/sampler.hpp"

#include <algorithm>

namespace rlsim {

std::string to_string(GroupClass c) {
  switch (c) {
    case GroupClass::kKeep: return "keep";
    case GroupClass::kRouteToEasyPool: return "route_to_easy_pool";
    case GroupClass::kDiscardZero: return "discard_zero";
  }
  return "?";
}

std::string to_string(PrefilterDecision d) {
  switch (d) {
    case PrefilterDecision::kKeep: return "keep";
    case PrefilterDecision::kDropEasy: return "drop_easy";
    case PrefilterDecision::kDropUnsolvable: return "drop_unsolvable";
  }
  return "?";
}

GroupClass classify_group(const ResponseGroup& group) {
  double p = pass_rate(group);
  if (p == 1.0) return GroupClass::kRouteToEasyPool;
  if (p == 0.0) return GroupClass::kDiscardZero;
  return GroupClass::kKeep;
}

PrefilterDecision difficulty_prefilter(int passes, int rollouts,
                                       std::optional<int> solver_passes,
                                       double easy_threshold) {
  if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
  if (passes < 0 || passes > rollouts) throw std::invalid_argument("pass count out of range");
  if (solver_passes && *solver_passes == 0) return PrefilterDecision::kDropUnsolvable;
  if (static_cast<double>(passes) / rollouts > easy_threshold)
    return PrefilterDecision::kDropEasy;
  return PrefilterDecision::kKeep;
}

SamplerState::SamplerState(std::vector<std::string> problem_ids, double alpha,
                           std::uint64_t seed)
    : active_(std::move(problem_ids)), alpha_(alpha), rng_(seed) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha outside [0,1]");
}

void SamplerState::begin_step() {
  drawn_this_step_.clear();
  step_zero_ = step_perfect_ = step_mixed_ = step_pool_draws_ = 0;
}

bool SamplerState::in_pool(const std::string& id) const {
  return std::find(pool_.begin(), pool_.end(), id) != pool_.end();
}

std::string SamplerState::sample_next_problem() {
  auto draw_from = [&](const std::vector<std::string>& src) -> std::optional<std::string> {
    std::vector<const std::string*> fresh;
    fresh.reserve(src.size());
    for (const auto& id : src)
      if (!drawn_this_step_.count(id)) fresh.push_back(&id);
    if (fresh.empty()) return std::nullopt;
    return *fresh[rng_.uniform_int(static_cast<int>(fresh.size()))];
  };

  bool try_pool = !pool_.empty() && rng_.uniform() < alpha_;
  if (try_pool) {
    if (auto id = draw_from(pool_)) {
      drawn_this_step_.insert(*id);
      ++step_pool_draws_;
      return *id;
    }
  }
  if (active_.empty()) throw std::runtime_error("dataset exhausted");
  if (auto id = draw_from(active_)) {
    drawn_this_step_.insert(*id);
    return *id;
  }
  // Every problem has been drawn once this step: start a fresh sweep.
  drawn_this_step_.clear();
  auto id = draw_from(active_);
  drawn_this_step_.insert(*id);
  return *id;
}

void SamplerState::move_to_pool(const std::string& id) {
  auto it = std::find(active_.begin(), active_.end(), id);
  if (it != active_.end()) {
    active_.erase(it);
    pool_.push_back(id);
  }
}

void SamplerState::move_to_active(const std::string& id) {
  auto it = std::find(pool_.begin(), pool_.end(), id);
  if (it != pool_.end()) {
    pool_.erase(it);
    active_.push_back(id);
  }
}

void SamplerState::remove_problem(const std::string& id) {
  auto it = std::find(active_.begin(), active_.end(), id);
  if (it != active_.end()) active_.erase(it);
  auto pit = std::find(pool_.begin(), pool_.end(), id);
  if (pit != pool_.end()) pool_.erase(pit);
}

GroupClass SamplerState::record_group(const std::string& problem_id,
                                      const ResponseGroup& group) {
  GroupClass c = classify_group(group);
  record_class(problem_id, c);
  return c;
}

void SamplerState::record_class(const std::string& problem_id, GroupClass c) {
  switch (c) {
    case GroupClass::kRouteToEasyPool:
      ++step_perfect_;
      move_to_pool(problem_id);  // no-op if already pooled
      break;
    case GroupClass::kDiscardZero:
      ++step_zero_;
      move_to_active(problem_id);  // pool draw that stopped being perfect
      break;
    case GroupClass::kKeep:
      ++step_mixed_;
      move_to_active(problem_id);
      break;
  }
}

std::vector<ResponseGroup> assemble_batch(const std::vector<ResponseGroup>& valid_in_order,
                                          int batch_size) {
  if (static_cast<int>(valid_in_order.size()) < batch_size)
    throw std::runtime_error("insufficient valid samples");
  for (const auto& g : valid_in_order) {
    double p = pass_rate(g);
    if (p == 0.0 || p == 1.0)
      throw std::runtime_error("zero-gradient group in valid sample list");
  }
  return {valid_in_order.begin(), valid_in_order.begin() + batch_size};
}

}  // namespace rlsim
