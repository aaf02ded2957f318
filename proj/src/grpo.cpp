#include "rlsim/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlsim/rng.hpp"

namespace rlsim {

void GrpoConfig::validate() const {
  if (eps_low <= 0.0 || eps_high <= 0.0) throw std::invalid_argument("clip bounds must be > 0");
  if (eps_high < eps_low) throw std::invalid_argument("eps_high must be >= eps_low");
  if (kl_coefficient != 0.0) throw std::invalid_argument("KL loss is removed; coefficient must be 0");
  if (train_batch_size <= 0 || mini_batch_size <= 0 || grad_updates_per_iteration <= 0)
    throw std::invalid_argument("batch settings must be positive");
  if (train_batch_size % mini_batch_size != 0)
    throw std::invalid_argument("batch not divisible by mini-batch");
}

ToyPolicy::ToyPolicy(int vocab_size, int max_positions)
    : vocab_size_(vocab_size), max_positions_(max_positions),
      shared_(static_cast<size_t>(vocab_size) * max_positions, 0.0) {
  if (vocab_size < 2 || max_positions < 1) throw std::invalid_argument("bad policy shape");
}

void ToyPolicy::register_problem(const std::string& problem_id) {
  if (table_.count(problem_id)) return;
  table_[problem_id].assign(shared_.size(), 0.0);
  order_.push_back(problem_id);
}

bool ToyPolicy::has_problem(const std::string& problem_id) const {
  return table_.count(problem_id) > 0;
}

std::vector<std::string> ToyPolicy::problem_ids() const { return order_; }

double ToyPolicy::logit(const std::string& problem_id, int pos, int token) const {
  const auto it = table_.find(problem_id);
  if (it == table_.end()) throw std::runtime_error("unregistered problem: " + problem_id);
  size_t idx = static_cast<size_t>(pos) * vocab_size_ + token;
  return shared_[idx] + it->second[idx];
}

double& ToyPolicy::logit_ref(const std::string& problem_id, int pos, int token) {
  auto it = table_.find(problem_id);
  if (it == table_.end()) throw std::runtime_error("unregistered problem: " + problem_id);
  return it->second[static_cast<size_t>(pos) * vocab_size_ + token];
}

double& ToyPolicy::shared_logit_ref(int pos, int token) {
  return shared_[static_cast<size_t>(pos) * vocab_size_ + token];
}

std::vector<double> ToyPolicy::token_probs(const std::string& problem_id, int pos,
                                           double temperature) const {
  std::vector<double> p(vocab_size_);
  double max_logit = -1e300;
  for (int v = 0; v < vocab_size_; ++v) {
    p[v] = logit(problem_id, pos, v) / temperature;
    max_logit = std::max(max_logit, p[v]);
  }
  double z = 0.0;
  for (int v = 0; v < vocab_size_; ++v) {
    p[v] = std::exp(p[v] - max_logit);
    z += p[v];
  }
  for (int v = 0; v < vocab_size_; ++v) p[v] /= z;
  return p;
}

std::vector<int> ToyPolicy::sample_sequence(const std::string& problem_id, int length,
                                            std::uint64_t& rng_state, double temperature,
                                            double top_p) const {
  if (length > max_positions_) throw std::invalid_argument("sequence longer than policy");
  std::vector<int> tokens(length);
  for (int pos = 0; pos < length; ++pos) {
    std::vector<double> p = token_probs(problem_id, pos, temperature);
    if (top_p < 1.0) {
      // Nucleus truncation: keep the smallest prob-sorted prefix covering top_p.
      std::vector<int> idx(vocab_size_);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
      });
      double cum = 0.0;
      std::vector<double> q(vocab_size_, 0.0);
      for (int i : idx) {
        q[i] = p[i];
        cum += p[i];
        if (cum >= top_p) break;
      }
      for (int v = 0; v < vocab_size_; ++v) p[v] = q[v] / cum;
    }
    double u = static_cast<double>(splitmix64(rng_state) >> 11) * 0x1.0p-53;
    double acc = 0.0;
    int chosen = vocab_size_ - 1;
    for (int v = 0; v < vocab_size_; ++v) {
      acc += p[v];
      if (u < acc) { chosen = v; break; }
    }
    tokens[pos] = chosen;
  }
  return tokens;
}

double ToyPolicy::log_prob(const std::string& problem_id, int pos, int token) const {
  std::vector<double> p = token_probs(problem_id, pos);
  return std::log(std::max(p[token], 1e-300));
}

int ToyPolicy::parameter_count() const {
  return static_cast<int>(shared_.size() * (1 + table_.size()));
}

std::vector<double> ToyPolicy::flatten() const {
  std::vector<double> flat(shared_);
  for (const auto& id : order_) {
    const auto& t = table_.at(id);
    flat.insert(flat.end(), t.begin(), t.end());
  }
  return flat;
}

void ToyPolicy::unflatten(const std::vector<double>& flat) {
  if (flat.size() != static_cast<size_t>(parameter_count()))
    throw std::invalid_argument("parameter count mismatch");
  size_t off = shared_.size();
  std::copy(flat.begin(), flat.begin() + off, shared_.begin());
  for (const auto& id : order_) {
    auto& t = table_[id];
    std::copy(flat.begin() + off, flat.begin() + off + t.size(), t.begin());
    off += t.size();
  }
}

double ToyPolicy::mean_entropy() const {
  if (order_.empty()) return 0.0;
  double total = 0.0;
  int states = 0;
  for (const auto& id : order_) {
    for (int pos = 0; pos < max_positions_; ++pos) {
      std::vector<double> p = token_probs(id, pos);
      double h = 0.0;
      for (double pv : p)
        if (pv > 0.0) h -= pv * std::log(pv);
      total += h;
      ++states;
    }
  }
  return total / states;
}

std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_guard) {
  const size_t g = rewards.size();
  if (g < 2) throw std::runtime_error("degenerate group");
  double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / g;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double std = std::sqrt(var / g);  // population std
  std::vector<double> adv(g, 0.0);
  if (std < std_guard) return adv;
  for (size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / std::max(std, std_guard);
  return adv;
}

double grpo_objective(const std::vector<std::vector<double>>& ratios,
                      const std::vector<double>& advantages, const GrpoConfig& cfg) {
  if (ratios.size() != advantages.size()) throw std::invalid_argument("shape mismatch");
  double sum = 0.0;
  size_t total_tokens = 0;
  for (size_t i = 0; i < ratios.size(); ++i) {
    const double a = advantages[i];
    for (double r : ratios[i]) {
      if (r <= 0.0) throw std::invalid_argument("ratios must be positive");
      double clipped = std::clamp(r, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
      sum += std::min(r * a, clipped * a);
      ++total_tokens;
    }
  }
  if (total_tokens == 0) throw std::invalid_argument("empty ratio tensor");
  return sum / static_cast<double>(total_tokens);
}

GradientStats policy_gradient(const ToyPolicy& policy, const std::vector<TrainGroup>& batch,
                              const GrpoConfig& cfg, std::vector<double>& grad_out) {
  const int V = policy.vocab_size();
  const size_t shared_size = static_cast<size_t>(V) * policy.max_positions();
  grad_out.assign(policy.parameter_count(), 0.0);

  // Per-problem offsets into the flat layout (shared table first).
  std::map<std::string, size_t> offsets;
  {
    size_t off = shared_size;
    for (const auto& id : policy.problem_ids()) {
      offsets[id] = off;
      off += shared_size;
    }
  }

  size_t total_tokens = 0;
  for (const auto& group : batch)
    for (const auto& s : group.samples) total_tokens += s.tokens.size();
  if (total_tokens == 0) throw std::runtime_error("empty batch");

  const double lo = 1.0 - cfg.eps_low;
  const double hi = 1.0 + cfg.eps_high;
  double objective = 0.0;
  size_t clipped_tokens = 0;

  for (const auto& group : batch) {
    std::vector<double> rewards;
    rewards.reserve(group.samples.size());
    for (const auto& s : group.samples) rewards.push_back(s.reward);
    std::vector<double> adv = compute_advantages(rewards, cfg.std_guard);

    for (size_t i = 0; i < group.samples.size(); ++i) {
      const auto& s = group.samples[i];
      const double a = adv[i];
      if (s.old_log_probs.size() != s.tokens.size())
        throw std::runtime_error("old log-prob shape mismatch");
      const size_t prob_off = offsets.at(s.problem_id);
      for (size_t j = 0; j < s.tokens.size(); ++j) {
        const int tok = s.tokens[j];
        std::vector<double> p = policy.token_probs(s.problem_id, static_cast<int>(j));
        double new_lp = std::log(std::max(p[tok], 1e-300));
        double ratio = std::exp(new_lp - s.old_log_probs[j]);
        double clipped = std::clamp(ratio, lo, hi);
        objective += std::min(ratio * a, clipped * a);

        // min selects the saturated clip branch iff clipped*a < ratio*a;
        // that branch is constant in theta.
        bool saturated = clipped * a < ratio * a;
        if (saturated) {
          ++clipped_tokens;
          continue;
        }
        if (a == 0.0) continue;
        double w = a * ratio / static_cast<double>(total_tokens);
        const size_t row = static_cast<size_t>(j) * V;
        for (int v = 0; v < V; ++v) {
          double dlogp = (v == tok ? 1.0 : 0.0) - p[v];
          double g = -w * dlogp;  // loss = -objective
          grad_out[row + v] += g;
          grad_out[prob_off + row + v] += g;
        }
      }
    }
  }

  for (double g : grad_out)
    if (!std::isfinite(g)) throw std::runtime_error("numerical blowup");

  GradientStats stats;
  stats.objective = objective / static_cast<double>(total_tokens);
  stats.clip_fraction = static_cast<double>(clipped_tokens) / static_cast<double>(total_tokens);
  return stats;
}

IterationStats train_iteration(ToyPolicy& policy, const std::vector<TrainGroup>& batch,
                               const GrpoConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(batch.size()) != cfg.train_batch_size)
    throw std::invalid_argument("assembled batch size != train_batch_size");

  const int groups_per_mini = cfg.mini_batch_size;
  if (static_cast<int>(batch.size()) % groups_per_mini != 0)
    throw std::invalid_argument("batch not divisible by mini-batch");
  const int num_minis = static_cast<int>(batch.size()) / groups_per_mini;

  IterationStats stats;
  double reward_sum = 0.0;
  double adv_sum = 0.0;
  size_t reward_count = 0;
  for (const auto& g : batch) {
    std::vector<double> rewards;
    for (const auto& s : g.samples) rewards.push_back(s.reward);
    auto adv = compute_advantages(rewards, cfg.std_guard);
    for (size_t i = 0; i < rewards.size(); ++i) {
      reward_sum += rewards[i];
      adv_sum += std::fabs(adv[i]);
      ++reward_count;
    }
  }
  stats.mean_reward = reward_sum / reward_count;
  stats.mean_abs_advantage = adv_sum / reward_count;

  std::vector<double> grad;
  double clip_sum = 0.0;
  double obj_sum = 0.0;
  for (int step = 0; step < cfg.grad_updates_per_iteration; ++step) {
    int mb = step % num_minis;
    std::vector<TrainGroup> mini(batch.begin() + mb * groups_per_mini,
                                 batch.begin() + (mb + 1) * groups_per_mini);
    GradientStats gs = policy_gradient(policy, mini, cfg, grad);
    clip_sum += gs.clip_fraction;
    obj_sum += gs.objective;
    std::vector<double> params = policy.flatten();
    for (size_t k = 0; k < params.size(); ++k) params[k] -= cfg.learning_rate * grad[k];
    policy.unflatten(params);
  }
  stats.clip_fraction = clip_sum / cfg.grad_updates_per_iteration;
  stats.objective = obj_sum / cfg.grad_updates_per_iteration;
  stats.entropy = policy.mean_entropy();
  return stats;
}

}  // namespace rlsim
