#ifndef RLSIM_RNG_HPP_
#define RLSIM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string>

namespace rlsim {

// splitmix64 step; also used to hash keys into stream seeds so that a task's
// draws depend only on (seed, step, index), not on event ordering.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t s = seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  return splitmix64(s);
}

inline std::uint64_t hash_string(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = seed;
  for (char c : s) h = hash_combine(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  return h;
}

// Small deterministic generator; identical sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  double uniform() {  // in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  double normal() {
    // Box-Muller; one value per call, the pair's partner is discarded.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  double gamma(double shape) {
    // Marsaglia-Tsang; shape boost for shape < 1.
    if (shape < 1.0) {
      double u = uniform();
      if (u < 1e-300) u = 1e-300;
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u < 1e-300) u = 1e-300;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (uniform() < p) ++k;
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace rlsim

#endif  // RLSIM_RNG_HPP_
