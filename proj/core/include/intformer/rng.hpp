#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace intformer {

// Deterministic random stream. std::mt19937_64 output is pinned by the
// standard; every distribution here is hand-rolled on top of the raw engine
// so the same seed gives the same draws on any platform and stdlib.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (uses two uniforms per pair).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang, valid for any shape > 0.
  double gamma(double shape);

  // Beta(alpha, beta) from two gammas.
  double beta(double alpha, double beta);

  // Poisson(lambda) via Knuth's product method (small lambda only).
  std::uint64_t poisson(double lambda);

  // Exponential with the given mean.
  double exponential(double mean);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace intformer
