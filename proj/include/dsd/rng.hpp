#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "dsd/errors.hpp"

// Reproducible random number generation. Every stochastic routine in the
// library takes an explicit Rng so that a (base seed, replicate index) pair
// pins down the whole stream. Uniform doubles are produced from the raw
// 64-bit output with a fixed bit recipe instead of
// std::uniform_real_distribution, whose mapping is implementation defined.

namespace dsd {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for replicate `stream` of a run keyed by `base_seed`. This is the
// splitmix64 output at position stream+1 starting from state base_seed.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream) {
  return mix64(base_seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static Rng for_replicate(std::uint64_t base_seed, std::uint64_t stream) {
    return Rng(derive_seed(base_seed, stream));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal by Box-Muller on the fixed uniform recipe (again because
  // std::normal_distribution is implementation defined).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692528676655900577 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Draws an index proportional to `mass` by walking the cumulative sums in
  // index order. `total` is the caller's value for sum(mass); tiny rounding
  // drift lands on the last index with positive mass.
  int categorical(const Eigen::VectorXd& mass, double total) {
    const double target = uniform() * total;
    double cum = 0.0;
    int last_positive = -1;
    for (int k = 0; k < mass.size(); ++k) {
      if (mass[k] <= 0.0) continue;
      cum += mass[k];
      last_positive = k;
      if (target < cum) return k;
    }
    if (last_positive < 0) throw NumericalBreakdown("categorical draw over empty mass");
    return last_positive;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dsd
