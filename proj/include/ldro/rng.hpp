#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "ldro/errors.hpp"

namespace ldro {

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and two indices.
// Used to split per-(horizon, trial) streams so that parallel and serial
// runs consume identical randomness.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b) {
  std::uint64_t z = mix64(seed + 0x9e3779b97f4a7c15ull);
  z = mix64(z ^ (a + 0xbf58476d1ce4e5b9ull));
  z = mix64(z ^ (b + 0x94d049bb133111ebull));
  return z;
}

// Counter-based generator: draw k is a pure function of (seed, k), so a
// stream can be replayed or prefixed without storing state beyond the
// counter. All samplers below are hand-rolled against this generator; the
// standard-library distributions are implementation-defined and would break
// bit-reproducibility of trajectories.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ull;
    return mix64(seed_ + counter_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); safe as a logarithm argument.
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller; consumes two uniforms per variate.
  double next_normal() {
    const double u = next_open();
    const double v = next_unit();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
  }

  double next_exponential(double rate) { return -std::log(next_open()) / rate; }

  int next_bernoulli(double p) { return next_unit() < p ? 1 : 0; }

  // Trials until first success, support {1, 2, ...}.
  long next_geometric(double p) {
    const double u = next_open();
    return static_cast<long>(std::ceil(std::log1p(-u) / std::log1p(-p)));
  }

  long next_binomial(long n, double p) {
    long k = 0;
    for (long i = 0; i < n; ++i) k += next_bernoulli(p);
    return k;
  }

  long next_poisson(double mean) {
    long total = 0;
    // Knuth's product method degrades for large means; split by superposition.
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  // Marsaglia-Tsang; unit scale.
  double next_gamma(double shape) {
    if (shape < 1.0) {
      const double u = next_open();
      return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      const double v = t * t * t;
      const double u = next_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // 1-based state drawn from cumulative weights (last entry ~ 1).
  template <typename Derived>
  int next_categorical(const Eigen::DenseBase<Derived>& cumulative) {
    const double u = next_unit();
    for (Eigen::Index i = 0; i < cumulative.size(); ++i) {
      if (u < cumulative(i)) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(cumulative.size());
  }

 private:
  long poisson_small(double mean) {
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = 1.0;
    for (;;) {
      prod *= next_unit();
      if (prod <= limit) return k;
      ++k;
    }
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace ldro
