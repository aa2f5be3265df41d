#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace dsrcnn {

/// Seedable generator threaded explicitly through every stochastic call.
///
/// Floating-point draws are derived from raw 64-bit engine output rather than
/// std::*_distribution, whose algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t index(std::size_t n);

  /// Derives an independent generator, e.g. one per training run component.
  Rng fork() { return Rng(next_u64()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dsrcnn
