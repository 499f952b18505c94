#pragma once

#include <cstdint>
#include <random>

namespace edl {

/// Seeded generator shared by every stochastic routine in the library.
///
/// Wraps a 64-bit Mersenne twister; sub-streams for independent jobs are
/// derived with `derive_seed` so that job results do not depend on
/// scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shapes below one use the
  /// U^(1/shape) boost.
  double gamma(double shape);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 mix of (base, stream); gives independent seeds per job.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace edl
