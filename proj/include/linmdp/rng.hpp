#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace linmdp {

/// Seeded random source with platform-independent sampling routines.
///
/// Only the raw 64-bit stream of std::mt19937_64 is used; every derived
/// distribution is implemented here so that identical seeds give identical
/// draws regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream derived from (seed, stream) through splitmix64.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  int uniform_int(int n);
  double normal();
  double exponential();
  /// Sample an index from unnormalized nonnegative weights.
  int categorical(std::span<const double> weights);
  /// Dirichlet(concentration, ..., concentration) of the given size.
  std::vector<double> dirichlet(int size, double concentration);
  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace linmdp
