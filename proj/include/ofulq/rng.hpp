#pragma once

#include <cstdint>
#include <random>

namespace ofulq {

/// Seeded generator used by every stochastic routine.
///
/// Independent streams are derived from a base seed and a stream index with
/// splitmix64, so replications can be distributed over threads without the
/// results depending on the thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// +1 or -1 with equal probability.
  double sign();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ofulq
