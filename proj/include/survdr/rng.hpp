#pragma once

// Deterministic splittable random streams.
//
// Every stream is keyed by (seed, a, b, c): the key is avalanched through
// SplitMix64 into a xoshiro256++ state. Parallel code derives one stream per
// work unit (replicate, bootstrap draw) from the unit's index, so results are
// identical regardless of thread count or scheduling. Samplers are implemented
// here rather than taken from <random> because distribution algorithms there
// are implementation-defined and would break byte-level reproducibility across
// toolchains.

#include <array>
#include <cstdint>

namespace survdr {

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) { *this = derive(seed, 0, 0, 0); }

  // Independent stream for a keyed work unit.
  static RngStream derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

  std::uint64_t next_u64();

  // Uniform on (0,1): never exactly 0 so log(u) is safe.
  double uniform();

  // Uniform integer on [0, bound), unbiased (Lemire rejection).
  std::uint64_t uniform_int(std::uint64_t bound);

  // Standard normal via the polar method (one spare cached per stream).
  double normal();

  // Exponential with the given rate, by inversion.
  double exponential(double rate);

  // Gamma(shape, scale) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape, double scale);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  RngStream() = default;
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace survdr
