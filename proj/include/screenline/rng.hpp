#pragma once

#include <cstdint>
#include <random>

namespace screenline {

/// Portable pseudo-random source for fixtures.
///
/// The engine is std::mt19937_64 seeded with the raw 64-bit seed; its output
/// sequence is fixed by the C++ standard. Distributions are implemented here
/// rather than with <random>'s, whose algorithms are implementation-defined:
///   uniform01  = (next() >> 11) * 2^-53
///   below(n)   = rejection sampling on next() to avoid modulo bias
///   normal     = Box-Muller on two uniform01 draws, both outputs used
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent stream seed from a base seed and a salt
/// (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace screenline
