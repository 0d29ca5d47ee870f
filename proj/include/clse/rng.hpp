#pragma once

#include <cstdint>
#include <random>

namespace clse {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of replicate `index` derived from `base`:
///   mix(base, r) = splitmix64(base ^ splitmix64(r + 0x9E3779B97F4A7C15)).
/// Distinct replicates get decorrelated MT streams; the map is reproducible.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Random source used everywhere in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All variates are produced by the routines below rather than by
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed reproduces the same trajectory on every conforming toolchain.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  /// Uniform on (0,1).
  double uniform_open();
  /// Standard normal via the Marsaglia polar method.
  double normal();
  /// Binomial(n, p). Inversion when min(p,1-p)*n < 10, otherwise Hormann's
  /// BTRS transformed rejection; O(1) expected time for large n.
  std::uint64_t binomial(std::uint64_t n, double p);
  /// Poisson(mean). Inversion below mean 10, PTRS transformed rejection above.
  std::uint64_t poisson(double mean);

private:
  std::mt19937_64 engine_;
};

}  // namespace clse
