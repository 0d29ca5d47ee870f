#pragma once

#include "clse/models.hpp"
#include "clse/rng.hpp"
#include "clse/trajectory.hpp"

#include <cstdint>

namespace clse {

/// Offspring law of a BGW process. Binary: offspring 1 w.p. 1 - p0 and 2
/// w.p. p0 (m0 = 1 + p0, sigma0^2 = p0 (1 - p0)). Poisson: mean m0.
struct OffspringSpec {
  OffspringLaw law = OffspringLaw::binary;
  double param = 0.5;  ///< p0 for binary, m0 for Poisson

  static OffspringSpec binary(double p0) { return {OffspringLaw::binary, p0}; }
  static OffspringSpec poisson(double m0) { return {OffspringLaw::poisson, m0}; }

  double mean() const { return law == OffspringLaw::binary ? 1.0 + param : param; }
  double variance() const { return law == OffspringLaw::binary ? param * (1.0 - param) : param; }
  void validate() const;
};

/// N + Binomial(N, p); throws ErrorKind::overflow past 2^64 - 1.
std::uint64_t binary_offspring_step(std::uint64_t n, double p, Rng& rng);
/// Poisson(N m) total offspring of N Poisson(m) parents.
std::uint64_t poisson_offspring_step(std::uint64_t n, double m, Rng& rng);

Trajectory simulate_bgw(const OffspringSpec& offspring, std::uint64_t n0, std::size_t steps, std::uint64_t seed);

/// Replication probability of a PCR model at the previous size N.
double replication_prob(PcrKind kind, const ParamVec& params, double n_prev);

Trajectory simulate_pcr(PcrKind kind, const ParamVec& params, std::uint64_t n0, std::size_t steps,
                        std::uint64_t seed);

/// ARCH(1) path of squared observations, Z_0 = xi0^2.
Trajectory simulate_arch(double alpha0, double alpha1, std::size_t steps, std::uint64_t seed, double xi0,
                         bool zero_innovations = false);

/// Generic path from a model's one-step simulator, starting at `z0`.
Trajectory simulate_model(const ConditionalModel& model, const ParamVec& truth, double z0, std::size_t steps,
                          std::uint64_t seed);

}  // namespace clse
