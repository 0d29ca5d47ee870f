#include "clse/simulate.hpp"

#include <cmath>
#include <limits>

namespace clse {

namespace {
constexpr std::uint64_t kMaxCount = std::numeric_limits<std::uint64_t>::max();

TruthRecord truth_of(const ConditionalModel& model, const ParamVec& params) {
  TruthRecord t;
  t.names = model.param_names();
  for (Eigen::Index i = 0; i < params.size(); ++i) t.values.push_back(params[i]);
  return t;
}
}  // namespace

void OffspringSpec::validate() const {
  if (law == OffspringLaw::binary)
    require(param >= 0.0 && param <= 1.0, "binary offspring law needs p0 in [0,1]");
  else
    require(param > 0.0 && std::isfinite(param), "poisson offspring law needs m0 > 0");
}

std::uint64_t binary_offspring_step(std::uint64_t n, double p, Rng& rng) {
  const std::uint64_t born = rng.binomial(n, p);
  if (born > kMaxCount - n) fail(ErrorKind::overflow, "population exceeds the 64-bit range");
  return n + born;
}

std::uint64_t poisson_offspring_step(std::uint64_t n, double m, Rng& rng) {
  const double mean = static_cast<double>(n) * m;
  // leave room for a 20-sigma excursion before the draw is attempted
  if (mean + 20.0 * std::sqrt(mean) >= 0x1.0p64) fail(ErrorKind::overflow, "population exceeds the 64-bit range");
  return rng.poisson(mean);
}

Trajectory simulate_bgw(const OffspringSpec& offspring, std::uint64_t n0, std::size_t steps, std::uint64_t seed) {
  offspring.validate();
  Rng rng(seed);
  std::vector<std::uint64_t> counts;
  counts.reserve(steps + 1);
  counts.push_back(n0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::uint64_t prev = counts.back();
    if (prev == 0) {
      counts.push_back(0);
      continue;
    }
    counts.push_back(offspring.law == OffspringLaw::binary ? binary_offspring_step(prev, offspring.param, rng)
                                                           : poisson_offspring_step(prev, offspring.param, rng));
  }
  const BgwModel model(offspring.law);
  Trajectory t = make_count_trajectory(model.id(), std::move(counts), seed);
  t.truth = truth_of(model, make_params({offspring.mean()}));
  return t;
}

double replication_prob(PcrKind kind, const ParamVec& params, double n_prev) {
  const PcrModel model(kind);
  model.validate(params);
  require(n_prev >= 0.0, "population size must be nonnegative");
  return model.replication_prob(params, n_prev);
}

Trajectory simulate_pcr(PcrKind kind, const ParamVec& params, std::uint64_t n0, std::size_t steps,
                        std::uint64_t seed) {
  const PcrModel model(kind);
  model.validate(params);
  require(n0 >= 1, "PCR paths start from at least one molecule");
  Rng rng(seed);
  std::vector<std::uint64_t> counts;
  counts.reserve(steps + 1);
  counts.push_back(n0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const std::uint64_t prev = counts.back();
    counts.push_back(binary_offspring_step(prev, model.replication_prob(params, static_cast<double>(prev)), rng));
  }
  Trajectory t = make_count_trajectory(model.id(), std::move(counts), seed);
  t.truth = truth_of(model, params);
  return t;
}

Trajectory simulate_arch(double alpha0, double alpha1, std::size_t steps, std::uint64_t seed, double xi0,
                         bool zero_innovations) {
  require(alpha0 > 0.0 && std::isfinite(alpha0), "ARCH alpha0 must be positive");
  require(alpha1 >= 0.0 && alpha1 < 1.0, "ARCH alpha1 must lie in [0,1)");
  require(std::isfinite(xi0), "xi0 must be finite");
  const ArchModel model(zero_innovations);
  const ParamVec truth = make_params({alpha0, alpha1});
  Trajectory t = simulate_model(model, truth, xi0 * xi0, steps, seed);
  return t;
}

Trajectory simulate_model(const ConditionalModel& model, const ParamVec& truth, double z0, std::size_t steps,
                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values;
  values.reserve(steps + 1);
  values.push_back(z0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const History h(values.data(), values.size());
    values.push_back(model.simulate_step(h, truth, rng));
  }
  Trajectory t = make_real_trajectory(model.id(), std::move(values), seed);
  t.truth = truth_of(model, truth);
  return t;
}

}  // namespace clse
