#include "clse/asymptotics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace clse {

namespace {

ParamMat symmetrize(const ParamMat& m) { return (m + m.transpose()) / 2.0; }

}  // namespace

InfoMatrix info_from_matrix(const ParamMat& m) {
  InfoMatrix out;
  out.matrix = symmetrize(m);
  const Eigen::SelfAdjointEigenSolver<ParamMat> es(out.matrix);
  const auto& ev = es.eigenvalues();
  const double trace = out.matrix.trace();
  if (ev.minCoeff() < -1e-10 * std::abs(trace)) fail(ErrorKind::numerical, "information matrix is not positive semidefinite");
  const double top = ev.maxCoeff();
  const double tol = 1e-12 * std::max(top, 0.0);
  bool singular = !(top > 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= tol) {
      singular = true;
      out.null_space.push_back(es.eigenvectors().col(i));
    }
  }
  if (singular) {
    out.condition = std::numeric_limits<double>::infinity();
    return out;
  }
  out.condition = top / ev.minCoeff();
  out.inverse = symmetrize(es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose());
  return out;
}

InfoMatrix info_matrix(const ConditionalModel& model, const Trajectory& t, const ParamVec& theta, Window window) {
  const auto steps = usable_steps(t, model, window.h, window.n);
  if (steps.empty()) fail(ErrorKind::invalid_argument, "window has no usable steps");
  const auto p = theta.size();
  // Entrywise compensated sums keep long windows order-insensitive.
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(p * p));
  for (auto k : steps) {
    const ParamVec g = model.gradient(history_before(t, k), theta);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) acc[static_cast<std::size_t>(i * p + j)] += g[i] * g[j];
  }
  ParamMat m(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = acc[static_cast<std::size_t>(i * p + j)].value();
  if (m.isZero(0.0)) fail(ErrorKind::numerical, "information matrix is zero (all derivatives vanish)");
  return info_from_matrix(m);
}

std::optional<ParamMat> spd_sqrt(const ParamMat& m) {
  const Eigen::SelfAdjointEigenSolver<ParamMat> es(symmetrize(m));
  const auto& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::abs(ev.maxCoeff()))) return std::nullopt;
  return ParamMat(es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose());
}

double phi_squared(std::size_t n, double k0, double alpha, double s_alpha) {
  require(n >= 2, "the scaling needs n >= 2");
  require(alpha >= 0.0 && alpha <= 0.5, "scaling exponent must lie in [0, 1/2]");
  require(k0 > 0.0 && s_alpha >= 0.0, "scaling needs K > 0 and S^a >= 0");
  CompensatedSum s;
  if (alpha == 0.0) {
    const double term = (1.0 + s_alpha) / 2.0;
    return static_cast<double>(n) * term * term;
  }
  const double c = s_alpha * std::pow(2.0, alpha) * std::pow(k0, -alpha);
  for (std::size_t k = 2; k <= n; ++k) {
    const double term = (1.0 + c * std::pow(static_cast<double>(k - 1), -alpha)) / 2.0;
    s += term * term;
  }
  return s.value();
}

PhiMatrix phi_squared_matrix(std::size_t n, double k0, double alpha) {
  require(n >= 2, "the scaling needs n >= 2");
  require(alpha >= 0.0 && alpha <= 0.5, "scaling exponent must lie in [0, 1/2]");
  const double nn = static_cast<double>(n);
  const double a_n = 2.0 * alpha < 1.0 ? std::pow(nn, 1.0 - 2.0 * alpha) : std::log(nn);
  const double off = k0 * std::pow(nn, 1.0 - alpha);
  PhiMatrix out;
  out.phi2 = ParamMat(2, 2);
  out.phi2 << nn, off, off, k0 * k0 * a_n;
  out.phi2 /= 4.0;
  out.determinant = out.phi2.determinant();
  out.factor = spd_sqrt(out.phi2);
  return out;
}

double psi_bgw(double m0, std::size_t n) {
  require(m0 > 0.0, "offspring mean must be positive");
  CompensatedSum s;
  double term = 1.0;
  for (std::size_t k = 1; k <= n; ++k, term *= m0) s += term;
  return std::sqrt(s.value());
}

ParamVec standardized_error(const ParamVec& theta_hat, const ParamVec& theta0, const ParamMat& scaling,
                            std::optional<double> s) {
  require(theta_hat.size() == theta0.size() && scaling.rows() == theta0.size() && scaling.cols() == theta0.size(),
          "standardized error dimensions disagree");
  if (!scaling.allFinite()) fail(ErrorKind::numerical, "scaling is not finite");
  if (scaling.size() > 1) {
    if ((scaling - scaling.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scaling.cwiseAbs().maxCoeff())
      fail(ErrorKind::numerical, "matrix scaling must be symmetric");
    if (!spd_sqrt(scaling)) fail(ErrorKind::numerical, "matrix scaling must be positive definite");
  }
  ParamVec e = scaling * (theta_hat - theta0);
  if (s) {
    if (!(std::isfinite(*s) && *s > 0.0)) fail(ErrorKind::numerical, "scale function value must be positive");
    e /= *s;
  }
  return e;
}

double standardized_error(double theta_hat, double theta0, double scaling, std::optional<double> s) {
  return standardized_error(make_params({theta_hat}), make_params({theta0}), ParamMat::Constant(1, 1, scaling), s)[0];
}

BgwLimitSample sample_bgw_limit(const OffspringSpec& offspring, std::uint64_t n0, std::size_t reps,
                                std::size_t horizon, std::uint64_t seed, double exponent) {
  offspring.validate();
  const double m0 = offspring.mean();
  require(m0 > 1.0, "the mixture limit needs a supercritical offspring mean");
  require(reps >= 1 && horizon >= 1 && n0 >= 1, "need reps, horizon and N0 >= 1");
  const double sigma0 = std::sqrt(offspring.variance());
  BgwLimitSample out;
  out.w_proxies.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t rs = mix_seed(seed, r);
    const Trajectory t = simulate_bgw(offspring, n0, horizon, rs);
    const double w = static_cast<double>(t.counts.back()) * std::pow(m0, -static_cast<double>(horizon));
    out.w_proxies.push_back(w);
    if (t.counts.back() == 0) {
      ++out.extinct;
      continue;
    }
    Rng rng(splitmix64(rs));
    const double u = sigma0 * rng.normal();
    out.samples.push_back(u * std::pow(w, -exponent));
  }
  if (out.samples.empty()) fail(ErrorKind::numerical, "every replicate went extinct");
  return out;
}

std::vector<Interval> wald_ci(const ParamVec& theta_hat, const InfoMatrix& info, double sigma2, double level) {
  require(level > 0.0 && level < 1.0, "confidence level must lie in (0,1)");
  require(sigma2 >= 0.0, "variance estimate must be nonnegative");
  if (info.singular()) fail(ErrorKind::numerical, "information matrix is singular");
  const double z = normal_quantile((1.0 + level) / 2.0);
  std::vector<Interval> out;
  for (Eigen::Index i = 0; i < theta_hat.size(); ++i) {
    const double half = z * std::sqrt(sigma2 * (*info.inverse)(i, i));
    out.push_back({theta_hat[i] - half, theta_hat[i] + half});
  }
  return out;
}

}  // namespace clse
