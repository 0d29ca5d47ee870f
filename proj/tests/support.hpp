#pragma once

#include "clse/models.hpp"
#include "clse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace clse::testing {

struct ModelPoint {
  std::vector<double> history;
  ParamVec theta;
};

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Random (state, theta) pair inside the model's domain, kept away from the
/// saturation kink N = S so central differences do not straddle it.
inline ModelPoint random_point(const std::string& id, Rng& rng) {
  ModelPoint p;
  if (id == "bgw-binary" || id == "bgw-poisson") {
    p.history = {std::floor(log_uniform(rng, 1.0, 1e6))};
    p.theta = make_params({uniform(rng, 1.01, 1.99)});
    return p;
  }
  if (id == "arch1") {
    p.history = {uniform(rng, 0.0, 10.0)};
    p.theta = make_params({uniform(rng, 0.1, 5.0), uniform(rng, 0.0, 0.95)});
    return p;
  }
  const double k = log_uniform(rng, 10.0, 1e4);
  if (id == "pcr-m1") {
    p.history = {std::floor(log_uniform(rng, 1.0, 1e7))};
    p.theta = make_params({k});
    return p;
  }
  double s = 0.0;
  if (id == "pcr-m2") {
    s = log_uniform(rng, 1.0, 1e3);
    p.theta = make_params({k, uniform(rng, 0.0, 5.0), s});
  } else {
    const double alpha = uniform(rng, 0.05, 0.49);
    const double sa = uniform(rng, 1.0, 50.0);
    s = std::pow(sa, 1.0 / alpha);
    p.theta = make_params({k, sa, alpha});
  }
  double n = 0.0;
  do {
    n = std::floor(log_uniform(rng, 1.0, 1e7));
  } while (std::abs(n - s) < 0.1 * std::max(n, s));
  p.history = {n};
  return p;
}

struct DerivativeError {
  double gradient = 0.0;
  double hessian = 0.0;
};

/// Relative error of the analytic derivatives against Richardson extrapolated
/// central differences at step 1e-4 relative: f' from differences of f, f''
/// from differences of f'. Smaller steps lose the curvature of a K/(K+N)
/// factor to rounding when N >> K.
/// Entries are compared relative to the largest entry of their object.
/// PCR means are N + N p, so the offspring part N p is differenced on its own;
/// differencing the full mean loses every digit once N p << N.
inline DerivativeError derivative_error(const ConditionalModel& model, const ModelPoint& pt) {
  const History h(pt.history.data(), pt.history.size());
  const auto* pcr = dynamic_cast<const PcrModel*>(&model);
  const auto varying = [&](const ParamVec& th) {
    return pcr ? h.back() * pcr->replication_prob(th, h.back()) : model.mean(h, th);
  };
  const auto p = pt.theta.size();
  const ParamVec g = model.gradient(h, pt.theta);
  const ParamMat hs = model.hessian(h, pt.theta);
  ParamVec g_fd(p);
  ParamMat h_fd(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double scale = std::max(std::abs(pt.theta[i]), 1e-3);
    const auto shifted = [&](double d) {
      ParamVec t = pt.theta;
      t[i] += d;
      return t;
    };
    const double step = 1e-4 * scale;
    const auto slope = [&](double d) { return (varying(shifted(d)) - varying(shifted(-d))) / (2.0 * d); };
    const auto central = [&](double d) -> ParamVec {
      return (model.gradient(h, shifted(d)) - model.gradient(h, shifted(-d))) / (2.0 * d);
    };
    g_fd[i] = (4.0 * slope(step / 2.0) - slope(step)) / 3.0;
    h_fd.col(i) = (4.0 * central(step / 2.0) - central(step)) / 3.0;
  }
  const double gscale = std::max(g_fd.cwiseAbs().maxCoeff(), 1e-300);
  const double hscale = std::max(h_fd.cwiseAbs().maxCoeff(), 1e-300);
  DerivativeError e;
  e.gradient = (g - g_fd).cwiseAbs().maxCoeff() / gscale;
  e.hessian = h_fd.cwiseAbs().maxCoeff() == 0.0 && hs.cwiseAbs().maxCoeff() == 0.0
                  ? 0.0
                  : (hs - h_fd).cwiseAbs().maxCoeff() / hscale;
  return e;
}

/// Exact Binomial(n, p) CDF by direct pmf summation.
inline std::vector<double> binomial_cdf(int n, double p) {
  std::vector<double> cdf(static_cast<std::size_t>(n) + 1);
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double lp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p);
    acc += std::exp(lp);
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  return cdf;
}

inline const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"bgw-binary", "bgw-poisson", "pcr-m1", "pcr-m2", "pcr-m3", "arch1"};
  return ids;
}

}  // namespace clse::testing
