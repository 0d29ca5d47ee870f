#include "clse/montecarlo.hpp"

#include "clse/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace clse {

void Scenario::validate() const {
  require(replicates >= 1, "scenario needs at least one replicate");
  require(n >= 2, "scenario needs n >= 2");
  require(h < n, "scenario window needs h < n");
  const auto model = make_model(model_id);
  truth_vector();
  if (estimator == EstimatorKind::two_stage) {
    require(model_id == "pcr-m3", "the two-stage estimator is defined for pcr-m3");
    require(stage1_n <= n, "stage-1 horizon must not exceed n");
    if (!oracle_nuisance) require(stage1_box.dim() == 3, "two-stage scenarios need a 3-dimensional stage-1 box");
    require(box.dim() == (two_parameter ? 2u : 1u), "stage-2 box dimension does not match");
  } else {
    require(box.dim() == model->dim(), "estimation box dimension does not match the model");
  }
  box.validate();
  optimizer.validate();
  if (ci_level) require(*ci_level > 0.0 && *ci_level < 1.0, "CI level must lie in (0,1)");
  require(scale_variance > 0.0, "scale_variance must be positive");
  if (reference == ReferenceLaw::bgw_mixture || scaling == ScalingKind::psi_bgw)
    require(model_id.rfind("bgw-", 0) == 0, "BGW scalings and references need a BGW model");
}

ParamVec Scenario::truth_vector() const {
  const auto model = make_model(model_id);
  const auto names = model->param_names();
  ParamVec v(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = truth.find(names[i]);
    require(it != truth.end(), "scenario truth is missing '" + names[i] + "'");
    v[static_cast<Eigen::Index>(i)] = it->second;
  }
  return v;
}

namespace {

OffspringSpec offspring_of(const std::string& id, double m) {
  return id == "bgw-binary" ? OffspringSpec::binary(m - 1.0) : OffspringSpec::poisson(m);
}

Trajectory simulate_scenario(const Scenario& s, const ParamVec& truth, std::uint64_t seed) {
  if (s.model_id.rfind("bgw-", 0) == 0) return simulate_bgw(offspring_of(s.model_id, truth[0]), s.initial, s.n, seed);
  if (s.model_id == "pcr-m1") return simulate_pcr(PcrKind::m1, truth, s.initial, s.n, seed);
  if (s.model_id == "pcr-m2") return simulate_pcr(PcrKind::m2, truth, s.initial, s.n, seed);
  if (s.model_id == "pcr-m3") return simulate_pcr(PcrKind::m3, truth, s.initial, s.n, seed);
  if (s.model_id == "arch1") return simulate_arch(truth[0], truth[1], s.n, seed, 0.0);
  fail(ErrorKind::invalid_argument, "no simulator for model '" + s.model_id + "'");
}

ParamVec free_truth(const Scenario& s, const ParamVec& truth) {
  if (s.estimator != EstimatorKind::two_stage) return truth;
  return s.two_parameter ? make_params({truth[0], truth[1]}) : make_params({truth[0]});
}

ParamMat scaling_matrix(const Scenario& s, const ConditionalModel& est_model, const Trajectory& t,
                        const ParamVec& theta0, const ParamVec& theta_hat_full) {
  const auto p = theta0.size();
  const double n = static_cast<double>(s.n - s.h);
  switch (s.scaling) {
    case ScalingKind::sqrt_n:
      return ParamMat::Identity(p, p) * std::sqrt(n);
    case ScalingKind::psi_bgw:
      return ParamMat::Constant(1, 1, psi_bgw(theta0[0], s.n));
    case ScalingKind::phi_scalar: {
      require(p == 1, "the scalar Phi_n scaling is one-dimensional");
      const double alpha = s.model_id == "pcr-m3" ? theta_hat_full[2] : 0.0;
      const double sa = s.model_id == "pcr-m3" ? theta_hat_full[1] : 0.0;
      return ParamMat::Constant(1, 1, std::sqrt(phi_squared(s.n, theta0[0], alpha, sa)));
    }
    case ScalingKind::phi_matrix: {
      require(p == 2 && s.model_id == "pcr-m3", "the matrix Phi_n scaling is for two-parameter M3");
      const auto phi = phi_squared_matrix(s.n, theta0[0], theta_hat_full[2]);
      if (!phi.factor) fail(ErrorKind::numerical, "Phi_n^2 is singular");
      return *phi.factor;
    }
    case ScalingKind::info: {
      const auto info = info_matrix(est_model, t, theta0, Window{s.h, s.n});
      const auto root = spd_sqrt(info.matrix);
      if (!root) fail(ErrorKind::numerical, "information matrix is singular");
      return *root;
    }
  }
  fail(ErrorKind::invalid_argument, "unknown scaling");
}

}  // namespace

ReplicateOutcome run_replicate(const Scenario& s, std::size_t r) {
  ReplicateOutcome out;
  out.seed = mix_seed(s.seed, r);
  const ParamVec truth = s.truth_vector();
  try {
    const Trajectory t = simulate_scenario(s, truth, out.seed);
    if (t.extinct() && s.condition_on_nonextinction) {
      out.status = ReplicateStatus::extinct;
      return out;
    }
    const auto full = make_model(s.model_id);
    const Window window{s.h, s.n};
    ParamVec theta_hat_full = truth;
    std::optional<RestrictedModel> view;
    const ConditionalModel* est_model = full.get();

    if (s.estimator == EstimatorKind::two_stage) {
      TwoStageConfig tc;
      tc.n0 = s.stage1_n == 0 ? s.n : s.stage1_n;
      tc.n = s.n;
      tc.stage1_box = s.stage1_box;
      tc.stage2_box = s.box;
      tc.two_parameter = s.two_parameter;
      tc.stage1 = s.stage1_optimizer;
      tc.stage2 = s.optimizer;
      if (s.oracle_nuisance) tc.injected_nuisance = make_params({truth[1], truth[2]});
      const auto res = two_stage_pcr(t, tc);
      if (res.stage1 && !res.stage1->converged) fail(ErrorKind::numerical, "stage 1 did not converge");
      if (!res.stage2.converged) fail(ErrorKind::numerical, "stage 2 did not converge");
      if (res.stage1) out.stage1 = res.stage1->theta_hat;
      out.theta_hat = res.stage2.theta_hat;
      theta_hat_full = res.frozen;
      view.emplace(*full, std::vector<bool>{true, s.two_parameter, false}, res.frozen);
      est_model = &*view;
    } else {
      EstimationResult res;
      if (s.estimator == EstimatorKind::qle) {
        QleConfig qc;
        qc.optimizer = s.optimizer;
        res = qle(t, *full, window, s.box, qc);
      } else {
        res = clse(t, *full, window, s.box, s.optimizer);
        if (!res.converged) fail(ErrorKind::numerical, "optimizer did not converge");
      }
      out.theta_hat = res.theta_hat;
      theta_hat_full = res.theta_hat;
    }

    const ParamVec theta0 = free_truth(s, truth);
    const ParamMat scaling = scaling_matrix(s, *est_model, t, theta0, theta_hat_full);
    out.standardized = standardized_error(out.theta_hat, theta0, scaling, std::sqrt(s.scale_variance));
    out.sigma2_hat = estimate_variance_nuisance(t, *est_model, out.theta_hat, window, s.variance_form);
    if (s.ci_level) {
      const auto info = info_matrix(*est_model, t, out.theta_hat, window);
      if (info.singular()) fail(ErrorKind::numerical, "information matrix is singular at the estimate");
      out.intervals = wald_ci(out.theta_hat, info, out.sigma2_hat, *s.ci_level);
    }
    out.status = ReplicateStatus::ok;
  } catch (const Error& e) {
    // configuration errors are caught by Scenario::validate; what reaches
    // here is a property of the simulated path
    out.status = ReplicateStatus::failed;
    out.failure = e.what();
  }
  return out;
}

std::size_t effective_workers(std::size_t requested) {
  std::size_t w = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CLSE_LAB_WORKERS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap >= 1) w = std::min<std::size_t>(w, cap);
  }
  return w;
}

MonteCarloSummary run_mc(const Scenario& s, std::size_t workers) {
  s.validate();
  const auto started = std::chrono::steady_clock::now();
  std::vector<ReplicateOutcome> outcomes(s.replicates);
  const std::size_t nthreads = std::min(effective_workers(workers), s.replicates);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < s.replicates; r = next++) {
      try {
        outcomes[r] = run_replicate(s, r);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = s.replicates;
      }
    }
  };
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  MonteCarloSummary sum;
  sum.scenario = s.name;
  sum.requested = s.replicates;
  const auto full = make_model(s.model_id);
  std::vector<std::string> names = full->param_names();
  if (s.estimator == EstimatorKind::two_stage) names.resize(s.two_parameter ? 2 : 1);
  const ParamVec theta0 = free_truth(s, s.truth_vector());

  std::set<std::string> reasons;
  std::vector<std::vector<double>> samples(names.size());
  std::vector<std::vector<Interval>> intervals(names.size());
  for (const auto& o : outcomes) {
    if (o.status == ReplicateStatus::extinct) {
      ++sum.extinct;
      continue;
    }
    if (o.status == ReplicateStatus::failed) {
      ++sum.failed;
      reasons.insert(o.failure);
      continue;
    }
    ++sum.used;
    sum.estimates.push_back(o.theta_hat);
    if (o.stage1) sum.stage1_estimates.push_back(*o.stage1);
    sum.sigma2_hats.push_back(o.sigma2_hat);
    for (std::size_t i = 0; i < names.size(); ++i) {
      samples[i].push_back(o.standardized[static_cast<Eigen::Index>(i)]);
      if (!o.intervals.empty()) intervals[i].push_back(o.intervals[i]);
    }
  }
  sum.failure_reasons.assign(reasons.begin(), reasons.end());
  sum.scenario_failed = sum.used == 0 || static_cast<double>(sum.failed) > 0.05 * static_cast<double>(s.replicates);

  std::function<double(double)> reference = normal_cdf;
  if (s.reference == ReferenceLaw::bgw_mixture && sum.used > 0) {
    const auto ref = sample_bgw_limit(offspring_of(s.model_id, theta0[0]), s.initial, s.reference_samples,
                                      s.reference_horizon, mix_seed(s.seed, ~std::uint64_t{0}), s.mixture_exponent);
    reference = [cdf = std::make_shared<EmpiricalCdf>(ref.samples)](double x) { return (*cdf)(x); };
  }

  for (std::size_t i = 0; i < names.size(); ++i) {
    CoordinateSummary c;
    c.name = names[i];
    c.samples = samples[i];
    c.moments = sample_moments(c.samples);
    if (!c.samples.empty()) c.ks = ks_statistic(c.samples, reference);
    if (!intervals[i].empty()) c.coverage = coverage(intervals[i], theta0[static_cast<Eigen::Index>(i)]);
    sum.coordinates.push_back(std::move(c));
  }
  if (names.size() == 2 && sum.used >= 2) sum.cross_correlation = correlation(samples[0], samples[1]);
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sum;
}

std::string describe_plan(const Scenario& s, std::size_t workers) {
  s.validate();
  std::ostringstream os;
  os << "scenario " << s.name << ": model " << s.model_id << ", n = " << s.n << ", " << s.replicates
     << " replicates on " << std::min(effective_workers(workers), s.replicates) << " worker(s)\n";
  const std::size_t shown = std::min<std::size_t>(s.replicates, 5);
  for (std::size_t r = 0; r < shown; ++r) os << "  replicate " << r << " seed " << mix_seed(s.seed, r) << "\n";
  if (shown < s.replicates) os << "  ... " << s.replicates - shown << " more\n";
  return os.str();
}

bool same_content(const MonteCarloSummary& a, const MonteCarloSummary& b) {
  if (a.requested != b.requested || a.used != b.used || a.extinct != b.extinct || a.failed != b.failed ||
      a.scenario_failed != b.scenario_failed || a.failure_reasons != b.failure_reasons ||
      a.coordinates.size() != b.coordinates.size() || a.sigma2_hats != b.sigma2_hats ||
      a.estimates.size() != b.estimates.size() || a.stage1_estimates.size() != b.stage1_estimates.size())
    return false;
  for (std::size_t i = 0; i < a.estimates.size(); ++i)
    if (a.estimates[i] != b.estimates[i]) return false;
  for (std::size_t i = 0; i < a.stage1_estimates.size(); ++i)
    if (a.stage1_estimates[i] != b.stage1_estimates[i]) return false;
  for (std::size_t i = 0; i < a.coordinates.size(); ++i) {
    const auto& x = a.coordinates[i];
    const auto& y = b.coordinates[i];
    if (x.samples != y.samples || x.ks != y.ks || x.coverage != y.coverage) return false;
  }
  return a.cross_correlation == b.cross_correlation;
}

}  // namespace clse
