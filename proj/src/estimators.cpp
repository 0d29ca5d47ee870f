#include "clse/estimators.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace clse {

ClseObjective::ClseObjective(const Trajectory& t, const ConditionalModel& model, Window window)
    : t_(t), model_(model) {
  std::vector<std::size_t> excluded;
  steps_ = usable_steps(t, model, window.h, window.n, &excluded);
  excluded_ = excluded.size();
  if (steps_.empty()) fail(ErrorKind::invalid_argument, "window has no usable steps");
  y_.reserve(steps_.size());
  for (auto k : steps_) y_.push_back(t.values[k] / std::sqrt(model.weight(history_before(t, k))));
}

double ClseObjective::value(const ParamVec& theta) const {
  CompensatedSum s;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const double r = y_[i] - model_.mean(history(i), theta);
    s += r * r;
  }
  return s.value();
}

void ClseObjective::derivatives(const ParamVec& theta, ParamVec& grad, ParamMat& hess) const {
  const auto p = theta.size();
  grad = ParamVec::Zero(p);
  hess = ParamMat::Zero(p, p);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const History h = history(i);
    const double r = y_[i] - model_.mean(h, theta);
    const ParamVec g = model_.gradient(h, theta);
    grad -= 2.0 * r * g;
    hess += 2.0 * g * g.transpose();
    hess -= 2.0 * r * model_.hessian(h, theta);
  }
}

Objective ClseObjective::as_objective() const {
  Objective f;
  f.value = [this](const ParamVec& x) { return value(x); };
  f.derivatives = [this](const ParamVec& x, ParamVec& g, ParamMat& h) {
    derivatives(x, g, h);
    return true;
  };
  return f;
}

double clse_objective(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta, Window window) {
  return ClseObjective(t, model, window).value(theta);
}

namespace {

NuisanceRecord nuisance_of(const ConditionalModel& model) {
  NuisanceRecord rec;
  const auto* r = dynamic_cast<const RestrictedModel*>(&model);
  if (!r) return rec;
  const auto names = r->full().param_names();
  const auto free_names = r->param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (std::find(free_names.begin(), free_names.end(), names[i]) != free_names.end()) continue;
    rec.names.push_back(names[i]);
    rec.values.push_back(r->frozen()[static_cast<Eigen::Index>(i)]);
  }
  return rec;
}

EstimationResult make_result(const ConditionalModel& model, const ClseObjective& obj, Window window,
                             const MinimizeResult& m) {
  EstimationResult out;
  out.model_id = model.id();
  out.param_names = model.param_names();
  out.theta_hat = m.x;
  out.objective = obj.value(m.x);
  out.window = window;
  out.nuisance = nuisance_of(model);
  out.converged = m.converged;
  out.starts_evaluated = m.starts_evaluated;
  out.best_start_index = m.best_start_index;
  out.usable_steps = obj.steps().size();
  out.excluded_steps = obj.excluded();
  return out;
}

void check_box(const ConditionalModel& model, const Box& box) {
  box.validate();
  require(box.dim() == model.dim(), "parameter box dimension does not match the model");
}

}  // namespace

EstimationResult clse(const Trajectory& t, const ConditionalModel& model, Window window, const Box& box,
                      const OptimizerConfig& config) {
  check_box(model, box);
  const ClseObjective obj(t, model, window);
  const auto m = minimize(obj.as_objective(), box, config);
  return make_result(model, obj, window, m);
}

double harris_closed_form(const Trajectory& t) {
  require(t.is_count(), "the Harris estimator needs population counts");
  require(t.steps() >= 1, "the Harris estimator needs at least one step");
  __extension__ using Wide = unsigned __int128;  // sums of 64-bit counts stay exact
  Wide num = 0;
  Wide den = 0;
  for (std::size_t k = 1; k <= t.steps(); ++k) {
    num += t.counts[k];
    den += t.counts[k - 1];
  }
  if (den == 0) fail(ErrorKind::invalid_argument, "trajectory starts extinct");
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double lotka_nagaev(const Trajectory& t) {
  require(t.steps() >= 1, "the Lotka-Nagaev estimator needs at least one step");
  const double prev = t.values[t.steps() - 1];
  if (!(prev > 0.0)) fail(ErrorKind::invalid_argument, "N_{n-1} is extinct");
  return t.values[t.steps()] / prev;
}

// ---------------------------------------------------------------------------
// QLE

ParamVec qle_score(const ClseObjective& obj, const ConditionalModel& model, const ParamVec& theta,
                   QleWeighting weighting) {
  // In the normalized scale (Z - g) g' / Var(Z) = (Y - f) f' / Var(Y), and
  // b_k = lambda_k turns the summand into (Y - f) f'.
  ParamVec q = ParamVec::Zero(theta.size());
  for (std::size_t i = 0; i < obj.steps().size(); ++i) {
    const History h = obj.history(i);
    const double r = obj.y(i) - model.mean(h, theta);
    const double v = weighting == QleWeighting::clse_weight ? 1.0 : model.variance(h, theta);
    q -= (r / v) * model.gradient(h, theta);
  }
  return q;
}

namespace {

ParamMat score_jacobian(const ClseObjective& obj, const ConditionalModel& model, const Box& box,
                        const ParamVec& theta, QleWeighting weighting) {
  const auto p = theta.size();
  ParamMat jac(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(theta[j]));
    ParamVec hi = theta;
    ParamVec lo = theta;
    hi[j] = std::min(box.hi[j], theta[j] + step);
    lo[j] = std::max(box.lo[j], theta[j] - step);
    const double span = hi[j] - lo[j];
    if (span <= 0.0) {
      jac.col(j).setZero();
      continue;
    }
    jac.col(j) = (qle_score(obj, model, hi, weighting) - qle_score(obj, model, lo, weighting)) / span;
  }
  return jac;
}

}  // namespace

EstimationResult qle(const Trajectory& t, const ConditionalModel& model, Window window, const Box& box,
                     const QleConfig& config) {
  check_box(model, box);
  const ClseObjective obj(t, model, window);
  const auto w = config.weighting;

  auto score = [&](const ParamVec& x) {
    const ParamVec q = qle_score(obj, model, x, w);
    return q.allFinite() ? q : ParamVec::Constant(x.size(), std::numeric_limits<double>::infinity());
  };

  Objective f;
  f.value = [&](const ParamVec& x) { return score(x).squaredNorm(); };
  // Gauss-Newton on ||Q||^2: the step solves J d = -Q.
  f.derivatives = [&](const ParamVec& x, ParamVec& g, ParamMat& h) {
    const ParamVec q = score(x);
    if (!q.allFinite()) return false;
    const ParamMat jac = score_jacobian(obj, model, box, x, w);
    g = 2.0 * jac.transpose() * q;
    h = 2.0 * jac.transpose() * jac;
    return g.allFinite() && h.allFinite();
  };

  OptimizerConfig oc = config.optimizer;
  oc.newton_polish = true;
  const auto m = minimize(f, box, oc);

  const double floor = config.residual_tol * (1.0 + score(box.center()).norm());
  std::vector<std::size_t> roots;
  std::vector<LocalMinimum> ranked = m.locals;
  for (std::size_t i = 0; i < m.locals.size(); ++i) {
    if (std::isfinite(m.locals[i].value) && std::sqrt(m.locals[i].value) <= floor) {
      roots.push_back(i);
      ranked[i].value = obj.value(m.locals[i].x);  // roots compete on the CLSE criterion
    }
  }
  if (roots.empty())
    fail(ErrorKind::numerical, "no root of the estimating equation located (best residual " +
                                   std::to_string(std::sqrt(m.value)) + ")");
  const std::size_t best = select_best(ranked, roots);

  MinimizeResult chosen = m;
  chosen.x = m.locals[best].x;
  chosen.best_start_index = best;
  chosen.converged = true;
  return make_result(model, obj, window, chosen);
}

double estimate_variance_nuisance(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta_hat,
                                  Window window, VarianceForm form) {
  const ClseObjective obj(t, model, window);
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t i = 0; i < obj.steps().size(); ++i) {
    const History h = obj.history(i);
    const double r = obj.y(i) - model.mean(h, theta_hat);
    const double w = form == VarianceForm::constant ? 1.0 : model.variance_shape(h, theta_hat);
    num += w * r * r;
    den += w * w;
  }
  if (!(den.value() > 0.0)) fail(ErrorKind::numerical, "variance regressor vanishes on the window");
  return num.value() / den.value();
}

// ---------------------------------------------------------------------------
// Two-stage PCR

RestrictedModel m3_stage2_view(const PcrModel& m3, const ParamVec& frozen, bool two_parameter) {
  require(m3.kind() == PcrKind::m3, "the two-stage procedure is defined for M3");
  return RestrictedModel(m3, {true, two_parameter, false}, frozen);
}

TwoStageResult two_stage_pcr(const Trajectory& t, const TwoStageConfig& config) {
  require(config.n0 >= 1 && config.n0 <= config.n, "two-stage windows need 1 <= n0 <= n");
  require(config.n <= t.steps(), "stage-2 horizon exceeds the trajectory");
  const PcrModel m3(PcrKind::m3);
  TwoStageResult out;

  if (config.injected_nuisance) {
    const ParamVec& nu = *config.injected_nuisance;
    require(nu.size() == 2, "injected nuisance is (S^a, a)");
    out.frozen = make_params({config.stage2_box.center()[0], nu[0], nu[1]});
  } else {
    const Box& b = config.stage1_box;
    require(b.dim() == 3, "stage-1 box is (K, S^a, a)");
    require(b.lo[2] > 0.0 && b.hi[2] < 0.5, "stage-1 exponent range must lie inside (0, 1/2)");
    out.stage1 = clse(t, m3, Window{0, config.n0}, b, config.stage1);
    out.frozen = out.stage1->theta_hat;
  }

  const RestrictedModel view = m3_stage2_view(m3, out.frozen, config.two_parameter);
  require(config.stage2_box.dim() == view.dim(), "stage-2 box dimension does not match the free parameters");
  out.stage2 = clse(t, view, Window{0, config.n}, config.stage2_box, config.stage2);
  return out;
}

}  // namespace clse
