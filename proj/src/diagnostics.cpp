#include "clse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clse {

ThetaGrid ThetaGrid::regular(const Box& box, const ParamVec& theta0, double delta, std::size_t resolution) {
  ThetaGrid g = from_points(grid_points(box, resolution), theta0, delta);
  g.resolution = resolution;
  return g;
}

ThetaGrid ThetaGrid::from_points(std::vector<ParamVec> points, const ParamVec& theta0, double delta) {
  require(delta > 0.0, "exclusion radius must be positive");
  ThetaGrid g;
  g.theta0 = theta0;
  g.delta = delta;
  g.points = std::move(points);
  for (const auto& p : g.points) {
    require(p.size() == theta0.size(), "grid point dimension does not match theta0");
    g.outside.push_back((p - theta0).norm() >= delta);
  }
  require(g.outside_count() >= 1, "no grid point lies outside the delta-ball");
  return g;
}

std::size_t ThetaGrid::outside_count() const { return static_cast<std::size_t>(std::count(outside.begin(), outside.end(), true)); }

DiagnosticContext DiagnosticContext::from_trajectory(const Trajectory& t, const ConditionalModel& model) {
  if (!t.truth) fail(ErrorKind::invalid_argument, "diagnostics need a trajectory with a truth record");
  const auto* r = dynamic_cast<const RestrictedModel*>(&model);
  return DiagnosticContext{model, r ? r->full() : model, t.truth->params()};
}

namespace {

/// Usable steps up to n with the truth-side quantities precomputed.
struct TruthPath {
  std::vector<std::size_t> steps;
  std::vector<double> f0;
  std::vector<double> eta;
  std::vector<double> sigma2;

  TruthPath(const DiagnosticContext& ctx, const Trajectory& t, std::size_t n) {
    require(n >= 1, "diagnostics need n >= 1");
    steps = usable_steps(t, ctx.model, 0, n);
    for (auto k : steps) {
      const History h = history_before(t, k);
      const double y = t.values[k] / std::sqrt(ctx.model.weight(h));
      const double m = ctx.truth_model.mean(h, ctx.truth);
      f0.push_back(m);
      eta.push_back(y - m);
      sigma2.push_back(ctx.truth_model.variance(h, ctx.truth));
    }
  }
};

/// Running D and L for one theta with snapshots at the checkpoints.
struct Partial {
  std::vector<double> d;
  std::vector<double> l;
};

Partial accumulate(const DiagnosticContext& ctx, const Trajectory& t, const TruthPath& tp, const ParamVec& theta,
                   const std::vector<std::size_t>& checkpoints) {
  Partial out;
  CompensatedSum d;
  CompensatedSum l;
  std::size_t c = 0;
  for (std::size_t i = 0; i < tp.steps.size() && c < checkpoints.size(); ++i) {
    while (c < checkpoints.size() && tp.steps[i] > checkpoints[c]) {
      out.d.push_back(d.value());
      out.l.push_back(l.value());
      ++c;
    }
    if (c == checkpoints.size()) break;
    const double dk = tp.f0[i] - ctx.model.mean(history_before(t, tp.steps[i]), theta);
    d += dk * dk;
    l += tp.eta[i] * dk;
  }
  while (out.d.size() < checkpoints.size()) {
    out.d.push_back(d.value());
    out.l.push_back(l.value());
  }
  return out;
}

void check_checkpoints(const std::vector<std::size_t>& cps, const Trajectory& t) {
  require(!cps.empty(), "at least one checkpoint is required");
  for (std::size_t i = 0; i < cps.size(); ++i) {
    require(cps[i] >= 1 && cps[i] <= t.steps(), "checkpoint outside the trajectory");
    if (i > 0) require(cps[i] > cps[i - 1], "checkpoints must be increasing");
  }
}

}  // namespace

IdentifiabilityProfile identifiability_profile(const DiagnosticContext& ctx, const Trajectory& t,
                                               const ThetaGrid& grid, const std::vector<std::size_t>& checkpoints) {
  check_checkpoints(checkpoints, t);
  const TruthPath tp(ctx, t, checkpoints.back());
  IdentifiabilityProfile out;
  out.checkpoints = checkpoints;
  out.d_sum.assign(checkpoints.size(), std::vector<double>(grid.points.size()));
  out.inf_outside.assign(checkpoints.size(), std::numeric_limits<double>::infinity());
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    const auto part = accumulate(ctx, t, tp, grid.points[g], checkpoints);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      out.d_sum[c][g] = part.d[c];
      if (grid.outside[g]) out.inf_outside[c] = std::min(out.inf_outside[c], part.d[c]);
    }
  }
  return out;
}

double var_condition_sum(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t n) {
  const TruthPath tp(ctx, t, n);
  double sup = 0.0;
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    if (!grid.outside[g]) continue;
    CompensatedSum dk_sum;
    CompensatedSum total;
    for (std::size_t i = 0; i < tp.steps.size(); ++i) {
      const double dk = tp.f0[i] - ctx.model.mean(history_before(t, tp.steps[i]), grid.points[g]);
      dk_sum += dk * dk;
      if (dk == 0.0) continue;
      const double big_d = dk_sum.value();
      total += tp.sigma2[i] * dk * dk / (big_d * big_d);
    }
    sup = std::max(sup, total.value());
  }
  return sup;
}

std::vector<SllnsmCheckpoint> sllnsm_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid,
                                           const std::vector<std::size_t>& checkpoints) {
  check_checkpoints(checkpoints, t);
  const TruthPath tp(ctx, t, checkpoints.back());
  std::vector<SllnsmCheckpoint> out(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) out[c].n = checkpoints[c];
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    if (!grid.outside[g]) continue;
    const auto part = accumulate(ctx, t, tp, grid.points[g], checkpoints);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      if (!(part.d[c] > 0.0)) {
        ++out[c].undefined_points;
        continue;
      }
      const double r = std::abs(part.l[c]) / part.d[c];
      auto& s = out[c].sup_ratio;
      s.value = s.defined ? std::max(s.value, r) : r;
      s.defined = true;
    }
  }
  return out;
}

RatResult rat_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t h,
                    std::size_t n) {
  require(h < n && n <= t.steps(), "window must satisfy 0 <= h < n <= steps");
  const TruthPath tp(ctx, t, n);
  std::vector<std::size_t> cps;
  if (h > 0) cps.push_back(h);
  cps.push_back(n);
  RatResult out;
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    if (!grid.outside[g]) continue;
    const auto part = accumulate(ctx, t, tp, grid.points[g], cps);
    const double dn = part.d.back();
    const double dh = h > 0 ? part.d.front() : 0.0;
    const double window_sum = dn - dh;
    if (!(window_sum > 0.0)) {
      ++out.undefined_points;
      continue;
    }
    const double r = dn / window_sum;
    out.sup_ratio.value = out.sup_ratio.defined ? std::max(out.sup_ratio.value, r) : r;
    out.sup_ratio.defined = true;
  }
  return out;
}

std::vector<AnStep> an_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t n) {
  const auto steps = usable_steps(t, ctx.model, 0, n);
  std::vector<AnStep> out;
  for (auto k : steps) {
    const History h = history_before(t, k);
    const auto s0 = ctx.truth_model.split(h, ctx.truth);
    if (!s0) fail(ErrorKind::invalid_argument, "model declares no mean split into parametric and nuisance parts");
    double sup2 = 0.0;
    double inf1 = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      if (!grid.outside[g]) continue;
      const auto s = ctx.model.split(h, grid.points[g]);
      if (!s) fail(ErrorKind::invalid_argument, "model declares no mean split into parametric and nuisance parts");
      sup2 = std::max(sup2, std::abs(s0->nuisance - s->nuisance));
      inf1 = std::min(inf1, std::abs(s0->primary - s->primary));
    }
    AnStep a;
    a.k = k;
    if (sup2 == 0.0) {
      a.ratio = {0.0, true};
    } else if (inf1 > 0.0) {
      a.ratio = {sup2 / inf1, true};
    }
    out.push_back(a);
  }
  return out;
}

double unc_ratio(const ConditionalModel& model, const Trajectory& t, const ParamVec& theta_near,
                 const ParamVec& theta0, std::size_t n) {
  double worst = 0.0;
  bool any = false;
  for (auto k : usable_steps(t, model, 0, n)) {
    const History h = history_before(t, k);
    const ParamVec g0 = model.gradient(h, theta0);
    const ParamVec g1 = model.gradient(h, theta_near);
    for (Eigen::Index i = 0; i < g0.size(); ++i) {
      if (g0[i] == 0.0) continue;
      any = true;
      worst = std::max(worst, std::abs(g1[i] / g0[i] - 1.0));
    }
  }
  if (!any) fail(ErrorKind::numerical, "every derivative vanishes at theta0");
  return worst;
}

WuTerms wu_decomposition(const DiagnosticContext& ctx, const Trajectory& t, const ParamVec& theta, Window window) {
  WuTerms out;
  CompensatedSum s1, s0, d, l;
  for (auto k : usable_steps(t, ctx.model, window.h, window.n)) {
    const History h = history_before(t, k);
    const double y = t.values[k] / std::sqrt(ctx.model.weight(h));
    const double f0 = ctx.truth_model.mean(h, ctx.truth);
    const double f = ctx.model.mean(h, theta);
    const double eta = y - f0;
    const double dk = f0 - f;
    s1 += (y - f) * (y - f);
    s0 += eta * eta;
    d += dk * dk;
    l += eta * dk;
  }
  out.s_theta = s1.value();
  out.s_theta0 = s0.value();
  out.d_sum = d.value();
  out.l_sum = l.value();
  return out;
}

SidedCheck reciprocal_square_bound(const std::vector<double>& a) {
  require(!a.empty() && a.front() > 0.0, "the sequence needs a_1 > 0");
  CompensatedSum partial;
  CompensatedSum lhs;
  for (double x : a) {
    require(x >= 0.0, "the sequence must be nonnegative");
    partial += x;
    const double s = partial.value();
    lhs += x / (s * s);
  }
  return {lhs.value(), 2.0 / a.front() - 1.0 / partial.value()};
}

SidedCheck summation_by_parts_identity(const std::vector<double>& s, const std::vector<double>& d) {
  require(!d.empty() && s.size() == d.size() + 1, "need S_1..S_{n+1} and d_1..d_n");
  require(s.front() == 0.0, "the identity needs S_1 = 0");
  const std::size_t n = d.size();
  CompensatedSum big_d;
  CompensatedSum lhs;
  CompensatedSum rhs;
  for (std::size_t k = 0; k < n; ++k) {
    big_d += d[k] * d[k];
    lhs += (s[k + 1] - s[k]) * big_d.value();
    rhs += (s[n] - s[k]) * d[k] * d[k];
  }
  return {lhs.value(), rhs.value()};
}

DiagnosticsReport diagnose(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid,
                           const std::vector<std::size_t>& checkpoints, const std::optional<ParamVec>& unc_near) {
  DiagnosticsReport r;
  r.model_id = ctx.model.id();
  r.grid = grid;
  r.profile = identifiability_profile(ctx, t, grid, checkpoints);
  r.sllnsm = sllnsm_ratio(ctx, t, grid, checkpoints);
  for (auto n : checkpoints) {
    r.var_sums.push_back(var_condition_sum(ctx, t, grid, n));
    r.rat.push_back(n >= 2 ? rat_ratio(ctx, t, grid, n / 2, n) : RatResult{});
    RatioValue an;
    try {
      const auto seq = an_ratio(ctx, t, grid, n);
      if (!seq.empty() && seq.back().k == n) an = seq.back().ratio;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::invalid_argument) throw;
    }
    r.an.push_back(an);
  }
  if (unc_near) r.unc = unc_ratio(ctx.model, t, *unc_near, grid.theta0, checkpoints.back());
  return r;
}

}  // namespace clse
