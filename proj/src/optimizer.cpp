#include "clse/optimizer.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace clse {

void OptimizerConfig::validate() const {
  require(grid_resolution >= 3, "grid resolution must be >= 3");
  require(ftol > 0.0 && xtol > 0.0, "optimizer tolerances must be positive");
  require(max_iterations >= 1, "max_iterations must be >= 1");
  require(starts >= 1, "at least one start is required");
}

bool objective_tie(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<ParamVec> grid_points(const Box& box, std::size_t resolution) {
  box.validate();
  const auto p = static_cast<Eigen::Index>(box.dim());
  std::vector<std::size_t> counts(box.dim());
  for (Eigen::Index i = 0; i < p; ++i) counts[static_cast<std::size_t>(i)] = box.lo[i] == box.hi[i] ? 1 : resolution;
  std::size_t total = 1;
  for (auto c : counts) total *= c;
  std::vector<ParamVec> out;
  out.reserve(total);
  std::vector<std::size_t> idx(box.dim(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    ParamVec x(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      const auto c = counts[static_cast<std::size_t>(i)];
      x[i] = c == 1 ? box.lo[i]
                    : box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(idx[static_cast<std::size_t>(i)]) /
                                      static_cast<double>(c - 1);
    }
    out.push_back(x);
    for (Eigen::Index i = p - 1; i >= 0; --i) {
      auto& k = idx[static_cast<std::size_t>(i)];
      if (++k < counts[static_cast<std::size_t>(i)]) break;
      k = 0;
    }
  }
  return out;
}

namespace {

double safe_eval(const Objective& f, const ParamVec& x) {
  const double v = f.value(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

LocalMinimum nelder_mead(const Objective& f, const Box& box, const ParamVec& start, const ParamVec& step,
                         const OptimizerConfig& config) {
  LocalMinimum out;
  out.start = start;
  out.start_value = safe_eval(f, start);

  // Only coordinates with a nonzero step take part in the simplex.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < start.size(); ++i)
    if (step[i] != 0.0) active.push_back(i);
  const std::size_t m = active.size();

  std::vector<ParamVec> simplex{start};
  std::vector<double> values{out.start_value};
  for (auto i : active) {
    ParamVec v = start;
    v[i] = start[i] + step[i] <= box.hi[i] ? start[i] + step[i] : start[i] - step[i];
    v = box.clamp(v);
    simplex.push_back(v);
    values.push_back(safe_eval(f, v));
  }

  std::vector<std::size_t> order(m + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (values[a] != values[b]) return values[a] < values[b];
      return lex_less(simplex[a], simplex[b]);
    });
    std::vector<ParamVec> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex.swap(s2);
    values.swap(v2);
  };

  std::size_t it = 0;
  bool converged = m == 0;
  while (!converged && it < config.max_iterations) {
    sort_simplex();
    double diameter = 0.0;
    for (std::size_t j = 1; j <= m; ++j) diameter = std::max(diameter, (simplex[j] - simplex[0]).cwiseAbs().maxCoeff());
    const double scale = 1.0 + simplex[0].cwiseAbs().maxCoeff();
    const double spread = values[m] - values[0];
    if (diameter <= config.xtol * scale ||
        (std::isfinite(spread) && spread <= config.ftol * std::abs(values[0]) && diameter <= 1e-6 * scale)) {
      converged = true;
      break;
    }
    ++it;

    ParamVec centroid = ParamVec::Zero(start.size());
    for (std::size_t j = 0; j < m; ++j) centroid += simplex[j];
    centroid /= static_cast<double>(m);
    const ParamVec& worst = simplex[m];

    const ParamVec xr = box.clamp(centroid + (centroid - worst));
    const double fr = safe_eval(f, xr);
    if (fr < values[0]) {
      const ParamVec xe = box.clamp(centroid + 2.0 * (centroid - worst));
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        simplex[m] = xe;
        values[m] = fe;
      } else {
        simplex[m] = xr;
        values[m] = fr;
      }
      continue;
    }
    if (fr < values[m - 1]) {
      simplex[m] = xr;
      values[m] = fr;
      continue;
    }
    const bool outside = fr < values[m];
    const ParamVec xc = outside ? box.clamp(centroid + 0.5 * (xr - centroid)) : box.clamp(centroid + 0.5 * (worst - centroid));
    const double fc = safe_eval(f, xc);
    if (fc < (outside ? fr : values[m])) {
      simplex[m] = xc;
      values[m] = fc;
      continue;
    }
    for (std::size_t j = 1; j <= m; ++j) {
      simplex[j] = box.clamp(simplex[0] + 0.5 * (simplex[j] - simplex[0]));
      values[j] = safe_eval(f, simplex[j]);
    }
  }
  sort_simplex();
  out.x = simplex[0];
  out.value = values[0];
  out.converged = converged;
  out.iterations = it;
  return out;
}

LocalMinimum newton_polish(const Objective& f, const Box& box, LocalMinimum current) {
  if (!f.derivatives || !std::isfinite(current.value)) return current;
  const auto p = current.x.size();
  for (int iter = 0; iter < 50; ++iter) {
    ParamVec grad(p);
    ParamMat hess(p, p);
    if (!f.derivatives(current.x, grad, hess)) break;
    if (!grad.allFinite() || !hess.allFinite()) break;
    Eigen::LDLT<ParamMat> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const ParamVec dir = -ldlt.solve(grad);
    if (!dir.allFinite()) break;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const ParamVec trial = box.clamp(current.x + t * dir);
      const double v = safe_eval(f, trial);
      if (v <= current.value) {
        const double step = (trial - current.x).cwiseAbs().maxCoeff();
        moved = step > 0.0;
        current.x = trial;
        current.value = v;
        break;
      }
    }
    if (!moved) break;
    if (t * dir.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + current.x.cwiseAbs().maxCoeff())) {
      current.converged = true;
      break;
    }
  }
  return current;
}

std::size_t select_best(const std::vector<LocalMinimum>& candidates, const std::vector<std::size_t>& eligible) {
  require(!eligible.empty(), "no candidate minima to choose from");
  std::size_t best = eligible.front();
  for (auto i : eligible) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (objective_tie(c.value, b.value)) {
      if (lex_less(c.x, b.x)) best = i;
    } else if (c.value < b.value) {
      best = i;
    }
  }
  return best;
}

MinimizeResult minimize(const Objective& f, const Box& box, const OptimizerConfig& config) {
  config.validate();
  box.validate();
  const auto grid = grid_points(box, config.grid_resolution);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = safe_eval(f, grid[i]);
    if (std::isfinite(v)) scored.emplace_back(v, i);
  }
  if (scored.empty()) fail(ErrorKind::numerical, "objective is non-finite at every grid point");
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  ParamVec step(box.lo.size());
  for (Eigen::Index i = 0; i < step.size(); ++i)
    step[i] = (box.hi[i] - box.lo[i]) / static_cast<double>(config.grid_resolution - 1);

  MinimizeResult out;
  const std::size_t nstarts = std::min(config.starts, scored.size());
  std::vector<std::size_t> eligible;
  for (std::size_t s = 0; s < nstarts; ++s) {
    LocalMinimum local = nelder_mead(f, box, grid[scored[s].second], step, config);
    // Clamping at the box can flatten the simplex onto a face; restart from the
    // converged point with a fresh simplex until the value stops improving.
    for (int restart = 0; restart < 20 && local.iterations < config.max_iterations; ++restart) {
      LocalMinimum again = nelder_mead(f, box, local.x, step, config);
      const bool improved = again.value < local.value && !objective_tie(again.value, local.value);
      local.iterations += again.iterations;
      if (!improved) break;
      local.x = again.x;
      local.value = again.value;
      local.converged = again.converged;
    }
    if (config.newton_polish) local = newton_polish(f, box, local);
    out.locals.push_back(local);
    if (std::isfinite(local.value)) eligible.push_back(s);
  }
  out.starts_evaluated = nstarts;
  if (eligible.empty()) fail(ErrorKind::numerical, "objective is non-finite at every start");
  out.best_start_index = select_best(out.locals, eligible);
  const auto& best = out.locals[out.best_start_index];
  out.x = best.x;
  out.value = best.value;
  out.converged = best.converged;
  return out;
}

}  // namespace clse
