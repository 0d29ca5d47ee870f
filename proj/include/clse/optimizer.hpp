#pragma once

#include "clse/core.hpp"

#include <functional>
#include <vector>

namespace clse {

/// Multi-start schedule: a deterministic grid prescan over the box, then
/// Nelder-Mead refinement from the best grid points, then (when the
/// objective supplies derivatives) a damped Newton polish.
struct OptimizerConfig {
  std::size_t grid_resolution = 33;  ///< points per coordinate
  double ftol = 1e-12;               ///< relative objective tolerance
  double xtol = 1e-9;                ///< parameter step tolerance
  std::size_t max_iterations = 10000;
  std::size_t starts = 5;
  bool newton_polish = true;

  void validate() const;
};

struct Objective {
  std::function<double(const ParamVec&)> value;
  /// Optional. Fills the gradient and a Hessian (or Gauss-Newton
  /// approximation); returns false when they are unavailable at x.
  std::function<bool(const ParamVec&, ParamVec&, ParamMat&)> derivatives;
};

struct LocalMinimum {
  ParamVec start;
  double start_value = 0.0;
  ParamVec x;
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

struct MinimizeResult {
  ParamVec x;
  double value = 0.0;
  bool converged = false;
  std::size_t starts_evaluated = 0;
  std::size_t best_start_index = 0;
  std::vector<LocalMinimum> locals;  ///< one per start, in start order
};

/// Objective values that agree within this relative tolerance count as ties.
bool objective_tie(double a, double b);

/// Points of the regular grid over `box`, `resolution` per coordinate,
/// in lexicographic order.
std::vector<ParamVec> grid_points(const Box& box, std::size_t resolution);

/// Box-constrained Nelder-Mead from `start`; trial points are clamped into the box.
LocalMinimum nelder_mead(const Objective& f, const Box& box, const ParamVec& start, const ParamVec& step,
                         const OptimizerConfig& config);

/// Damped Newton refinement; never returns a point worse than `x`.
LocalMinimum newton_polish(const Objective& f, const Box& box, LocalMinimum current);

/// Global schedule. Throws ErrorKind::numerical when the objective is
/// non-finite at every start.
MinimizeResult minimize(const Objective& f, const Box& box, const OptimizerConfig& config);

/// Orders local minima by objective value (ties by lexicographic x) and
/// returns the index of the winner among `candidates`.
std::size_t select_best(const std::vector<LocalMinimum>& candidates, const std::vector<std::size_t>& eligible);

}  // namespace clse
