#pragma once

#include "clse/models.hpp"
#include "clse/optimizer.hpp"
#include "clse/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace clse {

/// Estimation window: the sums run over k = h+1..n.
struct Window {
  std::size_t h = 0;
  std::size_t n = 0;
};

/// Frozen plug-in values a restricted model was evaluated at.
struct NuisanceRecord {
  std::vector<std::string> names;
  std::vector<double> values;
};

struct EstimationResult {
  std::string model_id;
  std::vector<std::string> param_names;
  ParamVec theta_hat;
  double objective = 0.0;
  Window window;
  NuisanceRecord nuisance;
  bool converged = false;
  std::size_t starts_evaluated = 0;
  std::size_t best_start_index = 0;
  std::size_t usable_steps = 0;
  std::size_t excluded_steps = 0;
};

/// Precomputed usable steps of a window; evaluates the weighted
/// least-squares criterion and its derivatives.
class ClseObjective {
public:
  ClseObjective(const Trajectory& t, const ConditionalModel& model, Window window);

  double value(const ParamVec& theta) const;
  /// grad = -2 sum (Y - f) f', hess = 2 sum f' f'^T - 2 sum (Y - f) f''.
  void derivatives(const ParamVec& theta, ParamVec& grad, ParamMat& hess) const;
  Objective as_objective() const;

  const std::vector<std::size_t>& steps() const { return steps_; }
  std::size_t excluded() const { return excluded_; }
  double y(std::size_t i) const { return y_[i]; }
  History history(std::size_t i) const { return history_before(t_, steps_[i]); }

private:
  const Trajectory& t_;
  const ConditionalModel& model_;
  std::vector<std::size_t> steps_;
  std::vector<double> y_;
  std::size_t excluded_ = 0;
};

/// S over the window at a fixed theta.
double clse_objective(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta, Window window);

/// Multi-start weighted CLSE. A RestrictedModel carries the plug-in nuisance.
EstimationResult clse(const Trajectory& t, const ConditionalModel& model, Window window, const Box& box,
                      const OptimizerConfig& config = {});

/// sum N_k / sum N_{k-1} over k = 1..n, from the exact counts.
double harris_closed_form(const Trajectory& t);
/// N_n / N_{n-1}.
double lotka_nagaev(const Trajectory& t);

enum class QleWeighting {
  model_variance,  ///< b_k = Var(Z_k | F_{k-1}) from the model
  clse_weight,     ///< b_k = lambda_k; stationary points coincide with the CLSE
};

struct QleConfig {
  OptimizerConfig optimizer;
  QleWeighting weighting = QleWeighting::model_variance;
  double residual_tol = 1e-8;
};

/// Estimating function Q(theta) = -sum (Z_k - g_k) g'_k / b_k, written in the normalized scale.
ParamVec qle_score(const ClseObjective& obj, const ConditionalModel& model, const ParamVec& theta,
                   QleWeighting weighting);

/// Root of the estimating equation, located by minimizing ||Q||^2. Throws
/// ErrorKind::numerical when no start reaches the residual floor.
EstimationResult qle(const Trajectory& t, const ConditionalModel& model, Window window, const Box& box,
                     const QleConfig& config = {});

enum class VarianceForm {
  constant,     ///< sigma_k^2 = nu2
  model_shape,  ///< sigma_k^2 = nu2 * w_k(theta-hat)
};

/// Least-squares fit of the variance nuisance to the squared residuals
/// (Y_k - f_k(theta-hat))^2. The fitted form is linear in nu2, so the fit is closed form.
double estimate_variance_nuisance(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta_hat,
                                  Window window, VarianceForm form = VarianceForm::constant);

// ---------------------------------------------------------------------------
// Two-stage PCR (M3)

struct TwoStageConfig {
  std::size_t n0 = 0;
  std::size_t n = 0;
  Box stage1_box;  ///< (K, S^a, a); the a range must lie inside (0, 1/2)
  Box stage2_box;  ///< (K) or (K, S^a)
  bool two_parameter = false;
  OptimizerConfig stage1;
  OptimizerConfig stage2;
  /// Test hook: skip stage 1 and freeze (S^a, a) at these values.
  std::optional<ParamVec> injected_nuisance;
};

struct TwoStageResult {
  std::optional<EstimationResult> stage1;
  EstimationResult stage2;
  ParamVec frozen;  ///< full (K, S^a, a) vector the stage-2 view was frozen at
};

TwoStageResult two_stage_pcr(const Trajectory& t, const TwoStageConfig& config);

/// Plug-in view of M3 with K (and S^a when two_parameter) free.
RestrictedModel m3_stage2_view(const PcrModel& m3, const ParamVec& frozen, bool two_parameter);

}  // namespace clse
