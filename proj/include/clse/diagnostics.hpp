#pragma once

#include "clse/estimators.hpp"
#include "clse/models.hpp"
#include "clse/trajectory.hpp"

#include <optional>
#include <vector>

namespace clse {

/// Finite stand-in for Theta with the points at Euclidean distance >= delta
/// from theta0 (the complement of the delta-ball) flagged.
struct ThetaGrid {
  std::vector<ParamVec> points;
  std::vector<bool> outside;
  ParamVec theta0;
  double delta = 0.0;
  std::size_t resolution = 0;  ///< 0 for an explicit point list

  static ThetaGrid regular(const Box& box, const ParamVec& theta0, double delta, std::size_t resolution = 33);
  static ThetaGrid from_points(std::vector<ParamVec> points, const ParamVec& theta0, double delta);

  std::size_t outside_count() const;
};

/// Truth side of a diagnostic: the model evaluated at (theta, nu-hat) and the
/// generating model with its full true parameters (theta0, nu0).
struct DiagnosticContext {
  const ConditionalModel& model;
  const ConditionalModel& truth_model;
  ParamVec truth;

  /// Uses the trajectory's truth record; for a RestrictedModel the truth
  /// model is the underlying full model.
  static DiagnosticContext from_trajectory(const Trajectory& t, const ConditionalModel& model);
};

/// A ratio that may be 0/0 or x/0; undefined values never enter aggregates.
struct RatioValue {
  double value = 0.0;
  bool defined = false;
};

struct IdentifiabilityProfile {
  std::vector<std::size_t> checkpoints;
  std::vector<std::vector<double>> d_sum;  ///< [checkpoint][grid point] D_n(theta)
  std::vector<double> inf_outside;         ///< inf over the delta-complement per checkpoint
};

IdentifiabilityProfile identifiability_profile(const DiagnosticContext& ctx, const Trajectory& t,
                                               const ThetaGrid& grid, const std::vector<std::size_t>& checkpoints);

/// sup over the delta-complement of sum_{k<=n} sigma_k^2 d_k^2 / D_k^2; a
/// term with d_k = 0 contributes 0.
double var_condition_sum(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t n);

struct SllnsmCheckpoint {
  std::size_t n = 0;
  RatioValue sup_ratio;
  std::size_t undefined_points = 0;  ///< grid points skipped because D_n = 0
};

std::vector<SllnsmCheckpoint> sllnsm_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid,
                                           const std::vector<std::size_t>& checkpoints);

struct RatResult {
  RatioValue sup_ratio;
  std::size_t undefined_points = 0;
};

/// sup D_n / D_{h,n} over the delta-complement, with D_{h,n} = D_n - D_h.
RatResult rat_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t h,
                    std::size_t n);

struct AnStep {
  std::size_t k = 0;
  RatioValue ratio;
};

/// Per step k <= n: sup |d_k^(2)| / inf |d_k^(1)| over the delta-complement.
std::vector<AnStep> an_ratio(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid, std::size_t n);

/// max over k <= n and coordinates i of |f'_{k;i}(theta_near) / f'_{k;i}(theta0) - 1|.
double unc_ratio(const ConditionalModel& model, const Trajectory& t, const ParamVec& theta_near,
                 const ParamVec& theta0, std::size_t n);

/// The pieces of S(theta) - S(theta0) = D(theta) + 2 L(theta) over a window.
struct WuTerms {
  double s_theta = 0.0;
  double s_theta0 = 0.0;
  double d_sum = 0.0;
  double l_sum = 0.0;

  double lhs() const { return s_theta - s_theta0; }
  double rhs() const { return d_sum + 2.0 * l_sum; }
};

WuTerms wu_decomposition(const DiagnosticContext& ctx, const Trajectory& t, const ParamVec& theta, Window window);

struct SidedCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = sum a_k S_k^{-2}, rhs = 2/a_1 - 1/S_n, S_k = a_1 + ... + a_k.
SidedCheck reciprocal_square_bound(const std::vector<double>& a);

/// `s` holds S_1..S_{n+1} with S_1 = 0 and `d` holds d_1..d_n;
/// lhs = sum (S_{k+1} - S_k) D_k, rhs = sum (S_{n+1} - S_k) d_k^2.
SidedCheck summation_by_parts_identity(const std::vector<double>& s, const std::vector<double>& d);

struct DiagnosticsReport {
  std::string model_id;
  ThetaGrid grid;
  IdentifiabilityProfile profile;
  std::vector<double> var_sums;  ///< per checkpoint
  std::vector<SllnsmCheckpoint> sllnsm;
  std::vector<RatResult> rat;  ///< per checkpoint, h = n/2
  std::vector<RatioValue> an;  ///< per checkpoint, at step n; undefined when the model has no split
  std::optional<double> unc;
};

/// Runs every diagnostic over the checkpoints. `unc_near` is the point for the
/// continuity ratio (skipped when absent).
DiagnosticsReport diagnose(const DiagnosticContext& ctx, const Trajectory& t, const ThetaGrid& grid,
                           const std::vector<std::size_t>& checkpoints,
                           const std::optional<ParamVec>& unc_near = std::nullopt);

}  // namespace clse
