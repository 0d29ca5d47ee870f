#pragma once

#include "clse/asymptotics.hpp"
#include "clse/estimators.hpp"
#include "clse/stats.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clse {

enum class EstimatorKind { clse, qle, two_stage };

enum class ScalingKind {
  sqrt_n,      ///< sqrt(n) (theta-hat - theta0)
  psi_bgw,     ///< (sum m0^{k-1})^{1/2} (m-hat - m0)
  phi_scalar,  ///< scalar M3 Phi_n
  phi_matrix,  ///< two-parameter M3 Phi_n (literal matrix form)
  info,        ///< (sum f'_k f'_k^T at (theta0, nu-hat))^{1/2} (theta-hat - theta0)
};

enum class ReferenceLaw { standard_normal, bgw_mixture };

struct Scenario {
  std::string name = "scenario";
  std::string model_id;
  std::map<std::string, double> truth;  ///< full parameter vector by name
  std::uint64_t initial = 1;            ///< N_0 (branching) ; xi_0 is 0 for ARCH
  std::size_t n = 2;
  std::size_t h = 0;
  std::size_t stage1_n = 0;  ///< two-stage only; 0 means n
  EstimatorKind estimator = EstimatorKind::clse;
  bool two_parameter = false;
  bool oracle_nuisance = false;  ///< two-stage only: skip stage 1, freeze (S^a, a) at the truth
  Box box;         ///< estimation box (stage-2 box for two-stage)
  Box stage1_box;  ///< two-stage only
  OptimizerConfig optimizer;
  OptimizerConfig stage1_optimizer;
  ScalingKind scaling = ScalingKind::sqrt_n;
  double scale_variance = 1.0;  ///< standardized errors are divided by its square root
  ReferenceLaw reference = ReferenceLaw::standard_normal;
  std::size_t reference_samples = 10000;
  std::size_t reference_horizon = 30;
  double mixture_exponent = 1.0;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  bool condition_on_nonextinction = true;
  std::optional<double> ci_level;
  VarianceForm variance_form = VarianceForm::constant;

  void validate() const;
  ParamVec truth_vector() const;
};

enum class ReplicateStatus { ok, extinct, failed };

struct ReplicateOutcome {
  ReplicateStatus status = ReplicateStatus::failed;
  std::uint64_t seed = 0;
  std::string failure;
  ParamVec theta_hat;
  std::optional<ParamVec> stage1;
  ParamVec standardized;
  double sigma2_hat = 0.0;
  std::vector<Interval> intervals;
};

struct CoordinateSummary {
  std::string name;
  std::vector<double> samples;  ///< standardized errors in replicate order
  Moments moments;
  double ks = 0.0;
  std::optional<double> coverage;
};

struct MonteCarloSummary {
  std::string scenario;
  std::size_t requested = 0;
  std::size_t used = 0;
  std::size_t extinct = 0;
  std::size_t failed = 0;
  bool scenario_failed = false;  ///< more than 5% failures or nothing usable
  std::vector<std::string> failure_reasons;  ///< distinct reasons, sorted
  std::vector<CoordinateSummary> coordinates;
  std::optional<double> cross_correlation;  ///< two coordinates only
  std::vector<ParamVec> estimates;          ///< theta-hat of used replicates, replicate order
  std::vector<ParamVec> stage1_estimates;   ///< two-stage only, same order
  std::vector<double> sigma2_hats;
  double wall_seconds = 0.0;  ///< not part of the deterministic content
};

/// Single replicate; a pure function of (scenario, r).
ReplicateOutcome run_replicate(const Scenario& s, std::size_t r);

/// Worker count: `requested` (0 = available cores) capped by CLSE_LAB_WORKERS.
std::size_t effective_workers(std::size_t requested = 0);

/// Runs every replicate on up to `workers` threads; the summary does not
/// depend on the worker count.
MonteCarloSummary run_mc(const Scenario& s, std::size_t workers = 0);

/// Human-readable replicate plan printed by dry runs.
std::string describe_plan(const Scenario& s, std::size_t workers);

/// Deterministic content equality (ignores wall time).
bool same_content(const MonteCarloSummary& a, const MonteCarloSummary& b);

}  // namespace clse
