#pragma once

#include "clse/core.hpp"
#include "clse/rng.hpp"
#include "clse/trajectory.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace clse {

/// Mean split f_k = f_k^(1)(theta) + f_k^(2)(theta, nu).
struct MeanSplit {
  double primary = 0.0;
  double nuisance = 0.0;
};

/// Conditional model in its normalized form.
///
/// Given the history Z_0..Z_{k-1}, the model supplies the weight lambda_k,
/// the normalized conditional mean f_k(theta) = g_k(theta) lambda_k^{-1/2}
/// of Y_k = Z_k lambda_k^{-1/2}, its first and second derivatives in theta,
/// and the conditional variance of Y_k. Every evaluator is a pure function
/// of (history, theta).
class ConditionalModel {
public:
  virtual ~ConditionalModel() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;

  /// lambda_k; zero marks a step that must be excluded (extinct history).
  virtual double weight(History h) const = 0;
  virtual double mean(History h, const ParamVec& theta) const = 0;
  virtual ParamVec gradient(History h, const ParamVec& theta) const = 0;
  virtual ParamMat hessian(History h, const ParamVec& theta) const = 0;
  /// Model-implied Var(Y_k | F_{k-1}) at theta.
  virtual double variance(History h, const ParamVec& theta) const = 0;
  /// w_k(theta) in sigma_k^2 = nu2 * w_k(theta), the variance-nuisance form.
  virtual double variance_shape(History, const ParamVec&) const { return 1.0; }
  /// Mean split into the parametric and nuisance parts, when the model declares one.
  virtual std::optional<MeanSplit> split(History, const ParamVec&) const { return std::nullopt; }
  /// Draws Z_k given the history under the true parameters.
  virtual double simulate_step(History h, const ParamVec& truth, Rng& rng) const = 0;

  /// g_k = f_k lambda_k^{1/2}, conditional mean of Z_k.
  double raw_mean(History h, const ParamVec& theta) const;
};

// ---------------------------------------------------------------------------
// Catalog

enum class OffspringLaw { binary, poisson };

/// Bienayme-Galton-Watson process, theta = (m). lambda_k = N_{k-1},
/// f_k(m) = m N_{k-1}^{1/2}. Binary offspring takes values {1,2} with
/// P(2) = m - 1; Poisson offspring has mean m.
class BgwModel final : public ConditionalModel {
public:
  explicit BgwModel(OffspringLaw law) : law_(law) {}

  OffspringLaw law() const { return law_; }
  std::string id() const override { return law_ == OffspringLaw::binary ? "bgw-binary" : "bgw-poisson"; }
  std::size_t dim() const override { return 1; }
  std::vector<std::string> param_names() const override { return {"m"}; }
  double weight(History h) const override;
  double mean(History h, const ParamVec& theta) const override;
  ParamVec gradient(History h, const ParamVec& theta) const override;
  ParamMat hessian(History h, const ParamVec& theta) const override;
  /// (m-1)(2-m) for binary offspring, m for Poisson.
  double variance(History h, const ParamVec& theta) const override;
  std::optional<MeanSplit> split(History h, const ParamVec& theta) const override;
  double simulate_step(History h, const ParamVec& truth, Rng& rng) const override;

private:
  OffspringLaw law_;
};

enum class PcrKind { m1, m2, m3 };

/// Size-dependent PCR amplification models, Y_k = N_k (lambda_k = 1),
/// f_k = N_{k-1} (1 + p_k):
///   M1  theta = (K):        p = K / (K + N)
///   M2  theta = (K, C, S):  p = K / (K + N_S) * [1 + exp(-C (N_S / S - 1))] / 2
///   M3  theta = (K, S^a, a): p = K / (K + N_S) * (1 + S^a N_S^{-a}) / 2
/// with the saturated size N_S = max(N, S). For M3 the threshold is
/// recovered as S = (S^a)^{1/a}; a = 0 disables saturation.
class PcrModel final : public ConditionalModel {
public:
  explicit PcrModel(PcrKind kind) : kind_(kind) {}

  PcrKind kind() const { return kind_; }
  std::string id() const override;
  std::size_t dim() const override { return kind_ == PcrKind::m1 ? 1 : 3; }
  std::vector<std::string> param_names() const override;
  double weight(History) const override { return 1.0; }
  double mean(History h, const ParamVec& theta) const override;
  ParamVec gradient(History h, const ParamVec& theta) const override;
  ParamMat hessian(History h, const ParamVec& theta) const override;
  /// N p (1 - p).
  double variance(History h, const ParamVec& theta) const override;
  double variance_shape(History h, const ParamVec& theta) const override { return variance(h, theta); }
  /// M1: f^(2) = 0. M3: f^(1)(K) = N (1 + K / (2 (K + N))), f^(2) = f - f^(1).
  /// M2 declares no split.
  std::optional<MeanSplit> split(History h, const ParamVec& theta) const override;
  double simulate_step(History h, const ParamVec& truth, Rng& rng) const override;

  /// Replication probability p_k for the previous population size.
  double replication_prob(const ParamVec& theta, double n_prev) const;
  /// Rejects parameters outside the model's domain (K > 0, C >= 0, S >= 1, a >= 0).
  void validate(const ParamVec& theta) const;

private:
  PcrKind kind_;
};

/// ARCH(1) on squared observations Z_k = xi_k^2, theta = (a0, a1):
/// f_k = a0 + a1 Z_{k-1}, Var(Z_k | F) = kappa f_k^2 with kappa = E(U^2 - 1)^2 = 2
/// for Gaussian innovations.
class ArchModel final : public ConditionalModel {
public:
  /// `zero_innovations` forces U_k = 0 (degenerate test hook).
  explicit ArchModel(bool zero_innovations = false) : zero_innovations_(zero_innovations) {}

  std::string id() const override { return "arch1"; }
  std::size_t dim() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"a0", "a1"}; }
  double weight(History) const override { return 1.0; }
  double mean(History h, const ParamVec& theta) const override;
  ParamVec gradient(History h, const ParamVec& theta) const override;
  ParamMat hessian(History h, const ParamVec& theta) const override;
  double variance(History h, const ParamVec& theta) const override;
  double variance_shape(History h, const ParamVec& theta) const override;
  std::optional<MeanSplit> split(History h, const ParamVec& theta) const override;
  double simulate_step(History h, const ParamVec& truth, Rng& rng) const override;

private:
  bool zero_innovations_;
};

/// Linear regression f_k = theta^T W_k with known covariates, i.i.d.
/// N(0, sigma^2) errors and lambda_k = 1. W_k is row k-1 of `covariates`.
class LinearModel final : public ConditionalModel {
public:
  LinearModel(std::vector<ParamVec> covariates, double sigma);

  std::string id() const override { return "linear"; }
  std::size_t dim() const override { return static_cast<std::size_t>(covariates_.front().size()); }
  std::vector<std::string> param_names() const override;
  double weight(History) const override { return 1.0; }
  double mean(History h, const ParamVec& theta) const override;
  ParamVec gradient(History h, const ParamVec& theta) const override;
  ParamMat hessian(History h, const ParamVec& theta) const override;
  double variance(History, const ParamVec&) const override { return sigma_ * sigma_; }
  std::optional<MeanSplit> split(History h, const ParamVec& theta) const override;
  double simulate_step(History h, const ParamVec& truth, Rng& rng) const override;

  const ParamVec& covariate(std::size_t k) const;

private:
  std::vector<ParamVec> covariates_;
  double sigma_;
};

/// Plug-in view of a model under policy A1: the coordinates not marked
/// free are frozen at the values of `full_params` (the nuisance estimate
/// nu-hat) and the view is a model in the free coordinates only.
class RestrictedModel final : public ConditionalModel {
public:
  RestrictedModel(const ConditionalModel& full, std::vector<bool> free_mask, ParamVec full_params);

  std::string id() const override;
  std::size_t dim() const override { return free_.size(); }
  std::vector<std::string> param_names() const override;
  double weight(History h) const override { return full_.weight(h); }
  double mean(History h, const ParamVec& theta) const override;
  ParamVec gradient(History h, const ParamVec& theta) const override;
  ParamMat hessian(History h, const ParamVec& theta) const override;
  double variance(History h, const ParamVec& theta) const override;
  double variance_shape(History h, const ParamVec& theta) const override;
  std::optional<MeanSplit> split(History h, const ParamVec& theta) const override;
  double simulate_step(History h, const ParamVec& truth, Rng& rng) const override;

  ParamVec embed(const ParamVec& free_params) const;
  ParamVec project(const ParamVec& full_params) const;
  const ParamVec& frozen() const { return full_params_; }
  const ConditionalModel& full() const { return full_; }

private:
  const ConditionalModel& full_;
  std::vector<Eigen::Index> free_;
  ParamVec full_params_;
};

/// Builds a catalog model by id: bgw-binary, bgw-poisson, pcr-m1, pcr-m2,
/// pcr-m3, arch1.
std::unique_ptr<ConditionalModel> make_model(const std::string& id);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizedStep {
  std::size_t k = 0;
  double weight = 0.0;
  double y = 0.0;
  double f = 0.0;
  double eta = 0.0;  ///< NaN when the path has no truth
  double sigma2 = 0.0;
};

/// Y_k = Z_k lambda_k^{-1/2} and friends over the usable steps of a path.
struct NormalizedPath {
  std::vector<NormalizedStep> steps;
  std::vector<std::size_t> excluded;  ///< steps with zero weight (extinct history)
  bool has_truth = false;
};

/// Normalizes `t` under `model` at `theta`. When `truth` is given, eta_k is
/// filled as Y_k - f_k(truth) using `truth_model` (defaults to `model`).
NormalizedPath normalize(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta,
                         const std::optional<ParamVec>& truth = std::nullopt,
                         const ConditionalModel* truth_model = nullptr);

/// Steps k in (h, n] whose weight is positive; zero-weight steps are
/// reported through `excluded` when non-null.
std::vector<std::size_t> usable_steps(const Trajectory& t, const ConditionalModel& model, std::size_t h,
                                      std::size_t n, std::vector<std::size_t>* excluded = nullptr);

inline History history_before(const Trajectory& t, std::size_t k) { return History(t.values.data(), k); }

}  // namespace clse
