#include "clse/models.hpp"

#include "clse/jet.hpp"
#include "clse/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clse {

double ConditionalModel::raw_mean(History h, const ParamVec& theta) const {
  return mean(h, theta) * std::sqrt(weight(h));
}

namespace {

double previous(History h) {
  require(!h.empty(), "model evaluation needs at least one past observation");
  return h.back();
}

std::uint64_t previous_count(History h) {
  const double prev = previous(h);
  require(prev >= 0.0 && prev == std::floor(prev), "branching history must hold nonnegative integers");
  require(prev < 0x1.0p64, "branching history exceeds the 64-bit range");
  return static_cast<std::uint64_t>(prev);
}

ParamMat zero_hessian(Eigen::Index p) { return ParamMat::Zero(p, p); }

}  // namespace

// ---------------------------------------------------------------------------
// BGW

double BgwModel::weight(History h) const { return std::max(0.0, previous(h)); }

double BgwModel::mean(History h, const ParamVec& theta) const { return theta[0] * std::sqrt(previous(h)); }

ParamVec BgwModel::gradient(History h, const ParamVec&) const { return make_params({std::sqrt(previous(h))}); }

ParamMat BgwModel::hessian(History, const ParamVec&) const { return zero_hessian(1); }

double BgwModel::variance(History, const ParamVec& theta) const {
  const double m = theta[0];
  return law_ == OffspringLaw::binary ? (m - 1.0) * (2.0 - m) : m;
}

std::optional<MeanSplit> BgwModel::split(History h, const ParamVec& theta) const {
  return MeanSplit{mean(h, theta), 0.0};
}

double BgwModel::simulate_step(History h, const ParamVec& truth, Rng& rng) const {
  const std::uint64_t n = previous_count(h);
  const std::uint64_t next = law_ == OffspringLaw::binary ? binary_offspring_step(n, truth[0] - 1.0, rng)
                                                          : poisson_offspring_step(n, truth[0], rng);
  return static_cast<double>(next);
}

// ---------------------------------------------------------------------------
// PCR

namespace {

// p(theta; N) for every PCR kind, written once for double and Jet.
template <class T>
T pcr_probability(PcrKind kind, const T& k, const T& a, const T& b, double n) {
  using std::exp;
  using std::log;
  switch (kind) {
    case PcrKind::m1:
      return k / (k + n);
    case PcrKind::m2: {  // a = C, b = S
      if (n >= value_of(b)) return k / (k + n) * (1.0 + exp(-a * (n / b - 1.0))) / 2.0;
      return k / (k + b);
    }
    case PcrKind::m3: {  // a = S^alpha, b = alpha
      const double ln = std::log(n);
      // N >= S is tested as alpha ln N >= ln S^alpha, which avoids forming S
      if (value_of(b) == 0.0 || value_of(a) <= 0.0 || value_of(b) * ln >= std::log(value_of(a)))
        return k / (k + n) * (1.0 + a * exp(-b * ln)) / 2.0;
      return k / (k + exp(log(a) / b));  // a S^{-alpha} = 1 below the threshold
    }
  }
  return T{};
}

Jet pcr_mean_jet(PcrKind kind, const ParamVec& theta, double n) {
  const int p = static_cast<int>(theta.size());
  const Jet k = Jet::variable(theta[0], 0, p);
  const Jet a = p > 1 ? Jet::variable(theta[1], 1, p) : Jet(0.0, p);
  const Jet b = p > 2 ? Jet::variable(theta[2], 2, p) : Jet(0.0, p);
  return n + n * pcr_probability(kind, k, a, b, n);
}

}  // namespace

std::string PcrModel::id() const {
  switch (kind_) {
    case PcrKind::m1: return "pcr-m1";
    case PcrKind::m2: return "pcr-m2";
    case PcrKind::m3: return "pcr-m3";
  }
  return "pcr";
}

std::vector<std::string> PcrModel::param_names() const {
  switch (kind_) {
    case PcrKind::m1: return {"K"};
    case PcrKind::m2: return {"K", "C", "S"};
    case PcrKind::m3: return {"K", "Salpha", "alpha"};
  }
  return {};
}

double PcrModel::replication_prob(const ParamVec& theta, double n_prev) const {
  const double a = theta.size() > 1 ? theta[1] : 0.0;
  const double b = theta.size() > 2 ? theta[2] : 0.0;
  return pcr_probability<double>(kind_, theta[0], a, b, n_prev);
}

void PcrModel::validate(const ParamVec& theta) const {
  require(static_cast<std::size_t>(theta.size()) == dim(), id() + ": wrong parameter count");
  require(theta[0] > 0.0 && std::isfinite(theta[0]), id() + ": K must be positive");
  if (kind_ == PcrKind::m2) {
    require(theta[1] >= 0.0 && std::isfinite(theta[1]),
            "pcr-m2: C must be >= 0 (negative C lets the replication probability exceed 1)");
    require(theta[2] >= 1.0 && std::isfinite(theta[2]), "pcr-m2: S must be >= 1");
  } else if (kind_ == PcrKind::m3) {
    require(theta[2] >= 0.0 && std::isfinite(theta[2]), "pcr-m3: alpha must be >= 0");
    if (theta[2] == 0.0)
      require(theta[1] == 1.0, "pcr-m3: alpha = 0 requires S^alpha = 1");
    else
      require(theta[1] >= 1.0 && std::isfinite(theta[1]), "pcr-m3: S^alpha must be >= 1 (S >= 1)");
  }
}

double PcrModel::mean(History h, const ParamVec& theta) const {
  const double n = previous(h);
  return n + n * replication_prob(theta, n);
}

ParamVec PcrModel::gradient(History h, const ParamVec& theta) const {
  return pcr_mean_jet(kind_, theta, previous(h)).gradient();
}

ParamMat PcrModel::hessian(History h, const ParamVec& theta) const {
  return pcr_mean_jet(kind_, theta, previous(h)).hessian();
}

double PcrModel::variance(History h, const ParamVec& theta) const {
  const double n = previous(h);
  const double p = replication_prob(theta, n);
  return n * p * (1.0 - p);
}

std::optional<MeanSplit> PcrModel::split(History h, const ParamVec& theta) const {
  switch (kind_) {
    case PcrKind::m1:
      return MeanSplit{mean(h, theta), 0.0};
    case PcrKind::m3: {
      const double n = previous(h);
      const double primary = n * (1.0 + theta[0] / (2.0 * (theta[0] + n)));
      return MeanSplit{primary, mean(h, theta) - primary};
    }
    case PcrKind::m2:
      break;
  }
  return std::nullopt;
}

double PcrModel::simulate_step(History h, const ParamVec& truth, Rng& rng) const {
  const std::uint64_t n = previous_count(h);
  return static_cast<double>(binary_offspring_step(n, replication_prob(truth, static_cast<double>(n)), rng));
}

// ---------------------------------------------------------------------------
// ARCH(1)

double ArchModel::mean(History h, const ParamVec& theta) const { return theta[0] + theta[1] * previous(h); }

ParamVec ArchModel::gradient(History h, const ParamVec&) const { return make_params({1.0, previous(h)}); }

ParamMat ArchModel::hessian(History, const ParamVec&) const { return zero_hessian(2); }

double ArchModel::variance(History h, const ParamVec& theta) const { return 2.0 * variance_shape(h, theta); }

double ArchModel::variance_shape(History h, const ParamVec& theta) const {
  const double s2 = mean(h, theta);
  return s2 * s2;
}

std::optional<MeanSplit> ArchModel::split(History h, const ParamVec& theta) const {
  return MeanSplit{mean(h, theta), 0.0};
}

double ArchModel::simulate_step(History h, const ParamVec& truth, Rng& rng) const {
  const double u = zero_innovations_ ? 0.0 : rng.normal();
  return mean(h, truth) * u * u;
}

// ---------------------------------------------------------------------------
// Linear

LinearModel::LinearModel(std::vector<ParamVec> covariates, double sigma)
    : covariates_(std::move(covariates)), sigma_(sigma) {
  require(!covariates_.empty(), "linear model needs covariates");
  const auto p = covariates_.front().size();
  require(p >= 1 && p <= 3, "linear model dimension must be 1..3");
  for (const auto& w : covariates_) require(w.size() == p, "covariate rows must share one dimension");
  require(sigma >= 0.0, "noise scale must be nonnegative");
}

std::vector<std::string> LinearModel::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim(); ++i) names.push_back("theta" + std::to_string(i + 1));
  return names;
}

const ParamVec& LinearModel::covariate(std::size_t k) const {
  require(k >= 1 && k <= covariates_.size(), "no covariate for step " + std::to_string(k));
  return covariates_[k - 1];
}

double LinearModel::mean(History h, const ParamVec& theta) const { return covariate(h.size()).dot(theta); }

ParamVec LinearModel::gradient(History h, const ParamVec&) const { return covariate(h.size()); }

ParamMat LinearModel::hessian(History, const ParamVec&) const {
  return zero_hessian(static_cast<Eigen::Index>(dim()));
}

std::optional<MeanSplit> LinearModel::split(History h, const ParamVec& theta) const {
  return MeanSplit{mean(h, theta), 0.0};
}

double LinearModel::simulate_step(History h, const ParamVec& truth, Rng& rng) const {
  return mean(h, truth) + sigma_ * rng.normal();
}

// ---------------------------------------------------------------------------
// Restricted (plug-in) view

RestrictedModel::RestrictedModel(const ConditionalModel& full, std::vector<bool> free_mask, ParamVec full_params)
    : full_(full), full_params_(std::move(full_params)) {
  require(free_mask.size() == full.dim(), "free mask must cover every model parameter");
  require(static_cast<std::size_t>(full_params_.size()) == full.dim(), "plug-in vector has the wrong length");
  for (std::size_t i = 0; i < free_mask.size(); ++i)
    if (free_mask[i]) free_.push_back(static_cast<Eigen::Index>(i));
  require(!free_.empty(), "at least one coordinate must stay free");
}

std::string RestrictedModel::id() const { return full_.id(); }

std::vector<std::string> RestrictedModel::param_names() const {
  const auto all = full_.param_names();
  std::vector<std::string> out;
  for (auto i : free_) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

ParamVec RestrictedModel::embed(const ParamVec& free_params) const {
  require(static_cast<std::size_t>(free_params.size()) == free_.size(), "restricted parameter has wrong length");
  ParamVec out = full_params_;
  for (std::size_t i = 0; i < free_.size(); ++i) out[free_[i]] = free_params[static_cast<Eigen::Index>(i)];
  return out;
}

ParamVec RestrictedModel::project(const ParamVec& full_params) const {
  ParamVec out(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) out[static_cast<Eigen::Index>(i)] = full_params[free_[i]];
  return out;
}

double RestrictedModel::mean(History h, const ParamVec& theta) const { return full_.mean(h, embed(theta)); }

ParamVec RestrictedModel::gradient(History h, const ParamVec& theta) const {
  return project(full_.gradient(h, embed(theta)));
}

ParamMat RestrictedModel::hessian(History h, const ParamVec& theta) const {
  const ParamMat fullh = full_.hessian(h, embed(theta));
  const auto p = static_cast<Eigen::Index>(free_.size());
  ParamMat out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      out(i, j) = fullh(free_[static_cast<std::size_t>(i)], free_[static_cast<std::size_t>(j)]);
  return out;
}

double RestrictedModel::variance(History h, const ParamVec& theta) const {
  return full_.variance(h, embed(theta));
}

double RestrictedModel::variance_shape(History h, const ParamVec& theta) const {
  return full_.variance_shape(h, embed(theta));
}

std::optional<MeanSplit> RestrictedModel::split(History h, const ParamVec& theta) const {
  return full_.split(h, embed(theta));
}

double RestrictedModel::simulate_step(History h, const ParamVec& truth, Rng& rng) const {
  return full_.simulate_step(h, embed(truth), rng);
}

std::unique_ptr<ConditionalModel> make_model(const std::string& id) {
  if (id == "bgw-binary") return std::make_unique<BgwModel>(OffspringLaw::binary);
  if (id == "bgw-poisson") return std::make_unique<BgwModel>(OffspringLaw::poisson);
  if (id == "pcr-m1") return std::make_unique<PcrModel>(PcrKind::m1);
  if (id == "pcr-m2") return std::make_unique<PcrModel>(PcrKind::m2);
  if (id == "pcr-m3") return std::make_unique<PcrModel>(PcrKind::m3);
  if (id == "arch1") return std::make_unique<ArchModel>();
  fail(ErrorKind::invalid_argument, "unknown model id: " + id);
}

// ---------------------------------------------------------------------------
// Normalization

std::vector<std::size_t> usable_steps(const Trajectory& t, const ConditionalModel& model, std::size_t h,
                                      std::size_t n, std::vector<std::size_t>* excluded) {
  require(n <= t.steps(), "window end exceeds the trajectory length");
  require(h < n, "window must satisfy 0 <= h < n");
  std::vector<std::size_t> out;
  out.reserve(n - h);
  for (std::size_t k = h + 1; k <= n; ++k) {
    const double w = model.weight(history_before(t, k));
    if (w > 0.0 && std::isfinite(w))
      out.push_back(k);
    else if (excluded)
      excluded->push_back(k);
  }
  return out;
}

NormalizedPath normalize(const Trajectory& t, const ConditionalModel& model, const ParamVec& theta,
                         const std::optional<ParamVec>& truth, const ConditionalModel* truth_model) {
  NormalizedPath out;
  out.has_truth = truth.has_value();
  if (t.steps() == 0) return out;
  const ConditionalModel& tm = truth_model ? *truth_model : model;
  for (std::size_t k : usable_steps(t, model, 0, t.steps(), &out.excluded)) {
    const History h = history_before(t, k);
    NormalizedStep s;
    s.k = k;
    s.weight = model.weight(h);
    s.y = t.values[k] / std::sqrt(s.weight);
    s.f = model.mean(h, theta);
    s.sigma2 = model.variance(h, theta);
    s.eta = truth ? s.y - tm.mean(h, *truth) : std::numeric_limits<double>::quiet_NaN();
    out.steps.push_back(s);
  }
  return out;
}

}  // namespace clse
