#include "clse/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace clse {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json ratio_json(const RatioValue& r) { return r.defined ? finite_or_null(r.value) : Json(nullptr); }

template <class Enum>
Enum enum_from(const Json& j, const char* key, std::initializer_list<std::pair<const char*, Enum>> table, Enum dflt) {
  if (!j.contains(key)) return dflt;
  const auto s = j.at(key).get<std::string>();
  for (const auto& [name, value] : table)
    if (s == name) return value;
  fail(ErrorKind::invalid_argument, std::string("unknown value '") + s + "' for '" + key + "'");
}

template <class Enum>
std::string enum_name(Enum v, std::initializer_list<std::pair<const char*, Enum>> table) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  return "unknown";
}

const std::initializer_list<std::pair<const char*, EstimatorKind>> kEstimators = {
    {"clse", EstimatorKind::clse}, {"qle", EstimatorKind::qle}, {"two_stage", EstimatorKind::two_stage}};
const std::initializer_list<std::pair<const char*, ScalingKind>> kScalings = {{"sqrt_n", ScalingKind::sqrt_n},
                                                                              {"psi_bgw", ScalingKind::psi_bgw},
                                                                              {"phi_scalar", ScalingKind::phi_scalar},
                                                                              {"phi_matrix", ScalingKind::phi_matrix},
                                                                              {"info", ScalingKind::info}};
const std::initializer_list<std::pair<const char*, ReferenceLaw>> kReferences = {
    {"standard_normal", ReferenceLaw::standard_normal}, {"bgw_mixture", ReferenceLaw::bgw_mixture}};
const std::initializer_list<std::pair<const char*, VarianceForm>> kVarianceForms = {
    {"constant", VarianceForm::constant}, {"model_shape", VarianceForm::model_shape}};

Json box_json(const Box& b) { return Json{{"lo", to_json(b.lo)}, {"hi", to_json(b.hi)}}; }

}  // namespace

Json to_json(const ParamVec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

Json to_json(const ParamMat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite_or_null(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json to_json(const OptimizerConfig& c) {
  return Json{{"grid_resolution", c.grid_resolution}, {"ftol", c.ftol},     {"xtol", c.xtol},
              {"max_iterations", c.max_iterations},   {"starts", c.starts}, {"newton_polish", c.newton_polish}};
}

Json to_json(const EstimationResult& r) {
  Json nuisance = Json::object();
  for (std::size_t i = 0; i < r.nuisance.names.size(); ++i) nuisance[r.nuisance.names[i]] = r.nuisance.values[i];
  return Json{{"model", r.model_id},
              {"param_names", r.param_names},
              {"theta_hat", to_json(r.theta_hat)},
              {"objective", finite_or_null(r.objective)},
              {"window", {{"h", r.window.h}, {"n", r.window.n}}},
              {"nuisance", nuisance},
              {"converged", r.converged},
              {"starts_evaluated", r.starts_evaluated},
              {"best_start_index", r.best_start_index},
              {"usable_steps", r.usable_steps},
              {"excluded_steps", r.excluded_steps}};
}

Json to_json(const InfoMatrix& info) {
  Json null_space = Json::array();
  for (const auto& v : info.null_space) null_space.push_back(to_json(v));
  return Json{{"matrix", to_json(info.matrix)},
              {"inverse", info.inverse ? to_json(*info.inverse) : Json(nullptr)},
              {"condition", finite_or_null(info.condition)},
              {"singular", info.singular()},
              {"null_space", null_space}};
}

Json to_json(const std::vector<Interval>& intervals) {
  Json a = Json::array();
  for (const auto& iv : intervals) a.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
  return a;
}

Json to_json(const DiagnosticsReport& r) {
  Json cps = Json::array();
  for (std::size_t c = 0; c < r.profile.checkpoints.size(); ++c) {
    Json e;
    e["n"] = r.profile.checkpoints[c];
    e["inf_d_outside"] = finite_or_null(r.profile.inf_outside[c]);
    e["var_sum_sup"] = finite_or_null(r.var_sums[c]);
    e["sllnsm_sup_ratio"] = ratio_json(r.sllnsm[c].sup_ratio);
    e["sllnsm_undefined_points"] = r.sllnsm[c].undefined_points;
    e["rat_h"] = r.profile.checkpoints[c] / 2;
    e["rat_sup_ratio"] = ratio_json(r.rat[c].sup_ratio);
    e["rat_undefined_points"] = r.rat[c].undefined_points;
    e["an_ratio"] = ratio_json(r.an[c]);
    cps.push_back(e);
  }
  return Json{{"model", r.model_id},
              {"grid",
               {{"theta0", to_json(r.grid.theta0)},
                {"delta", r.grid.delta},
                {"resolution", r.grid.resolution},
                {"points", r.grid.points.size()},
                {"outside_points", r.grid.outside_count()},
                {"note", "sup/inf over the delta-complement are taken over this finite grid"}}},
              {"checkpoints", cps},
              {"unc_ratio", r.unc ? finite_or_null(*r.unc) : Json(nullptr)}};
}

Json to_json(const Scenario& s) {
  Json truth = Json::object();
  for (const auto& [k, v] : s.truth) truth[k] = v;
  Json j{{"name", s.name},
         {"model", s.model_id},
         {"truth", truth},
         {"initial", s.initial},
         {"n", s.n},
         {"h", s.h},
         {"stage1_n", s.stage1_n},
         {"estimator", enum_name(s.estimator, kEstimators)},
         {"two_parameter", s.two_parameter},
         {"oracle_nuisance", s.oracle_nuisance},
         {"box", box_json(s.box)},
         {"optimizer", to_json(s.optimizer)},
         {"scaling", enum_name(s.scaling, kScalings)},
         {"scale_variance", s.scale_variance},
         {"reference", enum_name(s.reference, kReferences)},
         {"reference_samples", s.reference_samples},
         {"reference_horizon", s.reference_horizon},
         {"mixture_exponent", s.mixture_exponent},
         {"replicates", s.replicates},
         {"seed", s.seed},
         {"condition_on_nonextinction", s.condition_on_nonextinction},
         {"ci_level", s.ci_level ? Json(*s.ci_level) : Json(nullptr)},
         {"variance_form", enum_name(s.variance_form, kVarianceForms)}};
  if (s.estimator == EstimatorKind::two_stage) {
    j["stage1_box"] = box_json(s.stage1_box);
    j["stage1_optimizer"] = to_json(s.stage1_optimizer);
  }
  return j;
}

Json to_json(const MonteCarloSummary& s, bool include_timing) {
  Json coords = Json::array();
  for (const auto& c : s.coordinates) {
    coords.push_back({{"name", c.name},
                      {"count", c.moments.count},
                      {"mean", finite_or_null(c.moments.mean)},
                      {"variance", finite_or_null(c.moments.variance)},
                      {"ks", c.ks},
                      {"coverage", c.coverage ? Json(*c.coverage) : Json(nullptr)}});
  }
  Json j{{"scenario", s.scenario},
         {"requested", s.requested},
         {"used", s.used},
         {"extinct", s.extinct},
         {"failed", s.failed},
         {"scenario_failed", s.scenario_failed},
         {"failure_reasons", s.failure_reasons},
         {"coordinates", coords},
         {"cross_correlation", s.cross_correlation ? finite_or_null(*s.cross_correlation) : Json(nullptr)}};
  if (!s.sigma2_hats.empty()) j["median_sigma2_hat"] = median(s.sigma2_hats);
  if (include_timing) j["wall_seconds"] = s.wall_seconds;
  return j;
}

ParamVec params_from_json(const Json& j) {
  require(j.is_array() && !j.empty() && j.size() <= kMaxParams, "parameter vector must be an array of 1..3 numbers");
  ParamVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Box box_from_json(const Json& j) {
  require(j.is_object() && j.contains("lo") && j.contains("hi"), "box needs 'lo' and 'hi'");
  Box b{params_from_json(j.at("lo")), params_from_json(j.at("hi"))};
  b.validate();
  return b;
}

OptimizerConfig optimizer_from_json(const Json& j, OptimizerConfig c) {
  if (j.is_null()) return c;
  if (j.contains("grid_resolution")) c.grid_resolution = j.at("grid_resolution").get<std::size_t>();
  if (j.contains("ftol")) c.ftol = j.at("ftol").get<double>();
  if (j.contains("xtol")) c.xtol = j.at("xtol").get<double>();
  if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<std::size_t>();
  if (j.contains("starts")) c.starts = j.at("starts").get<std::size_t>();
  if (j.contains("newton_polish")) c.newton_polish = j.at("newton_polish").get<bool>();
  c.validate();
  return c;
}

Scenario scenario_from_json(const Json& j) {
  try {
    require(j.is_object(), "scenario must be a JSON object");
    Scenario s;
    s.name = j.value("name", s.name);
    s.model_id = j.at("model").get<std::string>();
    for (const auto& [k, v] : j.at("truth").items()) s.truth[k] = v.get<double>();
    s.initial = j.value("initial", s.initial);
    s.n = j.at("n").get<std::size_t>();
    s.h = j.value("h", s.h);
    s.stage1_n = j.value("stage1_n", s.stage1_n);
    s.estimator = enum_from(j, "estimator", kEstimators, s.estimator);
    s.two_parameter = j.value("two_parameter", s.two_parameter);
    s.oracle_nuisance = j.value("oracle_nuisance", s.oracle_nuisance);
    s.box = box_from_json(j.at("box"));
    if (j.contains("stage1_box")) s.stage1_box = box_from_json(j.at("stage1_box"));
    if (j.contains("optimizer")) s.optimizer = optimizer_from_json(j.at("optimizer"));
    s.stage1_optimizer = j.contains("stage1_optimizer") ? optimizer_from_json(j.at("stage1_optimizer")) : s.optimizer;
    s.scaling = enum_from(j, "scaling", kScalings, s.scaling);
    s.scale_variance = j.value("scale_variance", s.scale_variance);
    s.reference = enum_from(j, "reference", kReferences, s.reference);
    s.reference_samples = j.value("reference_samples", s.reference_samples);
    s.reference_horizon = j.value("reference_horizon", s.reference_horizon);
    s.mixture_exponent = j.value("mixture_exponent", s.mixture_exponent);
    s.replicates = j.at("replicates").get<std::size_t>();
    s.seed = j.value("seed", s.seed);
    s.condition_on_nonextinction = j.value("condition_on_nonextinction", s.condition_on_nonextinction);
    if (j.contains("ci_level") && !j.at("ci_level").is_null()) s.ci_level = j.at("ci_level").get<double>();
    s.variance_form = enum_from(j, "variance_form", kVarianceForms, s.variance_form);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed scenario: ") + e.what());
  }
}

std::string samples_csv(const MonteCarloSummary& s) {
  std::ostringstream os;
  os << "coordinate,replicate,value\n";
  for (const auto& c : s.coordinates)
    for (std::size_t i = 0; i < c.samples.size(); ++i) os << c.name << ',' << i << ',' << fmt(c.samples[i]) << '\n';
  return os.str();
}

std::string plot_csv(const std::vector<PlotPoint>& points) {
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& p : points) os << p.series << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';
  return os.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace clse
