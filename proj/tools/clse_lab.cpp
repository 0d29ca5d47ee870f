// clse_lab: simulate, estimate, diagnose and run Monte Carlo scenarios from
// the command line. Flags override values read from --config.

#include "clse/asymptotics.hpp"
#include "clse/diagnostics.hpp"
#include "clse/estimators.hpp"
#include "clse/montecarlo.hpp"
#include "clse/report.hpp"
#include "clse/simulate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace clse;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::invalid_argument, "bad number for " + what + ": '" + s + "'");
}

std::map<std::string, double> parse_assignments(const std::string& s) {
  std::map<std::string, double> out;
  for (const auto& item : split(s, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, "expected name=value, got '" + item + "'");
    out[item.substr(0, eq)] = to_double(item.substr(eq + 1), item.substr(0, eq));
  }
  return out;
}

Json number_list(const std::string& s) {
  Json a = Json::array();
  for (const auto& item : split(s, ',')) a.push_back(to_double(item, "list entry"));
  return a;
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config " + path);
  try {
    Json j = Json::parse(in);
    require(j.is_object(), "config must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::invalid_argument, "config " + path + " is not valid JSON: " + e.what());
  }
}

void check_input(const std::string& path) {
  if (path.empty()) fail(ErrorKind::invalid_argument, "an input file is required");
  if (!fs::is_regular_file(path)) fail(ErrorKind::io, "input file not found: " + path);
}

void check_output(const std::string& path) {
  if (path.empty()) return;
  const auto parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) fail(ErrorKind::io, "output directory does not exist: " + parent.string());
}

void emit(const std::string& path, const std::string& contents) {
  if (path.empty())
    std::cout << contents;
  else
    write_file_atomic(path, contents);
}

/// Overrides cfg[key] with the flag's value when it was given on the command line.
template <class T>
void override_with(Json& cfg, const CLI::Option* opt, const char* key, const T& value) {
  if (opt->count() > 0) cfg[key] = value;
}

Box default_box(const std::string& model) {
  if (model == "bgw-binary") return make_box({1.001}, {1.999});
  if (model == "bgw-poisson") return make_box({0.01}, {10.0});
  if (model == "pcr-m1") return make_box({1.0}, {1e4});
  if (model == "pcr-m2") return make_box({1.0, 0.0, 1.0}, {1e4, 10.0, 1e3});
  if (model == "pcr-m3") return make_box({1.0, 1.0, 0.01}, {1e4, 100.0, 0.49});
  if (model == "arch1") return make_box({1e-3, 0.0}, {10.0, 0.999});
  fail(ErrorKind::invalid_argument, "no default box for model " + model);
}

/// Model view with the `freeze` coordinates held at their given values.
struct ModelView {
  std::unique_ptr<ConditionalModel> full;
  std::optional<RestrictedModel> restricted;
  std::vector<bool> free;

  const ConditionalModel& model() const {
    if (restricted) return *restricted;
    return *full;
  }

  ModelView(const std::string& id, const Json& freeze) : full(make_model(id)) {
    const auto names = full->param_names();
    free.assign(names.size(), true);
    if (freeze.is_null() || freeze.empty()) return;
    ParamVec frozen = default_box(id).center();
    for (const auto& [name, value] : freeze.items()) {
      const auto it = std::find(names.begin(), names.end(), name);
      require(it != names.end(), "cannot freeze unknown parameter '" + name + "'");
      const auto i = static_cast<std::size_t>(it - names.begin());
      free[i] = false;
      frozen[static_cast<Eigen::Index>(i)] = value.get<double>();
    }
    restricted.emplace(*full, free, frozen);
  }

  ParamVec project(const ParamVec& full_vec) const { return restricted ? restricted->project(full_vec) : full_vec; }
  Box project(const Box& b) const { return restricted ? Box{project(b.lo), project(b.hi)} : b; }
};

Box box_from_config(const Json& cfg, const ModelView& view, const std::string& model_id) {
  if (cfg.contains("box_lo") || cfg.contains("box_hi")) {
    require(cfg.contains("box_lo") && cfg.contains("box_hi"), "give both box_lo and box_hi");
    Box b{params_from_json(cfg.at("box_lo")), params_from_json(cfg.at("box_hi"))};
    b.validate();
    return b;
  }
  return view.project(default_box(model_id));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, model, offspring, params, output;
  std::uint64_t n0 = 1, seed = 0;
  std::size_t steps = 0;
  double xi0 = 0.0;
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  Json cfg = load_config(a.config);
  override_with(cfg, cmd.get_option("--model"), "model", a.model);
  override_with(cfg, cmd.get_option("--offspring"), "offspring", a.offspring);
  override_with(cfg, cmd.get_option("--params"), "params", a.params);
  override_with(cfg, cmd.get_option("--n0"), "n0", a.n0);
  override_with(cfg, cmd.get_option("--steps"), "steps", a.steps);
  override_with(cfg, cmd.get_option("--seed"), "seed", a.seed);
  override_with(cfg, cmd.get_option("--xi0"), "xi0", a.xi0);
  override_with(cfg, cmd.get_option("--output"), "output", a.output);
  require(cfg.contains("model"), "simulate needs --model");
  require(cfg.contains("steps"), "simulate needs --steps");
  const std::string output = cfg.value("output", std::string());
  check_output(output);

  std::string model = cfg.at("model").get<std::string>();
  const auto steps = cfg.at("steps").get<std::size_t>();
  const auto seed = cfg.value("seed", std::uint64_t{0});
  const auto n0 = cfg.value("n0", std::uint64_t{1});
  Trajectory t;
  if (model == "bgw" || model.rfind("bgw-", 0) == 0) {
    const auto spec = split(cfg.value("offspring", std::string("binary:0.5")), ':');
    require(spec.size() == 2, "offspring must be binary:<p0> or poisson:<m0>");
    const double v = to_double(spec[1], "offspring parameter");
    OffspringSpec off;
    if (spec[0] == "binary")
      off = OffspringSpec::binary(v);
    else if (spec[0] == "poisson")
      off = OffspringSpec::poisson(v);
    else
      fail(ErrorKind::invalid_argument, "unknown offspring law '" + spec[0] + "'");
    t = simulate_bgw(off, n0, steps, seed);
  } else {
    const auto m = make_model(model);
    const auto given = parse_assignments(cfg.value("params", std::string()));
    const auto names = m->param_names();
    ParamVec truth(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto it = given.find(names[i]);
      require(it != given.end(), "missing parameter '" + names[i] + "' in --params");
      truth[static_cast<Eigen::Index>(i)] = it->second;
    }
    if (model == "arch1")
      t = simulate_arch(truth[0], truth[1], steps, seed, cfg.value("xi0", 0.0));
    else
      t = simulate_pcr(model == "pcr-m1" ? PcrKind::m1 : model == "pcr-m2" ? PcrKind::m2 : PcrKind::m3, truth, n0,
                       steps, seed);
  }
  std::ostringstream os;
  os << "# config: " << cfg.dump() << "\n";
  write_trajectory_csv(os, t);
  emit(output, os.str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string config, input, model, estimator, window, box_lo, box_hi, freeze, output, weighting, variance_form;
  std::size_t grid = 33, starts = 5;
  double ci_level = 0.95;
};

int run_estimate(const EstimateArgs& a, const CLI::App& cmd) {
  Json cfg = load_config(a.config);
  override_with(cfg, cmd.get_option("--input"), "input", a.input);
  override_with(cfg, cmd.get_option("--model"), "model", a.model);
  override_with(cfg, cmd.get_option("--estimator"), "estimator", a.estimator);
  override_with(cfg, cmd.get_option("--window"), "window", a.window);
  if (cmd.get_option("--box-lo")->count()) cfg["box_lo"] = number_list(a.box_lo);
  if (cmd.get_option("--box-hi")->count()) cfg["box_hi"] = number_list(a.box_hi);
  if (cmd.get_option("--freeze")->count()) {
    Json f = Json::object();
    for (const auto& [k, v] : parse_assignments(a.freeze)) f[k] = v;
    cfg["freeze"] = f;
  }
  if (cmd.get_option("--grid")->count()) cfg["optimizer"]["grid_resolution"] = a.grid;
  if (cmd.get_option("--starts")->count()) cfg["optimizer"]["starts"] = a.starts;
  override_with(cfg, cmd.get_option("--weighting"), "weighting", a.weighting);
  override_with(cfg, cmd.get_option("--variance-form"), "variance_form", a.variance_form);
  override_with(cfg, cmd.get_option("--ci-level"), "ci_level", a.ci_level);
  override_with(cfg, cmd.get_option("--output"), "output", a.output);

  const std::string input = cfg.value("input", std::string());
  const std::string output = cfg.value("output", std::string());
  check_input(input);
  check_output(output);

  const Trajectory t = load_trajectory(input);
  const std::string model_id = cfg.value("model", t.model_id);
  require(!model_id.empty(), "the trajectory names no model; pass --model");
  const ModelView view(model_id, cfg.value("freeze", Json::object()));
  const Box box = box_from_config(cfg, view, model_id);
  Window window{0, t.steps()};
  if (cfg.contains("window")) {
    const auto parts = split(cfg.at("window").get<std::string>(), ':');
    require(parts.size() == 2, "window must be h:n");
    window = {static_cast<std::size_t>(to_double(parts[0], "h")), static_cast<std::size_t>(to_double(parts[1], "n"))};
  }
  const OptimizerConfig oc = optimizer_from_json(cfg.value("optimizer", Json(nullptr)));
  const std::string estimator = cfg.value("estimator", std::string("clse"));

  EstimationResult res;
  if (estimator == "clse") {
    res = clse::clse(t, view.model(), window, box, oc);
  } else if (estimator == "qle") {
    QleConfig qc;
    qc.optimizer = oc;
    const auto w = cfg.value("weighting", std::string("model_variance"));
    require(w == "model_variance" || w == "clse_weight", "weighting must be model_variance or clse_weight");
    qc.weighting = w == "clse_weight" ? QleWeighting::clse_weight : QleWeighting::model_variance;
    res = qle(t, view.model(), window, box, qc);
  } else {
    fail(ErrorKind::invalid_argument, "estimator must be clse or qle");
  }

  const auto vf = cfg.value("variance_form", std::string("constant"));
  require(vf == "constant" || vf == "model_shape", "variance_form must be constant or model_shape");
  const double sigma2 = estimate_variance_nuisance(t, view.model(), res.theta_hat, window,
                                                   vf == "constant" ? VarianceForm::constant : VarianceForm::model_shape);
  Json out{{"config", cfg}, {"result", to_json(res)}, {"variance_nuisance", sigma2}};
  const auto info = info_matrix(view.model(), t, res.theta_hat, window);
  out["info_matrix"] = to_json(info);
  if (!info.singular()) out["confidence_intervals"] = to_json(wald_ci(res.theta_hat, info, sigma2, cfg.value("ci_level", 0.95)));
  emit(output, dump(out));
  return res.converged ? kOk : kNumerical;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string config, input, model, box_lo, box_hi, freeze, checkpoints, unc_near, output, plot;
  double delta = 0.1;
  std::size_t resolution = 33;
};

int run_diagnose(const DiagnoseArgs& a, const CLI::App& cmd) {
  Json cfg = load_config(a.config);
  override_with(cfg, cmd.get_option("--input"), "input", a.input);
  override_with(cfg, cmd.get_option("--model"), "model", a.model);
  if (cmd.get_option("--box-lo")->count()) cfg["box_lo"] = number_list(a.box_lo);
  if (cmd.get_option("--box-hi")->count()) cfg["box_hi"] = number_list(a.box_hi);
  if (cmd.get_option("--freeze")->count()) {
    Json f = Json::object();
    for (const auto& [k, v] : parse_assignments(a.freeze)) f[k] = v;
    cfg["freeze"] = f;
  }
  if (cmd.get_option("--checkpoints")->count()) cfg["checkpoints"] = number_list(a.checkpoints);
  if (cmd.get_option("--unc-near")->count()) cfg["unc_near"] = number_list(a.unc_near);
  override_with(cfg, cmd.get_option("--delta"), "delta", a.delta);
  override_with(cfg, cmd.get_option("--resolution"), "resolution", a.resolution);
  override_with(cfg, cmd.get_option("--output"), "output", a.output);
  override_with(cfg, cmd.get_option("--plot"), "plot", a.plot);

  const std::string input = cfg.value("input", std::string());
  const std::string output = cfg.value("output", std::string());
  const std::string plot = cfg.value("plot", std::string());
  check_input(input);
  check_output(output);
  check_output(plot);

  const Trajectory t = load_trajectory(input);
  const std::string model_id = cfg.value("model", t.model_id);
  const ModelView view(model_id, cfg.value("freeze", Json::object()));
  const auto ctx = DiagnosticContext::from_trajectory(t, view.model());
  const Box box = box_from_config(cfg, view, model_id);
  const auto grid = ThetaGrid::regular(box, view.project(ctx.truth), cfg.value("delta", 0.1),
                                       cfg.value("resolution", std::size_t{33}));

  std::vector<std::size_t> cps;
  if (cfg.contains("checkpoints")) {
    for (const auto& c : cfg.at("checkpoints")) cps.push_back(static_cast<std::size_t>(c.get<double>()));
  } else {
    for (std::size_t i = 1; i <= 10; ++i) cps.push_back(std::max<std::size_t>(1, t.steps() * i / 10));
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  }
  std::optional<ParamVec> unc_near;
  if (cfg.contains("unc_near")) unc_near = params_from_json(cfg.at("unc_near"));

  const auto report = diagnose(ctx, t, grid, cps, unc_near);
  emit(output, dump(Json{{"config", cfg}, {"report", to_json(report)}}));

  if (!plot.empty()) {
    std::vector<PlotPoint> pts;
    for (std::size_t c = 0; c < cps.size(); ++c) {
      const double n = static_cast<double>(cps[c]);
      pts.push_back({"inf_d_outside", n, report.profile.inf_outside[c]});
      if (report.sllnsm[c].sup_ratio.defined) pts.push_back({"sllnsm_ratio", n, report.sllnsm[c].sup_ratio.value});
      if (report.rat[c].sup_ratio.defined) pts.push_back({"rat_ratio", n, report.rat[c].sup_ratio.value});
      pts.push_back({"var_sum", n, report.var_sums[c]});
    }
    write_file_atomic(plot, plot_csv(pts));
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct McArgs {
  std::string config, output, samples, plot;
  std::size_t workers = 0, replicates = 0;
  std::uint64_t seed = 0;
  bool dry_run = false;
  bool timing = false;
};

std::vector<PlotPoint> histogram(const MonteCarloSummary& s, std::size_t bins) {
  std::vector<PlotPoint> pts;
  for (const auto& c : s.coordinates) {
    if (c.samples.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(c.samples.begin(), c.samples.end());
    const double lo = *lo_it;
    const double width = (*hi_it - lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double x : c.samples) {
      const auto b = width > 0.0 ? std::min(bins - 1, static_cast<std::size_t>((x - lo) / width)) : 0;
      ++counts[b];
    }
    const double norm = static_cast<double>(c.samples.size()) * (width > 0.0 ? width : 1.0);
    for (std::size_t b = 0; b < bins; ++b)
      pts.push_back({"hist_" + c.name, lo + (static_cast<double>(b) + 0.5) * width, static_cast<double>(counts[b]) / norm});
  }
  return pts;
}

int run_mc_command(const McArgs& a, const CLI::App& cmd) {
  require(!a.config.empty(), "mc needs --config <scenario.json>");
  Json cfg = load_config(a.config);
  override_with(cfg, cmd.get_option("--seed"), "seed", a.seed);
  override_with(cfg, cmd.get_option("--replicates"), "replicates", a.replicates);
  check_output(a.output);
  check_output(a.samples);
  check_output(a.plot);
  const Scenario s = scenario_from_json(cfg);
  if (a.dry_run) {
    std::cout << describe_plan(s, a.workers);
    return kOk;
  }
  const auto summary = run_mc(s, a.workers);
  emit(a.output, dump(Json{{"config", to_json(s)}, {"summary", to_json(summary, a.timing)}}));
  if (!a.samples.empty()) write_file_atomic(a.samples, samples_csv(summary));
  if (!a.plot.empty()) write_file_atomic(a.plot, plot_csv(histogram(summary, 30)));
  if (a.timing) std::cerr << "wall time " << summary.wall_seconds << " s\n";
  return summary.scenario_failed ? kNumerical : kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_argument: return kUsage;
    case ErrorKind::io: return kIo;
    case ErrorKind::overflow:
    case ErrorKind::numerical: return kNumerical;
  }
  return kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional least-squares laboratory"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a trajectory");
  s->add_option("--config", sim.config, "JSON config file");
  s->add_option("--model", sim.model, "bgw, bgw-binary, bgw-poisson, pcr-m1, pcr-m2, pcr-m3 or arch1");
  s->add_option("--offspring", sim.offspring, "binary:<p0> or poisson:<m0>");
  s->add_option("--params", sim.params, "name=value list, e.g. K=500,Salpha=2,alpha=0.25");
  s->add_option("--n0", sim.n0, "initial population");
  s->add_option("--steps", sim.steps, "number of steps n");
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_option("--xi0", sim.xi0, "ARCH initial value");
  s->add_option("-o,--output", sim.output, "trajectory CSV (stdout when omitted)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate parameters from a trajectory");
  e->add_option("--config", est.config, "JSON config file");
  e->add_option("-i,--input", est.input, "trajectory CSV");
  e->add_option("--model", est.model, "model id (default: the file's model)");
  e->add_option("--estimator", est.estimator, "clse or qle");
  e->add_option("--window", est.window, "h:n");
  e->add_option("--box-lo", est.box_lo, "comma-separated lower bounds");
  e->add_option("--box-hi", est.box_hi, "comma-separated upper bounds");
  e->add_option("--freeze", est.freeze, "name=value list of plug-in nuisance values");
  e->add_option("--grid", est.grid, "grid points per coordinate");
  e->add_option("--starts", est.starts, "local refinements");
  e->add_option("--weighting", est.weighting, "QLE weights: model_variance or clse_weight");
  e->add_option("--variance-form", est.variance_form, "constant or model_shape");
  e->add_option("--ci-level", est.ci_level, "Wald interval level");
  e->add_option("-o,--output", est.output, "result JSON (stdout when omitted)");

  DiagnoseArgs dia;
  auto* d = app.add_subcommand("diagnose", "Consistency diagnostics on a simulated trajectory");
  d->add_option("--config", dia.config, "JSON config file");
  d->add_option("-i,--input", dia.input, "trajectory CSV with a truth record");
  d->add_option("--model", dia.model, "model id (default: the file's model)");
  d->add_option("--box-lo", dia.box_lo, "grid lower bounds");
  d->add_option("--box-hi", dia.box_hi, "grid upper bounds");
  d->add_option("--freeze", dia.freeze, "name=value list of plug-in nuisance values");
  d->add_option("--delta", dia.delta, "exclusion radius");
  d->add_option("--resolution", dia.resolution, "grid points per coordinate");
  d->add_option("--checkpoints", dia.checkpoints, "comma-separated increasing n values");
  d->add_option("--unc-near", dia.unc_near, "point for the derivative continuity ratio");
  d->add_option("-o,--output", dia.output, "report JSON (stdout when omitted)");
  d->add_option("--plot", dia.plot, "plot data CSV (series,x,y)");

  McArgs mc;
  auto* m = app.add_subcommand("mc", "Run a Monte Carlo scenario");
  m->add_option("--config", mc.config, "scenario JSON");
  m->add_option("--workers", mc.workers, "worker threads (capped by CLSE_LAB_WORKERS)");
  m->add_option("--seed", mc.seed, "override the base seed");
  m->add_option("--replicates", mc.replicates, "override the replicate count");
  m->add_option("-o,--output", mc.output, "summary JSON (stdout when omitted)");
  m->add_option("--samples", mc.samples, "CSV of standardized errors");
  m->add_option("--plot", mc.plot, "histogram plot data CSV (series,x,y)");
  m->add_flag("--dry-run", mc.dry_run, "validate and print the replicate plan");
  m->add_flag("--timing", mc.timing, "include wall time in the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return run_simulate(sim, *s);
    if (*e) return run_estimate(est, *e);
    if (*d) return run_diagnose(dia, *d);
    if (*m) return run_mc_command(mc, *m);
  } catch (const Error& err) {
    std::cerr << "clse_lab: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "clse_lab: bad config value: " << err.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
