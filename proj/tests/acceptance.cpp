// Acceptance run: one PASS/FAIL line per criterion, INFO lines for the
// feasible-scale companions of criteria that cannot be met as stated.
// Exits nonzero only when a criterion outside the known-failure list fails.

#include "clse/asymptotics.hpp"
#include "clse/diagnostics.hpp"
#include "clse/estimators.hpp"
#include "clse/montecarlo.hpp"
#include "clse/simulate.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace clse;

namespace {

// Tolerances and thresholds, pinned.
constexpr double kHarrisTol = 1e-8;
constexpr double kHarrisSeconds = 10.0;
constexpr double kSumTol = 1e-10;
constexpr double kWuTol = 1e-10;
constexpr double kMeanAbs = 0.15;
constexpr double kVarLo = 0.75;
constexpr double kVarHi = 1.30;
constexpr double kKsNormal = 0.10;
constexpr double kM1Seconds = 300.0;
constexpr double kPairVarLo = 0.7;
constexpr double kPairVarHi = 1.4;
constexpr double kPairCorr = 0.2;
constexpr double kPairSeconds = 900.0;
constexpr double kKsMixture = 0.12;
constexpr double kSllnsmMedian = 0.1;
constexpr double kWrongKLo = 1.7;
constexpr double kWrongKHi = 2.3;
constexpr double kWrongC = 1.2;
constexpr double kSigma2Rel = 0.10;
constexpr double kCoverageLo = 0.90;
constexpr double kCoverageHi = 0.985;
constexpr double kDerivTol = 1e-5;
constexpr double kTwoStageMedianRel = 0.02;

// Criteria that cannot pass as stated; the reason is printed with the FAIL.
const std::map<int, std::string> kKnown{
    {6, "with n0 = n the two-stage K-hat equals the joint three-parameter CLSE, whose error is dominated by the "
        "(S^alpha, alpha) estimation error"},
    {7, "Phi_n^2 is singular for 2 alpha < 1, so the literal Phi_n standardization does not exist"},
    {8, "the Harris error scaled by Psi_n converges to W^{-1/2} U, not W^{-1} U"},
    {9, "N_n overflows 64-bit counts near n = 105 at m0 = 1.5"},
    {11, "N_n overflows 64-bit counts near n = 105 at m0 = 1.5"},
};

int unexpected_failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::string line = (pass ? "PASS " : "FAIL ") + std::to_string(id) + " " + title + ": " + detail;
  if (!pass) {
    const auto it = kKnown.find(id);
    if (it != kKnown.end())
      line += " (known: " + it->second + ")";
    else
      ++unexpected_failures;
  }
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
}

void info(int id, const std::string& detail) {
  std::printf("INFO %d %s\n", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Standard-normal limit checks on one coordinate of a summary.
bool normal_ok(const CoordinateSummary& c) {
  return std::abs(c.moments.mean) <= kMeanAbs && c.moments.variance >= kVarLo && c.moments.variance <= kVarHi &&
         c.ks <= kKsNormal;
}

std::string describe(const MonteCarloSummary& s, const CoordinateSummary& c) {
  return fmt("used %zu/%zu, mean %.4f, variance %.4f, KS %.4f", s.used, s.requested, c.moments.mean,
             c.moments.variance, c.ks);
}

std::string failure_text(const MonteCarloSummary& s) {
  std::string out = fmt("%zu of %zu replicates failed", s.failed, s.requested);
  if (!s.failure_reasons.empty()) out += " (" + s.failure_reasons.front() + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

constexpr std::size_t kPcrN = 3000;
constexpr double kK0 = 500.0;

Scenario m1_scenario() {
  Scenario s;
  s.name = "m1-limit";
  s.model_id = "pcr-m1";
  s.truth = {{"K", kK0}};
  s.initial = 20;
  s.n = kPcrN;
  s.box = make_box({1.0}, {1e4});
  s.scaling = ScalingKind::sqrt_n;
  s.scale_variance = kK0;
  s.replicates = 300;
  s.seed = 20240501;
  s.ci_level = 0.95;
  return s;
}

/// Two-stage M3 with S0 = N0 = 20. The stage-1 box excludes the saturated
/// spurious minimum at large S^alpha; see the README.
Scenario m3_scenario(bool two_parameter) {
  Scenario s;
  s.name = two_parameter ? "m3-pair" : "m3-limit";
  s.model_id = "pcr-m3";
  s.truth = {{"K", kK0}, {"Salpha", std::pow(20.0, 0.25)}, {"alpha", 0.25}};
  s.initial = 20;
  s.n = kPcrN;
  s.stage1_n = kPcrN;
  s.estimator = EstimatorKind::two_stage;
  s.two_parameter = two_parameter;
  s.stage1_box = make_box({10.0, 1.0, 0.01}, {5000.0, 10.0, 0.49});
  s.stage1_optimizer.grid_resolution = 17;
  s.box = two_parameter ? make_box({10.0, 1.0}, {5000.0, 10.0}) : make_box({10.0}, {5000.0});
  s.scaling = two_parameter ? ScalingKind::info : ScalingKind::sqrt_n;
  s.scale_variance = two_parameter ? kK0 / 2.0 : 2.0 * kK0;
  s.replicates = 300;
  s.seed = 20240502;
  return s;
}

Scenario bgw_mixture_scenario(double exponent) {
  Scenario s;
  s.name = exponent == 1.0 ? "bgw-mixture" : "bgw-mixture-half";
  s.model_id = "bgw-binary";
  s.truth = {{"m", 1.5}};
  s.initial = 3;
  s.n = 25;
  s.box = make_box({1.001}, {1.999});
  s.scaling = ScalingKind::psi_bgw;
  s.reference = ReferenceLaw::bgw_mixture;
  s.reference_samples = 10000;
  s.mixture_exponent = exponent;
  s.replicates = 500;
  s.seed = 20240503;
  return s;
}

Scenario sigma2_scenario(std::size_t n) {
  Scenario s;
  s.name = "bgw-sigma2-n" + std::to_string(n);
  s.model_id = "bgw-binary";
  s.truth = {{"m", 1.5}};
  s.initial = 3;
  s.n = n;
  s.box = make_box({1.001}, {1.999});
  s.scaling = ScalingKind::psi_bgw;
  s.replicates = 200;
  s.seed = 20240504;
  return s;
}

/// Scenarios rerun by the determinism check.
struct RunRecord {
  Scenario scenario;
  MonteCarloSummary summary;
};
std::vector<RunRecord> runs;

MonteCarloSummary run_recorded(const Scenario& s) {
  auto summary = run_mc(s, 1);
  runs.push_back({s, summary});
  return summary;
}

// ---------------------------------------------------------------------------

std::vector<Trajectory> harris_paths() {
  std::vector<Trajectory> paths;
  Rng rng(20240510);
  for (std::uint64_t i = 0; paths.size() < 100; ++i) {
    const double p0 = clse::testing::uniform(rng, 0.1, 0.9);
    auto t = simulate_bgw(OffspringSpec::binary(p0), 5, 50, mix_seed(20240510, i));
    if (!t.extinct()) paths.push_back(std::move(t));
  }
  return paths;
}

void criteria_harris(const std::vector<Trajectory>& paths) {
  const auto model = make_model("bgw-binary");
  const Box box = make_box({1.001}, {1.999});
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& t : paths) {
    const auto r = clse::clse(t, *model, Window{0, t.steps()}, box);
    worst = std::max(worst, rel_err(r.theta_hat[0], harris_closed_form(t)));
  }
  const double secs = seconds_since(t0);
  report(1, "Harris equivalence", worst <= kHarrisTol && secs <= kHarrisSeconds,
         fmt("max relative error %.3g over %zu paths, %.2f s", worst, paths.size(), secs));

  worst = 0.0;
  std::string error;
  for (const auto& t : paths) {
    try {
      const auto r = qle(t, *model, Window{0, t.steps()}, box);
      worst = std::max(worst, rel_err(r.theta_hat[0], harris_closed_form(t)));
    } catch (const Error& e) {
      error = e.what();
      worst = INFINITY;
    }
  }
  report(2, "QLE-Harris equivalence", worst <= kHarrisTol,
         error.empty() ? fmt("max relative error %.3g", worst) : "QLE failed: " + error);
}

void criterion_sum_bounds() {
  Rng rng(20240511);
  int bound_bad = 0, identity_bad = 0;
  double bound_worst = -INFINITY, identity_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto len = static_cast<std::size_t>(1 + rng.next_u64() % 200);
    std::vector<double> a(len);
    for (auto& x : a) x = clse::testing::log_uniform(rng, 1e-3, 1e3);
    const auto c = reciprocal_square_bound(a);
    const double excess = (c.lhs - c.rhs) / std::abs(c.rhs);
    bound_worst = std::max(bound_worst, excess);
    if (excess > kSumTol) ++bound_bad;
  }
  for (int i = 0; i < 1000; ++i) {
    const auto len = static_cast<std::size_t>(1 + rng.next_u64() % 200);
    std::vector<double> s{0.0}, d(len);
    for (std::size_t k = 0; k < len; ++k) s.push_back(s.back() + clse::testing::log_uniform(rng, 1e-3, 1e3));
    for (auto& x : d) x = rng.normal() * clse::testing::log_uniform(rng, 1e-2, 1e2);
    const auto c = summation_by_parts_identity(s, d);
    const double err = std::abs(c.lhs - c.rhs) / std::max(std::abs(c.rhs), 1e-300);
    identity_worst = std::max(identity_worst, err);
    if (err > kSumTol) ++identity_bad;
  }
  report(3, "reciprocal square bound and summation by parts", bound_bad == 0 && identity_bad == 0,
         fmt("bound violations %d (max relative excess %.3g), identity violations %d (max relative error %.3g)", bound_bad,
             bound_worst, identity_bad, identity_worst));
}

Trajectory catalog_path(const std::string& id, std::uint64_t seed) {
  if (id == "bgw-binary") return simulate_bgw(OffspringSpec::binary(0.5), 3, 40, seed);
  if (id == "bgw-poisson") return simulate_bgw(OffspringSpec::poisson(1.3), 5, 40, seed);
  if (id == "pcr-m1") return simulate_pcr(PcrKind::m1, make_params({500.0}), 20, 300, seed);
  if (id == "pcr-m2") return simulate_pcr(PcrKind::m2, make_params({500.0, 1.0, 20.0}), 20, 300, seed);
  if (id == "pcr-m3") return simulate_pcr(PcrKind::m3, make_params({500.0, std::pow(20.0, 0.25), 0.25}), 20, 300, seed);
  return simulate_arch(1.0, 0.5, 300, seed, 0.0);
}

Box catalog_box(const std::string& id) {
  if (id == "bgw-binary") return make_box({1.001}, {1.999});
  if (id == "bgw-poisson") return make_box({0.5}, {3.0});
  if (id == "pcr-m1") return make_box({10.0}, {5000.0});
  if (id == "pcr-m2") return make_box({10.0, 0.0, 1.0}, {5000.0, 5.0, 200.0});
  if (id == "pcr-m3") return make_box({10.0, 1.0, 0.05}, {5000.0, 10.0, 0.45});
  return make_box({0.1, 0.0}, {5.0, 0.95});
}

void criterion_wu() {
  const auto& ids = clse::testing::catalog_ids();
  Rng rng(20240512);
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& id = ids[i % ids.size()];
    const auto model = make_model(id);
    const auto t = catalog_path(id, mix_seed(20240512, i));
    const auto ctx = DiagnosticContext::from_trajectory(t, *model);
    const Box box = catalog_box(id);
    for (int g = 0; g < 20; ++g) {
      ParamVec theta = box.lo;
      for (Eigen::Index j = 0; j < theta.size(); ++j)
        theta[j] = clse::testing::uniform(rng, box.lo[j], box.hi[j]);
      const auto w = wu_decomposition(ctx, t, theta, Window{0, t.steps()});
      const double scale = std::max({std::abs(w.s_theta), std::abs(w.s_theta0), 1e-300});
      worst = std::max(worst, std::abs(w.lhs() - w.rhs()) / scale);
    }
  }
  report(4, "Wu identity", worst <= kWuTol,
         fmt("max discrepancy %.3g relative to max(S(theta), S(theta0)), 50 paths x 20 points", worst));
}

void criteria_m1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_recorded(m1_scenario());
  const double secs = seconds_since(t0);
  if (s.scenario_failed) {
    report(5, "M1 limit law", false, failure_text(s));
    report(12, "M1 Wald coverage", false, failure_text(s));
    return;
  }
  const auto& c = s.coordinates[0];
  report(5, "M1 limit law", normal_ok(c) && secs <= kM1Seconds, describe(s, c) + fmt(", %.1f s", secs));
  const double cov = c.coverage.value_or(NAN);
  report(12, "M1 Wald coverage", cov >= kCoverageLo && cov <= kCoverageHi, fmt("95%% interval coverage %.4f", cov));
}

double quantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  return x[static_cast<std::size_t>(q * static_cast<double>(x.size() - 1))];
}

double median_rel_k(const MonteCarloSummary& s) {
  std::vector<double> e;
  for (const auto& th : s.estimates) e.push_back(std::abs(th[0] - kK0) / kK0);
  return median(e);
}

void criterion_m3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_recorded(m3_scenario(false));
  const double secs = seconds_since(t0);
  if (s.scenario_failed) {
    report(6, "M3 limit law", false, failure_text(s));
    return;
  }
  const auto& c = s.coordinates[0];
  report(6, "M3 limit law", normal_ok(c), describe(s, c) + fmt(", %.1f s", secs));
  const double med = median_rel_k(s);
  info(6, fmt("two-stage median |K-hat - K0| / K0 = %.4f (target <= %.2f): %s", med, kTwoStageMedianRel,
              med <= kTwoStageMedianRel ? "met" : "not met"));
  std::vector<double> alpha;
  for (const auto& th : s.stage1_estimates) alpha.push_back(th[2]);
  info(6, fmt("stage-1 alpha-hat median %.4f, interquartile range [%.4f, %.4f]", median(alpha), quantile(alpha, 0.25),
              quantile(alpha, 0.75)));

  Scenario oracle = m3_scenario(false);
  oracle.name += "-oracle";
  oracle.oracle_nuisance = true;
  const auto o = run_recorded(oracle);
  info(6, "(S^alpha, alpha) frozen at the truth: " + describe(o, o.coordinates[0]) +
              (normal_ok(o.coordinates[0]) ? ": thresholds met" : ": thresholds not met"));
}

void criterion_m3_pair() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = m3_scenario(true);
  const auto s = run_recorded(sc);
  const double secs = seconds_since(t0);
  if (s.scenario_failed) {
    report(7, "M3 two-parameter law", false, failure_text(s));
    return;
  }
  // The literal standardization: Phi_n at each replicate's stage-1 alpha-hat.
  std::size_t singular = 0;
  for (const auto& th : s.stage1_estimates)
    if (!phi_squared_matrix(sc.n, kK0, th[2]).factor) ++singular;
  // The matrix scaling through the harness, on a short prefix.
  Scenario literal = sc;
  literal.scaling = ScalingKind::phi_matrix;
  literal.replicates = 5;
  const auto lit = run_mc(literal, 1);
  const bool exists = singular == 0 && !lit.scenario_failed;
  std::string detail = fmt("Phi_n^2 singular at %zu of %zu stage-1 alpha-hat; harness run: %s", singular,
                           s.stage1_estimates.size(), lit.scenario_failed ? failure_text(lit).c_str() : "ok");
  bool pass = false;
  if (exists) {
    // unreachable while the matrix form is singular; kept so a corrected
    // normalization is scored the same way
    const auto full = run_mc([&] {
      Scenario x = sc;
      x.scaling = ScalingKind::phi_matrix;
      return x;
    }(), 1);
    pass = !full.scenario_failed && full.cross_correlation && std::abs(*full.cross_correlation) <= kPairCorr;
    for (const auto& c : full.coordinates)
      pass = pass && c.moments.variance >= kPairVarLo && c.moments.variance <= kPairVarHi;
  }
  report(7, "M3 two-parameter law", pass && secs <= kPairSeconds, detail);

  // Information-matrix standardization in units of (K0/2)^{1/2}.
  const double corr = s.cross_correlation.value_or(NAN);
  bool ok = std::abs(corr) <= kPairCorr;
  std::string vars;
  for (const auto& c : s.coordinates) {
    ok = ok && c.moments.variance >= kPairVarLo && c.moments.variance <= kPairVarHi;
    vars += fmt(" %s variance %.4f mean %.4f;", c.name.c_str(), c.moments.variance, c.moments.mean);
  }
  info(7, fmt("information-matrix standardization / (K0/2)^{1/2}, used %zu/%zu:%s cross-correlation %.4f, %.1f s: %s",
              s.used, s.requested, vars.c_str(), corr, secs, ok ? "thresholds met" : "thresholds not met"));

  Scenario oracle = sc;
  oracle.name += "-oracle";
  oracle.oracle_nuisance = true;
  const auto o = run_recorded(oracle);
  const double ocorr = o.cross_correlation.value_or(NAN);
  ok = !o.scenario_failed && std::abs(ocorr) <= kPairCorr;
  vars.clear();
  for (const auto& c : o.coordinates) {
    ok = ok && c.moments.variance >= kPairVarLo && c.moments.variance <= kPairVarHi;
    vars += fmt(" %s variance %.4f mean %.4f;", c.name.c_str(), c.moments.variance, c.moments.mean);
  }
  info(7, fmt("same standardization with alpha frozen at the truth, used %zu/%zu:%s cross-correlation %.4f: %s", o.used,
              o.requested, vars.c_str(), ocorr, ok ? "thresholds met" : "thresholds not met"));
}

void criterion_mixture() {
  const auto s = run_recorded(bgw_mixture_scenario(1.0));
  if (s.scenario_failed) {
    report(8, "BGW mixture limit", false, failure_text(s));
    return;
  }
  report(8, "BGW mixture limit", s.coordinates[0].ks <= kKsMixture,
         fmt("KS %.4f against W^{-1} U, used %zu/%zu", s.coordinates[0].ks, s.used, s.requested));
  const auto half = run_recorded(bgw_mixture_scenario(0.5));
  info(8, fmt("KS %.4f against W^{-1/2} U: %s", half.coordinates[0].ks,
              half.coordinates[0].ks <= kKsMixture ? "threshold met" : "threshold not met"));
}

/// Median SLLNSM sup-ratio at two horizons of the same nonextinct BGW paths.
struct SllnsmMedians {
  double small = NAN, large = NAN;
  std::size_t paths = 0;
  std::string error;
};

SllnsmMedians sllnsm_medians(std::size_t n_small, std::size_t n_large) {
  SllnsmMedians out;
  const auto model = make_model("bgw-binary");
  std::vector<double> small, large;
  for (std::uint64_t r = 0; small.size() < 100 && r < 1000; ++r) {
    Trajectory t;
    try {
      t = simulate_bgw(OffspringSpec::binary(0.5), 3, n_large, mix_seed(20240505, r));
    } catch (const Error& e) {
      out.error = e.what();
      return out;
    }
    if (t.extinct()) continue;
    const auto ctx = DiagnosticContext::from_trajectory(t, *model);
    const auto grid = ThetaGrid::regular(make_box({1.001}, {1.999}), ctx.truth, 0.1);
    const auto cps = sllnsm_ratio(ctx, t, grid, {n_small, n_large});
    if (!cps[0].sup_ratio.defined || !cps[1].sup_ratio.defined) continue;
    small.push_back(cps[0].sup_ratio.value);
    large.push_back(cps[1].sup_ratio.value);
  }
  out.paths = small.size();
  out.small = median(small);
  out.large = median(large);
  return out;
}

SllnsmMedians criterion_sllnsm() {
  const auto lit = sllnsm_medians(200, 2000);
  if (!lit.error.empty()) {
    report(9, "SLLNSM ratio decay", false, "simulation failed: " + lit.error);
  } else {
    report(9, "SLLNSM ratio decay", lit.large < lit.small && lit.large < kSllnsmMedian,
           fmt("median sup-ratio %.4g at n=200, %.4g at n=2000", lit.small, lit.large));
  }
  const auto feas = sllnsm_medians(45, 90);
  const bool ok = feas.paths == 100 && feas.large < feas.small && feas.large < kSllnsmMedian;
  info(9, fmt("n = 45 and 90 on %zu paths: median sup-ratio %.4g then %.4g: %s", feas.paths, feas.small, feas.large,
              ok ? "thresholds met" : "thresholds not met"));
  return feas;
}

struct GrowthRatios {
  std::vector<double> wrong_k, wrong_c;
  bool operator==(const GrowthRatios&) const = default;
};

GrowthRatios growth_ratios() {
  const PcrModel m2(PcrKind::m2);
  GrowthRatios out;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto t = simulate_pcr(PcrKind::m2, make_params({kK0, 1.0, 20.0}), 20, 4000, mix_seed(20240506, r));
    const auto ctx = DiagnosticContext::from_trajectory(t, m2);
    const auto grid =
        ThetaGrid::from_points({make_params({400.0, 1.0, 20.0}), make_params({kK0, 2.0, 20.0})}, ctx.truth, 0.5);
    const auto prof = identifiability_profile(ctx, t, grid, {2000, 4000});
    out.wrong_k.push_back(prof.d_sum[1][0] / prof.d_sum[0][0]);
    out.wrong_c.push_back(prof.d_sum[1][1] / prof.d_sum[0][1]);
  }
  return out;
}

void criterion_identifiability(const GrowthRatios& g) {
  const auto [k_lo, k_hi] = std::minmax_element(g.wrong_k.begin(), g.wrong_k.end());
  const double c_hi = *std::max_element(g.wrong_c.begin(), g.wrong_c.end());
  report(10, "identifiability contrast", *k_lo >= kWrongKLo && *k_hi <= kWrongKHi && c_hi <= kWrongC,
         fmt("20 paths: D_4000/D_2000 wrong K (400) in [%.4f, %.4f], wrong C (2) at most %.4f", *k_lo, *k_hi, c_hi));
}

void criterion_sigma2() {
  const auto lit = run_recorded(sigma2_scenario(200));
  if (lit.scenario_failed) {
    report(11, "variance nuisance", false, failure_text(lit));
  } else {
    const double med = median(lit.sigma2_hats);
    report(11, "variance nuisance", rel_err(med, 0.25) <= kSigma2Rel, fmt("median sigma2-hat %.4f", med));
  }
  const auto feas = run_recorded(sigma2_scenario(90));
  const double med = feas.sigma2_hats.empty() ? NAN : median(feas.sigma2_hats);
  info(11, fmt("n = 90, used %zu/%zu: median sigma2-hat %.4f: %s", feas.used, feas.requested, med,
               rel_err(med, 0.25) <= kSigma2Rel ? "threshold met" : "threshold not met"));
}

void criterion_derivatives() {
  Rng rng(20240513);
  double worst_g = 0.0, worst_h = 0.0;
  for (const auto& id : clse::testing::catalog_ids()) {
    const auto model = make_model(id);
    for (int i = 0; i < 1000; ++i) {
      const auto e = clse::testing::derivative_error(*model, clse::testing::random_point(id, rng));
      worst_g = std::max(worst_g, e.gradient);
      worst_h = std::max(worst_h, e.hessian);
    }
  }
  report(13, "derivative correctness", worst_g <= kDerivTol && worst_h <= kDerivTol,
         fmt("6 models x 1000 points: max relative error f' %.3g, f'' %.3g", worst_g, worst_h));
}

bool prefix_of(const MonteCarloSummary& part, const MonteCarloSummary& whole) {
  if (part.estimates.size() > whole.estimates.size()) return false;
  for (std::size_t i = 0; i < part.estimates.size(); ++i)
    if (part.estimates[i] != whole.estimates[i]) return false;
  for (std::size_t c = 0; c < part.coordinates.size(); ++c)
    for (std::size_t i = 0; i < part.coordinates[c].samples.size(); ++i)
      if (part.coordinates[c].samples[i] != whole.coordinates[c].samples[i]) return false;
  return true;
}

void criterion_determinism(const std::vector<Trajectory>& harris, const SllnsmMedians& sllnsm,
                           const GrowthRatios& growth) {
  bool ok = true;
  std::string detail;
  // Cheap scenarios rerun in full on three workers; the two-stage ones rerun
  // a 30-replicate prefix on one and three workers, which must agree with
  // each other and with the head of the full run.
  for (const auto& r : runs) {
    const bool slow = r.scenario.estimator == EstimatorKind::two_stage && !r.scenario.oracle_nuisance;
    if (!slow) {
      const bool same = same_content(r.summary, run_mc(r.scenario, 3));
      ok = ok && same;
      detail += fmt(" %s %s;", r.scenario.name.c_str(), same ? "identical" : "DIFFERS");
      continue;
    }
    Scenario head = r.scenario;
    head.replicates = 30;
    const auto one = run_mc(head, 1);
    const auto three = run_mc(head, 3);
    const bool same = same_content(one, three) && prefix_of(one, r.summary);
    ok = ok && same;
    detail += fmt(" %s prefix %s;", r.scenario.name.c_str(), same ? "identical" : "DIFFERS");
  }
  const auto again = harris_paths();
  bool paths_same = again.size() == harris.size();
  for (std::size_t i = 0; paths_same && i < again.size(); ++i) paths_same = again[i].counts == harris[i].counts;
  ok = ok && paths_same;
  detail += fmt(" Harris paths %s;", paths_same ? "identical" : "DIFFER");
  const auto s2 = sllnsm_medians(45, 90);
  const bool sllnsm_same = s2.small == sllnsm.small && s2.large == sllnsm.large && s2.paths == sllnsm.paths;
  const bool growth_same = growth_ratios() == growth;
  ok = ok && sllnsm_same && growth_same;
  detail += fmt(" SLLNSM medians %s; growth ratios %s", sllnsm_same ? "identical" : "DIFFER",
                growth_same ? "identical" : "DIFFER");
  report(14, "determinism", ok, detail.substr(1));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto harris = harris_paths();
  criteria_harris(harris);
  criterion_sum_bounds();
  criterion_wu();
  criteria_m1();
  criterion_m3();
  criterion_m3_pair();
  criterion_mixture();
  const auto sllnsm = criterion_sllnsm();
  const auto growth = growth_ratios();
  criterion_identifiability(growth);
  criterion_sigma2();
  criterion_derivatives();
  criterion_determinism(harris, sllnsm, growth);
  std::printf("acceptance finished in %.1f s, %d unexpected failure(s)\n", seconds_since(t0), unexpected_failures);
  return unexpected_failures == 0 ? 0 : 1;
}
