#include "clse/stats.hpp"

#include "clse/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace clse {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal quantile needs p in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement brings the 1e-9 approximation to full double precision.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  require(!sorted_.empty(), "empirical CDF needs at least one sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& reference_cdf) {
  require(!samples.empty(), "KS statistic needs a nonempty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = reference_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

double coverage(const std::vector<Interval>& intervals, double truth) {
  require(!intervals.empty(), "coverage needs at least one interval");
  std::size_t hit = 0;
  for (const auto& iv : intervals) {
    require(iv.lo <= iv.hi, "malformed interval (lo > hi)");
    if (iv.contains(truth)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

Moments sample_moments(const std::vector<double>& x) {
  Moments m;
  m.count = x.size();
  if (x.empty()) return m;
  CompensatedSum s;
  for (double v : x) s += v;
  m.mean = s.value() / static_cast<double>(x.size());
  if (x.size() > 1) {
    CompensatedSum ss;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.variance = ss.value() / static_cast<double>(x.size() - 1);
  }
  return m;
}

double median(std::vector<double> x) {
  require(!x.empty(), "median of an empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "correlation needs two paired samples of size >= 2");
  const auto mx = sample_moments(x);
  const auto my = sample_moments(y);
  if (mx.variance == 0.0 || my.variance == 0.0) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx.mean) * (y[i] - my.mean);
  return s.value() / static_cast<double>(x.size() - 1) / std::sqrt(mx.variance * my.variance);
}

}  // namespace clse
