#pragma once

#include <functional>
#include <vector>

namespace clse {

double normal_cdf(double x);
/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against the erfc-based CDF.
double normal_quantile(double p);

/// Right-continuous empirical CDF of a reference sample.
class EmpiricalCdf {
public:
  explicit EmpiricalCdf(std::vector<double> samples);
  double operator()(double x) const;
  std::size_t size() const { return sorted_.size(); }

private:
  std::vector<double> sorted_;
};

/// One-sample Kolmogorov-Smirnov statistic
/// max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& reference_cdf);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Fraction of intervals containing `truth`.
double coverage(const std::vector<Interval>& intervals, double truth);

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased; 0 for a single sample
};

Moments sample_moments(const std::vector<double>& x);
double median(std::vector<double> x);
/// Pearson correlation; 0 when either side is constant.
double correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace clse
