#include "clse/rng.hpp"

#include "clse/core.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace clse {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return splitmix64(base ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  for (;;) {
    const double u = uniform();
    if (u > 0.0) return u;
  }
}

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

namespace {

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(sqrt(2 pi))]
double stirling_tail(double k) {
  static const std::array<double, 10> table = [] {
    std::array<double, 10> t{};
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (int i = 0; i < 10; ++i) {
      const double kk = i;
      t[i] = std::lgamma(kk + 1.0) - ((kk + 0.5) * std::log(kk + 1.0) - (kk + 1.0) + half_log_2pi);
    }
    return t;
  }();
  if (k < 10.0) return table[static_cast<std::size_t>(k)];
  const double kp1 = k + 1.0;
  const double kp1sq = kp1 * kp1;
  return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp1sq) / kp1sq) / kp1;
}

std::uint64_t binomial_inversion(Rng& rng, std::uint64_t n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = (static_cast<double>(n) + 1.0) * s;
  for (;;) {
    double r = std::exp(static_cast<double>(n) * std::log1p(-p));
    double u = rng.uniform();
    std::uint64_t x = 0;
    bool ok = true;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) {
        ok = false;  // rounding exhausted the mass; redraw
        break;
      }
      r *= (a / static_cast<double>(x) - s);
    }
    if (ok) return x;
  }
}

// BTRS, Hormann (1993) "The generation of binomial random variates". Needs n*p >= 10, p <= 1/2.
std::uint64_t binomial_btrs(Rng& rng, std::uint64_t n_int, double p) {
  const double n = static_cast<double>(n_int);
  const double spq = std::sqrt(n * p * (1.0 - p));
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((n + 1.0) * p);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform_open();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > n) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = (m + 0.5) * std::log((m + 1.0) / (r * (n - m + 1.0))) +
                         (n + 1.0) * std::log((n - m + 1.0) / (n - k + 1.0)) +
                         (k + 0.5) * std::log(r * (n - k + 1.0) / (k + 1.0)) + stirling_tail(m) +
                         stirling_tail(n - m) - stirling_tail(k) - stirling_tail(n - k);
    if (v <= bound) return static_cast<std::uint64_t>(k);
  }
}

}  // namespace

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
  require(p >= 0.0 && p <= 1.0, "binomial probability must lie in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  if (static_cast<double>(n) * p < 10.0) return binomial_inversion(*this, n, p);
  return binomial_btrs(*this, n, p);
}

std::uint64_t Rng::poisson(double mean) {
  require(mean >= 0.0 && std::isfinite(mean), "poisson mean must be finite and nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    double prob = std::exp(-mean);
    double cdf = prob;
    const double u = uniform();
    std::uint64_t x = 0;
    while (u > cdf) {
      ++x;
      prob *= mean / static_cast<double>(x);
      const double next = cdf + prob;
      if (next == cdf) break;
      cdf = next;
    }
    return x;
  }
  // PTRS, Hormann (1993) "The transformed rejection method for generating Poisson random variables".
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform_open();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

}  // namespace clse
