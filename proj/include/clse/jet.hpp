#pragma once

#include "clse/core.hpp"

#include <array>
#include <cmath>

namespace clse {

/// Second-order forward-mode jet over at most three variables: value,
/// gradient and Hessian propagated through arithmetic. Used to obtain
/// exact first and second parameter derivatives of catalog means.
struct Jet {
  double v = 0.0;
  int n = 0;
  std::array<double, 3> g{};
  std::array<double, 9> h{};

  Jet() = default;
  Jet(double value, int dims) : v(value), n(dims) {}

  static Jet variable(double value, int index, int dims) {
    Jet j(value, dims);
    j.g[static_cast<std::size_t>(index)] = 1.0;
    return j;
  }

  double hess(int i, int j) const { return h[static_cast<std::size_t>(3 * i + j)]; }
  double& hess(int i, int j) { return h[static_cast<std::size_t>(3 * i + j)]; }

  ParamVec gradient() const {
    ParamVec out(n);
    for (int i = 0; i < n; ++i) out[i] = g[static_cast<std::size_t>(i)];
    return out;
  }
  ParamMat hessian() const {
    ParamMat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = hess(i, j);
    return out;
  }
};

namespace jet_detail {
// Chain rule for a scalar function with derivatives d1, d2 at a.v.
inline Jet apply(const Jet& a, double value, double d1, double d2) {
  Jet r(value, a.n);
  for (int i = 0; i < a.n; ++i) {
    r.g[static_cast<std::size_t>(i)] = d1 * a.g[static_cast<std::size_t>(i)];
    for (int j = 0; j < a.n; ++j)
      r.hess(i, j) = d1 * a.hess(i, j) + d2 * a.g[static_cast<std::size_t>(i)] * a.g[static_cast<std::size_t>(j)];
  }
  return r;
}
inline int dims(const Jet& a, const Jet& b) { return a.n > b.n ? a.n : b.n; }
}  // namespace jet_detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.v + b.v, jet_detail::dims(a, b));
  for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] + b.g[i];
  for (std::size_t i = 0; i < 9; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r(a.v - b.v, jet_detail::dims(a, b));
  for (std::size_t i = 0; i < 3; ++i) r.g[i] = a.g[i] - b.g[i];
  for (std::size_t i = 0; i < 9; ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}
inline Jet operator-(const Jet& a) { return Jet(0.0, a.n) - a; }
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v, jet_detail::dims(a, b));
  for (int i = 0; i < r.n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    r.g[si] = a.g[si] * b.v + a.v * b.g[si];
    for (int j = 0; j < r.n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      r.hess(i, j) = a.hess(i, j) * b.v + a.v * b.hess(i, j) + a.g[si] * b.g[sj] + a.g[sj] * b.g[si];
    }
  }
  return r;
}
inline Jet reciprocal(const Jet& a) {
  const double inv = 1.0 / a.v;
  return jet_detail::apply(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

inline Jet operator+(const Jet& a, double b) { return a + Jet(b, a.n); }
inline Jet operator+(double a, const Jet& b) { return Jet(a, b.n) + b; }
inline Jet operator-(const Jet& a, double b) { return a - Jet(b, a.n); }
inline Jet operator-(double a, const Jet& b) { return Jet(a, b.n) - b; }
inline Jet operator*(const Jet& a, double b) { return a * Jet(b, a.n); }
inline Jet operator*(double a, const Jet& b) { return Jet(a, b.n) * b; }
inline Jet operator/(const Jet& a, double b) { return a * (1.0 / b); }
inline Jet operator/(double a, const Jet& b) { return Jet(a, b.n) / b; }

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return jet_detail::apply(a, e, e, e);
}
inline Jet log(const Jet& a) {
  const double inv = 1.0 / a.v;
  return jet_detail::apply(a, std::log(a.v), inv, -inv * inv);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

}  // namespace clse
