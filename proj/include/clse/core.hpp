#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace clse {

/// Parameter vector, at most three coordinates (p <= 3), stack allocated.
using ParamVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Square parameter matrix (derivatives, information matrices).
using ParamMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Observed history Z_0..Z_{k-1} available when predicting step k.
using History = std::span<const double>;

inline constexpr std::size_t kMaxParams = 3;

enum class ErrorKind { invalid_argument, overflow, numerical, io };

/// Single exception type for the library; the kind maps onto CLI exit codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}
// Literal messages stay as pointers until a check actually fails; the hot
// evaluation paths call require() per step.
inline void require(bool cond, const char* what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

/// Closed box Theta = prod [lo_i, hi_i].
struct Box {
  ParamVec lo;
  ParamVec hi;

  std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }

  bool contains(const ParamVec& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    return true;
  }

  ParamVec clamp(ParamVec x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::min(hi[i], std::max(lo[i], x[i]));
    return x;
  }

  ParamVec center() const { return (lo + hi) / 2.0; }

  void validate() const {
    require(lo.size() == hi.size() && lo.size() >= 1 && lo.size() <= 3, "box dimension must be 1..3");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      require(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] <= hi[i], "box bounds must be finite with lo <= hi");
  }
};

inline ParamVec make_params(std::initializer_list<double> v) {
  ParamVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Box b{make_params(lo), make_params(hi)};
  b.validate();
  return b;
}

/// Neumaier compensated summation. Long partial sums (n up to 1e5) go
/// through this so the result is insensitive to summation order.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Lexicographic order on parameter vectors, used for deterministic tie-breaks.
inline bool lex_less(const ParamVec& a, const ParamVec& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

}  // namespace clse
