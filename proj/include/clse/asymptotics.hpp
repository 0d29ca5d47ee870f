#pragma once

#include "clse/estimators.hpp"
#include "clse/simulate.hpp"
#include "clse/stats.hpp"

#include <optional>
#include <vector>

namespace clse {

/// sum f'_k f'_k^T over a window, with its inverse M_n when it exists.
struct InfoMatrix {
  ParamMat matrix;
  std::optional<ParamMat> inverse;  ///< withheld when singular
  double condition = 0.0;           ///< ratio of extreme eigenvalues; inf when singular
  std::vector<ParamVec> null_space;
  bool singular() const { return !inverse.has_value(); }
};

/// Throws ErrorKind::numerical when every derivative vanishes; other
/// singular matrices are reported through the null space.
InfoMatrix info_matrix(const ConditionalModel& model, const Trajectory& t, const ParamVec& theta, Window window);
InfoMatrix info_from_matrix(const ParamMat& m);

/// Symmetric square root of a symmetric positive definite matrix, or
/// nullopt when it is not positive definite.
std::optional<ParamMat> spd_sqrt(const ParamMat& m);

/// M3 scalar normalization: Phi_n^2 = sum_k [(1 + S^a 2^a K^{-a} (k-1)^{-a}) / 2]^2.
/// The k = 1 term is dropped for a > 0, where (k-1)^{-a} is undefined.
double phi_squared(std::size_t n, double k0, double alpha, double s_alpha);

struct PhiMatrix {
  ParamMat phi2;
  std::optional<ParamMat> factor;  ///< Phi_n itself; withheld when phi2 is singular
  double determinant = 0.0;
};

/// Two-parameter M3 normalization (1/4) [[n, K n^{1-a}], [K n^{1-a}, K^2 a_n]]
/// with a_n = n^{1-2a} for 2a < 1 and ln n for 2a = 1.
PhiMatrix phi_squared_matrix(std::size_t n, double k0, double alpha);

/// (sum_{k=1}^n m0^{k-1})^{1/2}.
double psi_bgw(double m0, std::size_t n);

/// scaling (theta-hat - theta0), divided by s when given.
ParamVec standardized_error(const ParamVec& theta_hat, const ParamVec& theta0, const ParamMat& scaling,
                            std::optional<double> s = std::nullopt);
double standardized_error(double theta_hat, double theta0, double scaling, std::optional<double> s = std::nullopt);

struct BgwLimitSample {
  std::vector<double> samples;    ///< U W^{-exponent}, nonextinct replicates only
  std::vector<double> w_proxies;  ///< every replicate, 0 when extinct
  std::size_t extinct = 0;
};

/// Draws from the mixture limit W^{-exponent} U, U ~ N(0, sigma0^2)
/// independent of W, with W proxied by N_horizon m0^{-horizon}.
BgwLimitSample sample_bgw_limit(const OffspringSpec& offspring, std::uint64_t n0, std::size_t reps,
                                std::size_t horizon, std::uint64_t seed, double exponent = 1.0);

/// theta_i +- z_{(1+level)/2} sqrt(sigma2 M_n[i,i]).
std::vector<Interval> wald_ci(const ParamVec& theta_hat, const InfoMatrix& info, double sigma2, double level);

}  // namespace clse
