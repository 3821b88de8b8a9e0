#pragma once

#include <cmath>
#include <string>

namespace stargp {

inline constexpr double kSqrt3 = 1.7320508075688772;

/// Matern correlation, smoothness 1.5: (1 + sqrt3 r) exp(-sqrt3 r).
inline double matern15_correlation(double r) {
  const double a = kSqrt3 * r;
  return (1.0 + a) * std::exp(-a);
}

/// d/d(r^2) of matern15_correlation; finite at r = 0.
inline double matern15_dcorr_dr2(double r) {
  return -1.5 * std::exp(-kSqrt3 * r);
}

/// Matern correlation, smoothness 0.5 (exponential).
inline double matern05_correlation(double r) { return std::exp(-r); }

enum class MaternSmoothness { kHalf, kThreeHalves };

inline double matern_correlation(MaternSmoothness nu, double r) {
  return nu == MaternSmoothness::kHalf ? matern05_correlation(r)
                                       : matern15_correlation(r);
}

inline std::string to_string(MaternSmoothness nu) {
  return nu == MaternSmoothness::kHalf ? "matern0.5" : "matern1.5";
}

}  // namespace stargp
