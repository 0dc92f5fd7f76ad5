#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace debias {

// Scalar special functions backing the distribution families. Everything here
// is double precision and allocation-free.

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kSqrt2 = 1.4142135623730950488016887;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Inverse standard-normal CDF (Wichura's PPND16 rational approximations),
// polished with one Newton step against normal_cdf so the roundtrip holds to
// full double precision across the (0,1) interior.
double normal_quantile(double p);

// log Beta(a,b) via lgamma.
inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Regularized incomplete beta I_x(a,b), evaluated with the Lentz continued
// fraction (with the usual symmetry flip for x beyond the convergence ridge).
double incomplete_beta(double a, double b, double x);

}  // namespace debias
