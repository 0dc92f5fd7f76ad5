#pragma once

#include <cstddef>
#include <vector>

#include "debias/random.hpp"

namespace debias {

// Single-free-parameter distribution families. Each family has exactly one
// free parameter psi; everything else is fixed at construction:
//   * GaussianLocation — psi is the mean, sigma fixed;
//   * BetaAlpha        — psi is alpha, beta fixed, support the open unit
//                        interval (scores must be pre-squashed into (0,1)).
enum class Family { GaussianLocation, BetaAlpha };

struct FamilyKind {
  Family family = Family::GaussianLocation;
  double fixed = 1.0;  // sigma for GaussianLocation, beta for BetaAlpha

  static FamilyKind gaussian(double sigma);
  static FamilyKind beta(double beta);
};

// A distribution estimate anchored by its reference percentile: omega caches
// the tau-th percentile of the full distribution and is kept in sync with psi
// by the factory functions (estimates are immutable values; "updating" one
// means constructing a replacement).
struct DistEstimate {
  FamilyKind kind;
  double psi = 0.0;
  double tau = 50.0;   // percentile level in (0,100)
  double omega = 0.0;  // cached quantile(tau/100)

  static DistEstimate from_psi(FamilyKind kind, double psi, double tau);
  // Re-anchors the family so its tau-th percentile equals omega.
  static DistEstimate from_omega(FamilyKind kind, double omega, double tau);
};

double pdf(const DistEstimate& est, double x);
double cdf(const DistEstimate& est, double x);

// Inverse CDF. p must lie strictly inside (0,1); Beta quantiles are found by
// bracketed bisection on the regularized incomplete beta (interval width
// 1e-12), Gaussian quantiles in closed form.
double quantile(const DistEstimate& est, double p);

// Returns psi such that the family's tau-th percentile equals target. The
// percentile is strictly increasing in psi for both families, so a monotone
// bisection over a (geometrically expanded) bracket is exact.
double solve_param_for_percentile(FamilyKind kind, double tau, double target);

// Quantile of the distribution truncated to the window (a,b):
// x with (cdf(x)-cdf(a))/(cdf(b)-cdf(a)) = p. Throws if the window carries no
// mass under the estimate.
double truncated_quantile(const DistEstimate& est, double a, double b, double p);

// n i.i.d. draws by inverse transform; deterministic given the sequence state.
std::vector<double> sample_batch(const DistEstimate& est, std::size_t n, Sequence& seq);

// Support interior test (Gaussian: all finite reals; Beta: open unit interval).
bool in_support(FamilyKind kind, double x);

}  // namespace debias
