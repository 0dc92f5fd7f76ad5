#include "debias/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "debias/special.hpp"

namespace debias {

FamilyKind FamilyKind::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("FamilyKind: sigma must be positive");
  return FamilyKind{Family::GaussianLocation, sigma};
}

FamilyKind FamilyKind::beta(double beta) {
  if (!(beta > 0.0)) throw std::domain_error("FamilyKind: beta must be positive");
  return FamilyKind{Family::BetaAlpha, beta};
}

bool in_support(FamilyKind kind, double x) {
  if (!std::isfinite(x)) return false;
  if (kind.family == Family::BetaAlpha) return x > 0.0 && x < 1.0;
  return true;
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 100.0)) {
    throw std::domain_error("DistEstimate: tau must lie in (0,100)");
  }
}

double raw_quantile(FamilyKind kind, double psi, double p);

double raw_cdf(FamilyKind kind, double psi, double x) {
  switch (kind.family) {
    case Family::GaussianLocation:
      return normal_cdf((x - psi) / kind.fixed);
    case Family::BetaAlpha:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return incomplete_beta(psi, kind.fixed, x);
  }
  return 0.0;
}

double raw_quantile(FamilyKind kind, double psi, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("quantile: p must lie strictly in (0,1)");
  }
  if (kind.family == Family::GaussianLocation) {
    return psi + kind.fixed * normal_quantile(p);
  }
  // Beta: bisect the regularized incomplete beta down to a 1e-12-wide bracket.
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta(psi, kind.fixed, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DistEstimate DistEstimate::from_psi(FamilyKind kind, double psi, double tau) {
  check_tau(tau);
  if (kind.family == Family::BetaAlpha && !(psi > 0.0)) {
    throw std::domain_error("DistEstimate: Beta alpha must be positive");
  }
  DistEstimate est;
  est.kind = kind;
  est.psi = psi;
  est.tau = tau;
  est.omega = raw_quantile(kind, psi, tau / 100.0);
  return est;
}

DistEstimate DistEstimate::from_omega(FamilyKind kind, double omega, double tau) {
  check_tau(tau);
  return from_psi(kind, solve_param_for_percentile(kind, tau, omega), tau);
}

double pdf(const DistEstimate& est, double x) {
  if (!std::isfinite(x)) throw std::domain_error("pdf: x must be finite");
  switch (est.kind.family) {
    case Family::GaussianLocation: {
      const double s = est.kind.fixed;
      return normal_pdf((x - est.psi) / s) / s;
    }
    case Family::BetaAlpha: {
      if (x <= 0.0 || x >= 1.0) return 0.0;
      const double a = est.psi, b = est.kind.fixed;
      return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                      log_beta(a, b));
    }
  }
  return 0.0;
}

double cdf(const DistEstimate& est, double x) {
  if (!std::isfinite(x)) throw std::domain_error("cdf: x must be finite");
  return raw_cdf(est.kind, est.psi, x);
}

double quantile(const DistEstimate& est, double p) {
  return raw_quantile(est.kind, est.psi, p);
}

double solve_param_for_percentile(FamilyKind kind, double tau, double target) {
  check_tau(tau);
  if (!in_support(kind, target)) {
    throw std::domain_error("solve_param_for_percentile: target outside support");
  }
  const double p = tau / 100.0;
  if (kind.family == Family::GaussianLocation) {
    // Location shift: percentile(psi) = psi + sigma * z_p.
    return target - kind.fixed * normal_quantile(p);
  }
  // BetaAlpha: the tau-th percentile is strictly increasing in alpha. Find a
  // bracket and bisect. cdf decreasing in alpha at fixed x, so quantile
  // increasing: percentile(lo) <= target <= percentile(hi) iff
  // cdf(lo, target) >= p >= cdf(hi, target).
  double lo = 1e-4, hi = 1e4;
  int expansions = 0;
  while (raw_cdf(kind, lo, target) < p) {  // even the smallest alpha too right-shifted
    lo /= 2.0;
    if (++expansions > 200) {
      throw std::runtime_error("solve_param_for_percentile: bracket expansion failed");
    }
  }
  expansions = 0;
  while (raw_cdf(kind, hi, target) > p) {  // largest alpha still too left-shifted
    hi *= 2.0;
    if (++expansions > 200) {
      throw std::runtime_error("solve_param_for_percentile: bracket expansion failed");
    }
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (raw_cdf(kind, mid, target) > p) {
      lo = mid;  // alpha too small: mass still left of target
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double truncated_quantile(const DistEstimate& est, double a, double b, double p) {
  if (!(a < b)) throw std::domain_error("truncated_quantile: requires a < b");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("truncated_quantile: p must lie strictly in (0,1)");
  }
  const double ca = cdf(est, a);
  const double cb = cdf(est, b);
  if (!(cb - ca > 1e-12)) {
    throw std::domain_error("truncated_quantile: window carries no mass");
  }
  return quantile(est, ca + p * (cb - ca));
}

std::vector<double> sample_batch(const DistEstimate& est, std::size_t n, Sequence& seq) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(est, seq.next()));
  return out;
}

}  // namespace debias
