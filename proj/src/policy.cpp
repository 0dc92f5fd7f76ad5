#include "debias/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace debias {

namespace {

constexpr double kGoldenTol = 1e-8;
constexpr int kGridPoints = 2001;

// Dense-grid scan followed by golden-section refinement inside the winning
// grid cell. Ties on the grid keep the smallest abscissa; the refined point
// replaces it only when strictly better.
template <typename F>
double grid_golden_min(F&& f, double lo, double hi) {
  if (!(lo < hi)) return lo;
  const double h = (hi - lo) / (kGridPoints - 1);
  double best_x = lo;
  double best_v = f(lo);
  for (int i = 1; i < kGridPoints; ++i) {
    const double x = (i == kGridPoints - 1) ? hi : lo + h * i;
    const double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }

  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > kGoldenTol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double xr = 0.5 * (a + b);
  const double vr = f(xr);
  if (vr < best_v || (vr == best_v && xr < best_x)) return xr;
  return best_x;
}

void check_interior_mix(const GroupEstimate& g) {
  if (!(g.alpha[1] > 0.0 && g.alpha[1] < 1.0)) {
    throw std::domain_error(
        "optimal_threshold: label-1 fraction of 0 or 1 makes the objective "
        "monotone with no interior optimum");
  }
}

void merged_range(const GroupEstimate& g, double& lo, double& hi) {
  lo = std::min(lo, std::min(quantile(g.dist[0], 0.001), quantile(g.dist[1], 0.001)));
  hi = std::max(hi, std::max(quantile(g.dist[0], 0.999), quantile(g.dist[1], 0.999)));
}

// Group objective as a function of the shared true-positive rate q, with
// theta_g = quantile(f1_g, 1 - q).
double objective_at_tpr(const GroupEstimate& g, double q) {
  return misclassification_rate(g, quantile(g.dist[1], 1.0 - q));
}

constexpr double kTprLo = 0.0005;
constexpr double kTprHi = 0.9995;

}  // namespace

void FairnessRule::validate() const {
  if (!(slack >= 0.0)) {
    throw std::domain_error("FairnessRule: slack must be non-negative");
  }
}

void EpsilonSchedule::validate() const {
  if (!(eps_min > 0.0 && eps_min <= eps0 && eps0 <= eps_max && eps_max <= 1.0)) {
    throw std::domain_error(
        "EpsilonSchedule: requires 0 < eps_min <= eps0 <= eps_max <= 1");
  }
  if (!(step >= 0.0)) throw std::domain_error("EpsilonSchedule: step must be >= 0");
  if (every == 0) throw std::domain_error("EpsilonSchedule: every must be >= 1");
  if (!(gain > 0.0)) throw std::domain_error("EpsilonSchedule: gain must be positive");
  if (window == 0) throw std::domain_error("EpsilonSchedule: window must be >= 1");
}

double misclassification_rate(const GroupEstimate& g, double theta) {
  return g.alpha[1] * cdf(g.dist[1], theta) +
         g.alpha[0] * (1.0 - cdf(g.dist[0], theta));
}

double optimal_threshold(const GroupEstimate& g) {
  g.validate();
  check_interior_mix(g);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  merged_range(g, lo, hi);
  return grid_golden_min([&](double th) { return misclassification_rate(g, th); },
                         lo, hi);
}

std::vector<double> optimal_thresholds_fair(const PopulationEstimate& pop,
                                            const FairnessRule& rule) {
  rule.validate();
  if (pop.groups.empty()) {
    throw std::domain_error("optimal_thresholds_fair: empty population");
  }
  const std::size_t n = pop.n_groups();

  if (rule.kind == FairnessKind::Unconstrained) {
    std::vector<double> out;
    out.reserve(n);
    for (const auto& g : pop.groups) out.push_back(optimal_threshold(g));
    return out;
  }

  for (const auto& g : pop.groups) {
    g.validate();
    check_interior_mix(g);
  }

  if (rule.kind == FairnessKind::SameDecisionRule) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& g : pop.groups) merged_range(g, lo, hi);
    const double theta = grid_golden_min(
        [&](double th) {
          double s = 0.0;
          for (const auto& g : pop.groups) s += misclassification_rate(g, th);
          return s;
        },
        lo, hi);
    return std::vector<double>(n, theta);
  }

  // EqualOpportunity. Exact parity (or one group): a single shared q.
  if (rule.slack <= 0.0 || n == 1) {
    const double q = grid_golden_min(
        [&](double qq) {
          double s = 0.0;
          for (const auto& g : pop.groups) s += objective_at_tpr(g, qq);
          return s;
        },
        kTprLo, kTprHi);
    std::vector<double> out;
    out.reserve(n);
    for (const auto& g : pop.groups) out.push_back(quantile(g.dist[1], 1.0 - q));
    return out;
  }

  // Relaxed parity: |q_a - q_b| <= slack, objective separable across groups.
  // The constrained optimum is either the pair of unconstrained minimizers
  // (when already within the band) or lies on one of the band edges.
  if (n != 2) {
    throw std::invalid_argument(
        "optimal_thresholds_fair: slack relaxation supports exactly two groups");
  }
  const auto& ga = pop.groups[0];
  const auto& gb = pop.groups[1];
  const double qa_free =
      grid_golden_min([&](double q) { return objective_at_tpr(ga, q); }, kTprLo, kTprHi);
  const double qb_free =
      grid_golden_min([&](double q) { return objective_at_tpr(gb, q); }, kTprLo, kTprHi);

  double qa = qa_free;
  double qb = qb_free;
  if (std::abs(qa_free - qb_free) > rule.slack) {
    double best = std::numeric_limits<double>::infinity();
    for (const double offset : {rule.slack, -rule.slack}) {
      const double lo = std::max(kTprLo, kTprLo - offset);
      const double hi = std::min(kTprHi, kTprHi - offset);
      if (!(lo < hi)) continue;
      const double q = grid_golden_min(
          [&](double qq) {
            return objective_at_tpr(ga, qq) + objective_at_tpr(gb, qq + offset);
          },
          lo, hi);
      const double v = objective_at_tpr(ga, q) + objective_at_tpr(gb, q + offset);
      if (v < best) {
        best = v;
        qa = q;
        qb = q + offset;
      }
    }
  }
  return {quantile(ga.dist[1], 1.0 - qa), quantile(gb.dist[1], 1.0 - qb)};
}

BoundResult lower_bound(const DistEstimate& est0, double theta) {
  const double at_ref = cdf(est0, est0.omega);
  const double arg = 2.0 * at_ref - cdf(est0, theta);
  if (arg <= 0.0) return {quantile(est0, 0.0001), true};
  if (arg >= 1.0) return {quantile(est0, 0.9999), true};
  return {quantile(est0, arg), false};
}

BoundResult upper_bound(const DistEstimate& est1, double theta) {
  if (theta > est1.omega) {
    throw std::domain_error(
        "upper_bound: theta must not exceed the label-1 reference percentile");
  }
  const double at_ref = cdf(est1, est1.omega);
  const double arg = 2.0 * at_ref - cdf(est1, theta);
  if (arg >= 1.0) return {quantile(est1, 0.9999), true};
  if (arg <= 0.0) return {quantile(est1, 0.0001), true};
  return {quantile(est1, arg), false};
}

double next_epsilon(const EpsilonSchedule& schedule, std::uint64_t observed,
                    double err_obs, double err_exp) {
  schedule.validate();
  double eps = schedule.eps0;
  if (schedule.kind == ScheduleKind::FixedDecay) {
    eps = schedule.eps0 -
          schedule.step * static_cast<double>(observed / schedule.every);
  } else {
    eps = schedule.gain * std::abs(err_obs - err_exp) / std::max(err_exp, 1.0);
  }
  return std::clamp(eps, schedule.eps_min, schedule.eps_max);
}

}  // namespace debias
