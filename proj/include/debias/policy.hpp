#pragma once

#include <cstdint>
#include <vector>

#include "debias/population.hpp"

namespace debias {

// How thresholds are coupled across groups.
enum class FairnessKind { Unconstrained, SameDecisionRule, EqualOpportunity };

struct FairnessRule {
  FairnessKind kind = FairnessKind::Unconstrained;
  // EqualOpportunity only: admissible |TPR_a - TPR_b|. 0 forces exact parity.
  double slack = 0.0;

  void validate() const;
};

// Exploration-probability schedule. FixedDecay lowers epsilon by `step` every
// `every` observed (admitted) samples; Adaptive tracks the gap between
// realized and expected misclassification counts over a trailing window of
// arrivals and sets epsilon proportional to it.
enum class ScheduleKind { FixedDecay, Adaptive };

struct EpsilonSchedule {
  ScheduleKind kind = ScheduleKind::FixedDecay;
  double eps0 = 0.5;
  double step = 0.1;            // FixedDecay decrement per period
  std::uint64_t every = 10000;  // FixedDecay period, in observed samples
  double gain = 1.0;            // Adaptive proportionality constant
  std::uint64_t window = 1000;  // Adaptive trailing-window length, in arrivals
  double eps_min = 0.01;
  double eps_max = 1.0;

  void validate() const;
};

// A bound with a flag recording whether the defining equation had to be
// clamped back into the distribution's quantile range.
struct BoundResult {
  double value = 0.0;
  bool clamped = false;
};

struct GroupPolicy {
  double theta = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  bool lb_clamped = false;
  bool ub_clamped = false;
};

// The per-round decision rule: group thresholds, exploration window bounds,
// and the shared exploration probability.
struct ThresholdPolicy {
  std::vector<GroupPolicy> groups;
  double epsilon = 0.0;
};

// Expected per-arrival misclassification probability of threshold `theta` for
// one group: alpha1 * F1(theta) + alpha0 * (1 - F0(theta)).
double misclassification_rate(const GroupEstimate& g, double theta);

// Loss-minimizing threshold for a single group, by dense grid over the merged
// 0.1%-99.9% quantile range plus golden-section refinement. Ties break toward
// the smallest theta. Throws std::domain_error when alpha1 is 0 or 1 (the
// objective is monotone and has no interior optimum).
double optimal_threshold(const GroupEstimate& g);

// Per-group thresholds under a fairness rule.
//   Unconstrained    -> independent optimal_threshold per group.
//   SameDecisionRule -> one shared theta minimizing the summed objective.
//   EqualOpportunity -> thresholds parameterized by a common true-positive
//                       rate q, theta_g = quantile(f1_g, 1-q); with slack > 0
//                       the TPRs may differ by at most `slack` (two groups).
std::vector<double> optimal_thresholds_fair(const PopulationEstimate& pop,
                                            const FairnessRule& rule);

// Exploration lower bound: the point lb with as much estimated label-0 mass
// between lb and the reference percentile as between the reference percentile
// and theta. Clamped to the 0.0001-quantile (arg <= 0) or 0.9999-quantile
// (arg >= 1) when the defining equation leaves the distribution's range.
BoundResult lower_bound(const DistEstimate& est0, double theta);

// Mirrored upper bound on the label-1 side: equal estimated label-1 mass on
// both sides of the reference percentile between theta and ub. Clamped to the
// 0.9999-quantile when the defining equation exceeds 1. Throws
// std::domain_error if theta lies above the reference percentile.
BoundResult upper_bound(const DistEstimate& est1, double theta);

// Next exploration probability. `observed` counts samples seen (FixedDecay);
// err_obs / err_exp are realized and expected misclassification counts over
// the schedule's trailing window (Adaptive). Always >= eps_min > 0.
double next_epsilon(const EpsilonSchedule& schedule, std::uint64_t observed,
                    double err_obs, double err_exp);

}  // namespace debias
