#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "debias/engine.hpp"
#include "debias/policy.hpp"
#include "debias/population.hpp"

namespace debias {

// Loss-minimizing thresholds computed on the TRUE populations with the same
// optimizer and fairness rule as the algorithm under test.
struct OracleRef {
  std::vector<double> theta_star;
};

OracleRef make_oracle(const PopulationSpec& truth, const FairnessRule& rule);

struct ConfusionCounts {
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
};

// Count decisions of the pure threshold rule x >= theta_ref[g] against the
// true labels carried by the records.
ConfusionCounts score_decisions(std::span<const DecisionRecord> records,
                                const std::vector<double>& theta_ref);

// Cumulative excess error count of the algorithm's actual decisions
// (exploration included) over the oracle threshold rule, per arrival:
// series[i] = sum over the first i+1 records of
//   (FP+FN)_algorithm - (FP+FN)_oracle.
std::vector<double> regret(std::span<const DecisionRecord> records,
                           const OracleRef& oracle);

// Same as regret, but each error contributes exp(beta * |x - theta_dec|)
// where theta_dec is the threshold that made the decision (the algorithm's
// group threshold at decision time on its side; theta_star on the oracle's).
std::vector<double> weighted_regret(std::span<const DecisionRecord> records,
                                    const OracleRef& oracle, double beta);

// Net exploration-error count for group g over one round: the expected excess
// of erroneously admitted label-0 explorees over correctly admitted label-1
// explorees, under the current estimates.
//   ((F0(theta)-F0(lb))/F0(theta)) * eps * n0_below
// - ((F1(theta)-F1(lb))/F1(theta)) * eps * n1_below.
// Throws std::domain_error when either CDF at theta is zero.
double exploration_error(const PopulationEstimate& est,
                         const ThresholdPolicy& policy, double eps,
                         std::uint64_t n0_below, std::uint64_t n1_below,
                         std::size_t g);

// Empirical true-positive-rate gap (max - min over groups) of the threshold
// rule x >= thetas[g] over the window. Returns NaN when any group has no
// label-1 records in the window or fewer than two groups appear.
double eo_gap(std::span<const DecisionRecord> records,
              const std::vector<double>& thetas);

// |omega_hat - omega_true| per (group, label).
std::vector<std::array<double, 2>> bias_error(const PopulationEstimate& est,
                                              const PopulationEstimate& truth);

}  // namespace debias
