#include "debias/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace debias {

namespace {

bool oracle_admits(const DecisionRecord& rec, const OracleRef& oracle) {
  return rec.arrival.x >= oracle.theta_star.at(rec.arrival.group);
}

bool algorithm_admits(const DecisionRecord& rec) {
  return rec.decision != DecisionKind::Reject;
}

// Error weight exp(beta * |x - deciding threshold|); beta = 0 gives plain
// counting.
double error_weight(double x, double theta_dec, double beta) {
  return std::exp(beta * std::abs(x - theta_dec));
}

std::vector<double> regret_series(std::span<const DecisionRecord> records,
                                  const OracleRef& oracle, double beta) {
  std::vector<double> out;
  out.reserve(records.size());
  double cum = 0.0;
  for (const DecisionRecord& rec : records) {
    const bool alg_admit = algorithm_admits(rec);
    const bool alg_error = alg_admit != (rec.arrival.y_true == 1);
    if (alg_error) {
      cum += beta == 0.0
                 ? 1.0
                 : error_weight(rec.arrival.x, rec.theta_at_decision, beta);
    }
    const bool orc_admit = oracle_admits(rec, oracle);
    const bool orc_error = orc_admit != (rec.arrival.y_true == 1);
    if (orc_error) {
      const double theta_star = oracle.theta_star[rec.arrival.group];
      cum -= beta == 0.0 ? 1.0 : error_weight(rec.arrival.x, theta_star, beta);
    }
    out.push_back(cum);
  }
  return out;
}

}  // namespace

OracleRef make_oracle(const PopulationSpec& truth, const FairnessRule& rule) {
  truth.validate();
  return {optimal_thresholds_fair(truth.truth, rule)};
}

ConfusionCounts score_decisions(std::span<const DecisionRecord> records,
                                const std::vector<double>& theta_ref) {
  ConfusionCounts c;
  for (const DecisionRecord& rec : records) {
    const bool admit = rec.arrival.x >= theta_ref.at(rec.arrival.group);
    if (admit) {
      if (rec.arrival.y_true == 1) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    } else {
      if (rec.arrival.y_true == 1) {
        ++c.fn;
      } else {
        ++c.tn;
      }
    }
  }
  return c;
}

std::vector<double> regret(std::span<const DecisionRecord> records,
                           const OracleRef& oracle) {
  return regret_series(records, oracle, 0.0);
}

std::vector<double> weighted_regret(std::span<const DecisionRecord> records,
                                    const OracleRef& oracle, double beta) {
  if (!(beta >= 0.0)) {
    throw std::domain_error("weighted_regret: beta must be non-negative");
  }
  return regret_series(records, oracle, beta);
}

double exploration_error(const PopulationEstimate& est,
                         const ThresholdPolicy& policy, double eps,
                         std::uint64_t n0_below, std::uint64_t n1_below,
                         std::size_t g) {
  const GroupEstimate& ge = est.group(g);
  const GroupPolicy& gp = policy.groups.at(g);
  const double f0_theta = cdf(ge.dist[0], gp.theta);
  const double f1_theta = cdf(ge.dist[1], gp.theta);
  if (!(f0_theta > 0.0) || !(f1_theta > 0.0)) {
    throw std::domain_error("exploration_error: zero CDF mass below theta");
  }
  const double share0 = (f0_theta - cdf(ge.dist[0], gp.lb)) / f0_theta;
  const double share1 = (f1_theta - cdf(ge.dist[1], gp.lb)) / f1_theta;
  return share0 * eps * static_cast<double>(n0_below) -
         share1 * eps * static_cast<double>(n1_below);
}

double eo_gap(std::span<const DecisionRecord> records,
              const std::vector<double>& thetas) {
  std::vector<std::uint64_t> num(thetas.size(), 0);
  std::vector<std::uint64_t> den(thetas.size(), 0);
  for (const DecisionRecord& rec : records) {
    if (rec.arrival.y_true != 1) continue;
    const std::size_t g = rec.arrival.group;
    ++den.at(g);
    if (rec.arrival.x >= thetas[g]) ++num[g];
  }
  if (thetas.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double lo = 1.0, hi = 0.0;
  for (std::size_t g = 0; g < thetas.size(); ++g) {
    if (den[g] == 0) return std::numeric_limits<double>::quiet_NaN();
    const double tpr = static_cast<double>(num[g]) / static_cast<double>(den[g]);
    lo = std::min(lo, tpr);
    hi = std::max(hi, tpr);
  }
  return hi - lo;
}

std::vector<std::array<double, 2>> bias_error(const PopulationEstimate& est,
                                              const PopulationEstimate& truth) {
  if (est.n_groups() != truth.n_groups()) {
    throw std::domain_error("bias_error: group count mismatch");
  }
  std::vector<std::array<double, 2>> out(est.n_groups());
  for (std::size_t g = 0; g < est.n_groups(); ++g) {
    for (int y = 0; y < 2; ++y) {
      out[g][y] = std::abs(est.group(g).dist[y].omega - truth.group(g).dist[y].omega);
    }
  }
  return out;
}

}  // namespace debias
