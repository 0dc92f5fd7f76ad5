#include "debias/mdp.hpp"

#include <cmath>
#include <stdexcept>

#include "debias/dataio.hpp"
#include "debias/policy.hpp"

namespace debias {

void MdpCostParams::validate() const {
  if (!(L1l < L1h)) {
    throw std::domain_error("MdpCostParams: requires L1l < L1h");
  }
  if (!(L2l < L2h)) {
    throw std::domain_error("MdpCostParams: requires L2l < L2h");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("MdpCostParams: gamma must lie in [0,1]");
  }
  if (N1 == 0 || N2 == 0) {
    throw std::domain_error("MdpCostParams: stage sizes must be positive");
  }
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::domain_error("MdpCostParams: eps must lie in [0,1]");
  }
}

double expected_miss_cost(double theta_hat, const GroupEstimate& truth,
                          const MdpCostParams& costs, double n_t) {
  return n_t * (costs.L1h * truth.alpha[1] * cdf(truth.dist[1], theta_hat) +
                costs.L2h * truth.alpha[0] * (1.0 - cdf(truth.dist[0], theta_hat)));
}

double expected_exp_cost(ExplorationAction action, double theta_hat, double lb,
                         const MdpCostParams& costs, const GroupEstimate& truth,
                         double n_t) {
  if (lb > theta_hat) {
    throw std::domain_error("expected_exp_cost: requires lb <= theta_hat");
  }
  if (action == ExplorationAction::NoExplore) return 0.0;
  const double df1 = cdf(truth.dist[1], theta_hat) - cdf(truth.dist[1], lb);
  const double df0 = cdf(truth.dist[0], theta_hat) - cdf(truth.dist[0], lb);
  if (action == ExplorationAction::Uniform) {
    return n_t * (-costs.L1h * costs.eps * truth.alpha[1] * df1 +
                  costs.L2h * costs.eps * truth.alpha[0] * df0);
  }
  return n_t * ((-costs.L1h + costs.L1l) * costs.eps * truth.alpha[1] * df1 +
                costs.L2l * (1.0 - costs.gamma) * costs.eps * truth.alpha[0] * df0);
}

bool intermediate_dominance_condition(const MdpCostParams& costs, double alpha0,
                                      double alpha1) {
  costs.validate();
  const double lhs = (1.0 - static_cast<double>(costs.N2) / static_cast<double>(costs.N1)) *
                     (costs.L2h * alpha0 - costs.L1h * alpha1);
  const double rhs = costs.L2l * (1.0 - costs.gamma) * alpha0;
  return lhs >= rhs;
}

namespace {

ThresholdPolicy stage_one_policy(const GroupEstimate& init_est, double eps) {
  GroupPolicy gp;
  gp.theta = optimal_threshold(init_est);
  const BoundResult lb = lower_bound(init_est.dist[0], gp.theta);
  gp.lb = std::min(lb.value, gp.theta);
  gp.lb_clamped = lb.clamped;
  if (gp.theta > init_est.dist[1].omega) {
    gp.ub = std::max(gp.theta, quantile(init_est.dist[1], 0.9999));
    gp.ub_clamped = true;
  } else {
    const BoundResult ub = upper_bound(init_est.dist[1], gp.theta);
    gp.ub = std::max(ub.value, gp.theta);
    gp.ub_clamped = ub.clamped;
  }
  ThresholdPolicy policy;
  policy.groups = {gp};
  policy.epsilon = eps;
  return policy;
}

double threshold_miss_cost(const std::vector<AgentArrival>& arrivals,
                           double theta, const MdpCostParams& costs) {
  double cost = 0.0;
  for (const AgentArrival& a : arrivals) {
    if (a.y_true == 1 && a.x < theta) {
      cost += costs.L1h;
    } else if (a.y_true == 0 && a.x >= theta) {
      cost += costs.L2h;
    }
  }
  return cost;
}

}  // namespace

StageOutcome simulate_two_stage(ExplorationAction action,
                                const TwoStageSetup& setup,
                                const RandomStream& stream) {
  setup.costs.validate();
  setup.init_est.validate();
  setup.truth.validate();

  PopulationSpec world;
  world.truth.groups = {setup.truth};
  world.group_weights = {1.0};

  EngineConfig cfg;
  cfg.variant.kind = VariantKind::ActiveDebiasing;
  cfg.variant.strategy = setup.stage_update;
  cfg.explore_action = action;
  cfg.gamma = setup.costs.gamma;
  cfg.batch_min = 1;  // the single update is driven explicitly below
  cfg.init_est.groups = {setup.init_est};
  EngineState state(cfg, stream);
  state.set_policy(stage_one_policy(setup.init_est, setup.costs.eps));

  const double theta_1 = state.policy().groups[0].theta;
  const std::vector<AgentArrival> stage1 =
      synth_stream(world, setup.costs.N1, stream, 0);

  StageOutcome out;
  out.action = action;
  out.miss_cost_1 = threshold_miss_cost(stage1, theta_1, setup.costs);
  for (const AgentArrival& a : stage1) {
    const DecisionRecord rec = state.decide(a);
    state.accumulate(rec);
    if (rec.decision != DecisionKind::AdmitExplore) continue;
    // Exploration charges/credits relative to the threshold rule already
    // priced by miss_cost_1.
    if (action == ExplorationAction::Uniform) {
      out.exp_cost += a.y_true == 1 ? -setup.costs.L1h : setup.costs.L2h;
    } else if (action == ExplorationAction::Intermediate) {
      if (a.y_true == 1) {
        out.exp_cost += -setup.costs.L1h + setup.costs.L1l;
      } else if (rec.observed == LabelObservation::Exact) {
        // The unqualified exploree failed the intermediate requirements.
        out.exp_cost += setup.costs.L2l;
      }
    }
  }

  // One estimate refresh from the stage-1 batches. NoExplore yields no new
  // information below the threshold, so the estimates stay as initialized.
  if (action != ExplorationAction::NoExplore) state.update();

  out.theta_2 = optimal_threshold(state.estimates().group(0));
  const double theta_star = optimal_threshold(setup.truth);
  out.abs_gap = std::abs(theta_star - out.theta_2);

  const std::vector<AgentArrival> stage2 =
      synth_stream(world, setup.costs.N2, stream, setup.costs.N1);
  out.miss_cost_2 = threshold_miss_cost(stage2, out.theta_2, setup.costs);
  return out;
}

namespace {

SampleStats stats_of(const std::vector<double>& xs) {
  SampleStats s;
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / n;
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.se = std::sqrt(ss / (n - 1.0) / n);
  return s;
}

}  // namespace

ComparisonReport compare_actions(const TwoStageSetup& setup,
                                 std::size_t replications,
                                 std::uint64_t master_seed) {
  if (replications < 2) {
    throw std::domain_error("compare_actions: need at least 2 replications");
  }
  const ExplorationAction actions[] = {ExplorationAction::Uniform,
                                       ExplorationAction::Intermediate,
                                       ExplorationAction::NoExplore};
  std::vector<std::vector<StageOutcome>> outcomes(3);
  for (std::size_t r = 0; r < replications; ++r) {
    const RandomStream run_stream = RandomStream::derive(master_seed, r);
    for (std::size_t a = 0; a < 3; ++a) {
      outcomes[a].push_back(simulate_two_stage(actions[a], setup, run_stream));
    }
  }

  ComparisonReport report;
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> exp_c, miss1, miss2, total, gap;
    for (const StageOutcome& o : outcomes[a]) {
      exp_c.push_back(o.exp_cost);
      miss1.push_back(o.miss_cost_1);
      miss2.push_back(o.miss_cost_2);
      total.push_back(o.total());
      gap.push_back(o.abs_gap);
    }
    ActionStats st;
    st.action = actions[a];
    st.exp_cost = stats_of(exp_c);
    st.miss_cost_1 = stats_of(miss1);
    st.miss_cost_2 = stats_of(miss2);
    st.total = stats_of(total);
    st.abs_gap = stats_of(gap);
    report.actions.push_back(st);
  }

  std::vector<double> gap_diffs, cost_diffs;
  for (std::size_t r = 0; r < replications; ++r) {
    gap_diffs.push_back(outcomes[1][r].abs_gap - outcomes[0][r].abs_gap);
    cost_diffs.push_back(outcomes[0][r].total() - outcomes[1][r].total());
  }
  report.gap_diff = stats_of(gap_diffs);
  report.cost_diff = stats_of(cost_diffs);
  report.dominance_condition = intermediate_dominance_condition(
      setup.costs, setup.truth.alpha[0], setup.truth.alpha[1]);
  report.gap_ordering_uniform_le_intermediate = report.gap_diff.mean >= 0.0;
  report.cost_ordering_intermediate_le_uniform = report.cost_diff.mean >= 0.0;
  return report;
}

}  // namespace debias
