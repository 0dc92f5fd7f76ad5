#pragma once

#include <cstdint>
#include <vector>

#include "debias/engine.hpp"
#include "debias/population.hpp"
#include "debias/random.hpp"

namespace debias {

// Cost levels of the staged screening problem. The "h" levels price the full
// (high-stakes) offer: L1h per rejected qualified agent, L2h per fully
// accepted unqualified agent. The "l" levels price the intermediate
// (low-stakes) offer: L1l per qualified agent given only the intermediate
// offer, L2l per unqualified agent who receives it and fails. gamma is the
// probability that an unqualified agent fulfills the intermediate
// requirements (and is mislabeled qualified).
struct MdpCostParams {
  double L1h = 1.0;
  double L1l = 0.5;
  double L2h = 10.0;
  double L2l = 1.0;
  double gamma = 0.5;
  std::uint64_t N1 = 1000;
  std::uint64_t N2 = 1000;
  double eps = 1.0;  // stage-1 exploration probability

  void validate() const;
};

struct StageOutcome {
  ExplorationAction action = ExplorationAction::Uniform;
  double exp_cost = 0.0;
  double miss_cost_1 = 0.0;
  double miss_cost_2 = 0.0;
  double theta_2 = 0.0;
  double abs_gap = 0.0;  // |theta_star - theta_2|

  double total() const { return exp_cost + miss_cost_1 + miss_cost_2; }
};

// Expected misclassification cost of running threshold theta_hat on n_t
// arrivals from the TRUE population:
//   n_t * (L1h * alpha1 * F1(theta_hat) + L2h * alpha0 * (1 - F0(theta_hat))).
double expected_miss_cost(double theta_hat, const GroupEstimate& truth,
                          const MdpCostParams& costs, double n_t);

// Expected exploration cost over the window (lb, theta_hat):
//   Uniform:      n_t * (-L1h * eps * alpha1 * dF1 + L2h * eps * alpha0 * dF0)
//   Intermediate: n_t * ((-L1h + L1l) * eps * alpha1 * dF1
//                        + L2l * (1 - gamma) * eps * alpha0 * dF0)
//   NoExplore:    0
// where dFy = Fy(theta_hat) - Fy(lb) on the true distributions. Throws
// std::domain_error when lb > theta_hat.
double expected_exp_cost(ExplorationAction action, double theta_hat, double lb,
                         const MdpCostParams& costs, const GroupEstimate& truth,
                         double n_t);

// Closed-form sufficient condition under which full noisy (intermediate)
// exploration costs no more in expectation than full accurate exploration:
//   (1 - N2/N1) * (L2h * alpha0 - L1h * alpha1) >= L2l * (1 - gamma) * alpha0.
bool intermediate_dominance_condition(const MdpCostParams& costs, double alpha0,
                                      double alpha1);

struct TwoStageSetup {
  GroupEstimate init_est;  // biased initial estimates (single group)
  GroupEstimate truth;     // true population (single group)
  MdpCostParams costs;
  // Estimate-refresh rule applied once after stage 1.
  UpdateStrategy stage_update = UpdateStrategy::RateBalanced;
};

// Stage 1: N1 arrivals decided with the stage-1 threshold/bounds computed
// from the initial estimates and the chosen exploration action; realized
// costs are tallied at the stated levels (threshold misclassifications at the
// high levels, exploration charges/credits per explored admit). The estimates
// are then refreshed once from the stage-1 batches (believed labels; noisy
// intermediate outcomes included) unless the action is NoExplore, which
// leaves them unchanged. Stage 2: N2 arrivals scored by the refreshed
// threshold with no exploration.
StageOutcome simulate_two_stage(ExplorationAction action,
                                const TwoStageSetup& setup,
                                const RandomStream& stream);

struct SampleStats {
  double mean = 0.0;
  double se = 0.0;
};

struct ActionStats {
  ExplorationAction action = ExplorationAction::Uniform;
  SampleStats exp_cost;
  SampleStats miss_cost_1;
  SampleStats miss_cost_2;
  SampleStats total;
  SampleStats abs_gap;
};

struct ComparisonReport {
  std::vector<ActionStats> actions;  // Uniform, Intermediate, NoExplore
  bool dominance_condition = false;
  // Sample-mean orderings (paired replications, common random numbers).
  bool gap_ordering_uniform_le_intermediate = false;
  bool cost_ordering_intermediate_le_uniform = false;
  SampleStats gap_diff;   // abs_gap(Intermediate) - abs_gap(Uniform)
  SampleStats cost_diff;  // total(Uniform) - total(Intermediate)
};

// Replicated comparison of the three actions under common random numbers:
// replication r of every action runs on the stream derived from
// (master_seed, r), so all three see identical arrivals and explore coins.
ComparisonReport compare_actions(const TwoStageSetup& setup,
                                 std::size_t replications,
                                 std::uint64_t master_seed);

}  // namespace debias
