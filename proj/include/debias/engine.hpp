#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "debias/policy.hpp"
#include "debias/population.hpp"
#include "debias/random.hpp"

namespace debias {

struct AgentArrival {
  double x = 0.0;          // feature / score
  std::uint32_t group = 0; // group index
  int y_true = 0;          // ground-truth label, {0,1}
  std::uint64_t t = 0;     // arrival index (also the RNG counter for coins)
};

enum class DecisionKind { AdmitExploit, AdmitExplore, Reject };

// What an exploratory admit offers the agent. Uniform gives the full offer
// (exact label). Intermediate gives a low-stakes offer whose outcome can
// mislabel an unqualified agent as qualified with probability gamma.
// NoExplore disables exploration entirely.
enum class ExplorationAction { Uniform, Intermediate, NoExplore };

enum class LabelObservation { Censored, Exact, Noisy };

struct DecisionRecord {
  AgentArrival arrival;
  DecisionKind decision = DecisionKind::Reject;
  ExplorationAction explore_action = ExplorationAction::Uniform;
  LabelObservation observed = LabelObservation::Censored;
  int believed_label = -1;         // label entering the batches; -1 if censored
  double theta_at_decision = 0.0;  // the deciding group's threshold
};

// How estimates are refreshed from a full batch.
//   MirroredWindow: each label's reference percentile becomes the median of
//     the admitted batch restricted to its exploration window ((lb, theta)
//     for label 0, (theta, ub) for label 1).
//   RateBalanced: keep every admit below theta and thin admits above theta by
//     the round's exploration probability, then take the empirical reference
//     percentile of the kept set.
enum class UpdateStrategy { MirroredWindow, RateBalanced };

enum class VariantKind { ActiveDebiasing, ExploitationOnly, PureExploration };

struct AlgorithmVariant {
  VariantKind kind = VariantKind::ActiveDebiasing;
  UpdateStrategy strategy = UpdateStrategy::MirroredWindow;
};

struct EngineConfig {
  AlgorithmVariant variant;
  FairnessRule fairness;
  EpsilonSchedule schedule;
  std::size_t batch_min = 50;  // per-(group,label) batch size gate
  double eta = 1.0;            // blend weight for the refreshed parameter
  ExplorationAction explore_action = ExplorationAction::Uniform;
  double gamma = 0.5;          // Intermediate mislabel probability
  PopulationEstimate init_est;

  void validate() const;
};

struct BatchItem {
  double x = 0.0;
  std::uint64_t t = 0;  // arrival index, keyed into the retain coin stream
};

// One (group, label) slot of a trajectory point. `clamped` reports the bound
// clamp on this label's side of the window (lb for label 0, ub for label 1).
struct TrajectoryCell {
  double omega_hat = 0.0;
  double psi = 0.0;
  std::size_t batch_n = 0;
  bool clamped = false;
};

struct TrajectoryGroup {
  double theta = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  std::array<TrajectoryCell, 2> cell{};
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double exploration_error = 0.0;
  std::uint64_t n0_below = 0;  // true-label-0 arrivals below theta this round
  std::uint64_t n1_below = 0;  // true-label-1 arrivals below theta this round
};

// Snapshot logged at every estimate update: the policy that was in effect
// during the round that just ended, plus the post-update estimates.
struct TrajectoryPoint {
  std::uint64_t round = 0;
  std::uint64_t arrivals = 0;
  double epsilon = 0.0;
  double eo_gap = std::numeric_limits<double>::quiet_NaN();
  std::vector<TrajectoryGroup> groups;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::vector<DecisionRecord> records;
};

// Sequential decision loop: per round, recompute thresholds/bounds/epsilon
// from the current estimates, decide and batch arrivals under censored
// feedback, and refresh the estimates once every (group,label) batch reaches
// batch_min. Deterministic given the random stream.
class EngineState {
 public:
  using Batches = std::vector<std::array<std::vector<BatchItem>, 2>>;

  EngineState(EngineConfig cfg, RandomStream stream);

  DecisionRecord decide(const AgentArrival& a) const;
  void accumulate(const DecisionRecord& rec);
  bool ready_to_update() const;

  // Refresh estimates from the batches per the configured variant; every
  // update clears all batches.
  void update();
  void update_mirrored();
  void update_rate_balanced();
  void update_exploitation_only();
  void update_pure_exploration();

  Trajectory run(const std::vector<AgentArrival>& arrivals);

  const PopulationEstimate& estimates() const { return est_; }
  const ThresholdPolicy& policy() const { return policy_; }
  const Batches& batches() const { return batches_; }
  std::uint64_t rounds_completed() const { return round_; }

  // Pin an explicit policy (thresholds, bounds, epsilon) instead of deriving
  // one from the estimates; used by the staged cost harness.
  void set_policy(ThresholdPolicy p);

  // Recompute thresholds, exploration bounds, and epsilon from the current
  // estimates (with ordering guards lb <= theta <= ub).
  void recompute_policy();

 private:
  void apply_reference(std::size_t g, int y, double target);
  void rate_balanced_refresh();
  void clear_batches();
  void finish_round(Trajectory& traj);
  void log_point(Trajectory& traj,
                 const std::vector<std::array<std::size_t, 2>>& sizes);
  void note_arrival(const DecisionRecord& rec);
  void reset_round_stats();

  EngineConfig cfg_;
  RandomStream stream_;
  PopulationEstimate est_;
  ThresholdPolicy policy_;
  Batches batches_;
  std::uint64_t arrivals_ = 0;
  std::uint64_t round_ = 0;
  std::size_t round_start_record_ = 0;

  // Adaptive-epsilon bookkeeping: trailing window of realized vs expected
  // misclassification indicators above theta.
  std::deque<std::pair<double, double>> err_window_;  // (realized, expected)
  double err_obs_sum_ = 0.0;
  double err_exp_sum_ = 0.0;
  std::vector<double> err_prob_;  // per group, under current policy/estimates

  // Per-round, per-group counters.
  struct RoundStats {
    std::uint64_t seen = 0;
    std::uint64_t correct = 0;
    std::uint64_t n0_below = 0;
    std::uint64_t n1_below = 0;
  };
  std::vector<RoundStats> round_stats_;
};

Trajectory run_engine(const EngineConfig& cfg,
                      const std::vector<AgentArrival>& arrivals,
                      const RandomStream& stream);

}  // namespace debias
