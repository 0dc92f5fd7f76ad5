#include "debias/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "debias/metrics.hpp"
#include "debias/stats.hpp"

namespace debias {

void EngineConfig::validate() const {
  fairness.validate();
  schedule.validate();
  if (batch_min == 0) {
    throw std::domain_error("EngineConfig: batch_min must be >= 1");
  }
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::domain_error("EngineConfig: eta must lie in (0,1]");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("EngineConfig: gamma must lie in [0,1]");
  }
  if (init_est.groups.empty()) {
    throw std::domain_error("EngineConfig: at least one group required");
  }
  for (const auto& g : init_est.groups) g.validate();
}

EngineState::EngineState(EngineConfig cfg, RandomStream stream)
    : cfg_(std::move(cfg)), stream_(stream) {
  cfg_.validate();
  est_ = cfg_.init_est;
  batches_.resize(est_.n_groups());
  err_prob_.resize(est_.n_groups(), 0.0);
  round_stats_.resize(est_.n_groups());
  recompute_policy();
}

void EngineState::set_policy(ThresholdPolicy p) {
  if (p.groups.size() != est_.n_groups()) {
    throw std::domain_error("set_policy: group count mismatch");
  }
  policy_ = std::move(p);
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    const auto& ge = est_.group(g);
    err_prob_[g] = ge.alpha[0] * (1.0 - cdf(ge.dist[0], policy_.groups[g].theta));
  }
}

void EngineState::recompute_policy() {
  const std::vector<double> thetas = optimal_thresholds_fair(est_, cfg_.fairness);
  policy_.groups.resize(est_.n_groups());
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    const auto& ge = est_.group(g);
    GroupPolicy gp;
    gp.theta = thetas[g];
    const BoundResult lb = lower_bound(ge.dist[0], gp.theta);
    gp.lb = std::min(lb.value, gp.theta);
    gp.lb_clamped = lb.clamped;
    if (gp.theta > ge.dist[1].omega) {
      // The threshold overshot the label-1 reference percentile (possible
      // under badly biased label-0 estimates); fall back to a degenerate
      // window above theta and flag it.
      gp.ub = std::max(gp.theta, quantile(ge.dist[1], 0.9999));
      gp.ub_clamped = true;
    } else {
      const BoundResult ub = upper_bound(ge.dist[1], gp.theta);
      gp.ub = std::max(ub.value, gp.theta);
      gp.ub_clamped = ub.clamped;
    }
    policy_.groups[g] = gp;
    err_prob_[g] = ge.alpha[0] * (1.0 - cdf(ge.dist[0], gp.theta));
  }
  if (cfg_.schedule.kind == ScheduleKind::Adaptive &&
      arrivals_ < cfg_.schedule.window) {
    // Warm-up: until the trailing error window has filled once, the
    // observed/expected error totals understate any mismatch, so explore at
    // the configured starting rate instead of the (near-zero) feedback rate.
    policy_.epsilon = std::clamp(cfg_.schedule.eps0, cfg_.schedule.eps_min,
                                 cfg_.schedule.eps_max);
  } else {
    policy_.epsilon =
        next_epsilon(cfg_.schedule, arrivals_, err_obs_sum_, err_exp_sum_);
  }
}

DecisionRecord EngineState::decide(const AgentArrival& a) const {
  const GroupPolicy& gp = policy_.groups.at(a.group);
  DecisionRecord rec;
  rec.arrival = a;
  rec.theta_at_decision = gp.theta;

  if (a.x >= gp.theta) {
    rec.decision = DecisionKind::AdmitExploit;
    rec.observed = LabelObservation::Exact;
    rec.believed_label = a.y_true;
    return rec;
  }

  bool eligible = false;
  switch (cfg_.variant.kind) {
    case VariantKind::ActiveDebiasing:
      eligible = a.x >= gp.lb;
      break;
    case VariantKind::PureExploration:
      eligible = true;
      break;
    case VariantKind::ExploitationOnly:
      eligible = false;
      break;
  }
  if (cfg_.explore_action == ExplorationAction::NoExplore) eligible = false;

  if (eligible && stream_.uniform(a.t, Draw::ExploreCoin) < policy_.epsilon) {
    rec.decision = DecisionKind::AdmitExplore;
    rec.explore_action = cfg_.explore_action;
    if (cfg_.explore_action == ExplorationAction::Intermediate && a.y_true == 0 &&
        stream_.uniform(a.t, Draw::NoiseCoin) < cfg_.gamma) {
      rec.observed = LabelObservation::Noisy;
      rec.believed_label = 1;  // the decision maker believes the reported label
    } else {
      rec.observed = LabelObservation::Exact;
      rec.believed_label = a.y_true;
    }
    return rec;
  }

  rec.decision = DecisionKind::Reject;
  rec.observed = LabelObservation::Censored;
  rec.believed_label = -1;
  return rec;
}

void EngineState::accumulate(const DecisionRecord& rec) {
  if (rec.decision == DecisionKind::Reject) return;
  batches_.at(rec.arrival.group)[static_cast<std::size_t>(rec.believed_label)]
      .push_back({rec.arrival.x, rec.arrival.t});
}

bool EngineState::ready_to_update() const {
  for (const auto& group_batches : batches_) {
    for (const auto& cell : group_batches) {
      if (cell.size() < cfg_.batch_min) return false;
    }
  }
  return true;
}

void EngineState::apply_reference(std::size_t g, int y, double target) {
  auto& dist = est_.group(g).dist[y];
  const double psi_new = solve_param_for_percentile(dist.kind, dist.tau, target);
  const double blended = (1.0 - cfg_.eta) * dist.psi + cfg_.eta * psi_new;
  dist = DistEstimate::from_psi(dist.kind, blended, dist.tau);
}

void EngineState::update() {
  switch (cfg_.variant.kind) {
    case VariantKind::ActiveDebiasing:
      if (cfg_.variant.strategy == UpdateStrategy::MirroredWindow) {
        update_mirrored();
      } else {
        update_rate_balanced();
      }
      return;
    case VariantKind::ExploitationOnly:
      update_exploitation_only();
      return;
    case VariantKind::PureExploration:
      update_pure_exploration();
      return;
  }
}

void EngineState::update_mirrored() {
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    const GroupPolicy& gp = policy_.groups[g];
    std::vector<double> window;
    window.reserve(batches_[g][0].size());
    for (const BatchItem& item : batches_[g][0]) {
      if (item.x > gp.lb && item.x < gp.theta) window.push_back(item.x);
    }
    if (window.size() >= 3) {
      apply_reference(g, 0, empirical_percentile(std::move(window), 0.5));
    }

    window.clear();
    for (const BatchItem& item : batches_[g][1]) {
      if (item.x > gp.theta && item.x < gp.ub) window.push_back(item.x);
    }
    if (window.size() >= 3) {
      apply_reference(g, 1, empirical_percentile(std::move(window), 0.5));
    }
  }
  clear_batches();
}

void EngineState::rate_balanced_refresh() {
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    const GroupPolicy& gp = policy_.groups[g];
    for (int y = 0; y < 2; ++y) {
      std::vector<double> kept;
      kept.reserve(batches_[g][y].size());
      for (const BatchItem& item : batches_[g][y]) {
        if (item.x < gp.theta ||
            stream_.uniform(item.t, Draw::RetainCoin) < policy_.epsilon) {
          kept.push_back(item.x);
        }
      }
      if (kept.size() >= 3) {
        const double tau = est_.group(g).dist[y].tau;
        apply_reference(g, y, empirical_percentile(std::move(kept), tau / 100.0));
      }
    }
  }
  clear_batches();
}

void EngineState::update_rate_balanced() { rate_balanced_refresh(); }

// The kept-set rule is the same arithmetic whether exploration was bounded or
// not; the difference lives upstream in decide().
void EngineState::update_pure_exploration() { rate_balanced_refresh(); }

void EngineState::update_exploitation_only() {
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    for (int y = 0; y < 2; ++y) {
      if (batches_[g][y].empty()) continue;
      std::vector<double> xs;
      xs.reserve(batches_[g][y].size());
      for (const BatchItem& item : batches_[g][y]) xs.push_back(item.x);
      const double tau = est_.group(g).dist[y].tau;
      apply_reference(g, y, empirical_percentile(std::move(xs), tau / 100.0));
    }
  }
  clear_batches();
}

void EngineState::clear_batches() {
  for (auto& group_batches : batches_) {
    for (auto& cell : group_batches) cell.clear();
  }
}

void EngineState::note_arrival(const DecisionRecord& rec) {
  ++arrivals_;
  const AgentArrival& a = rec.arrival;
  const GroupPolicy& gp = policy_.groups[a.group];

  RoundStats& rs = round_stats_[a.group];
  ++rs.seen;
  const bool admitted = rec.decision != DecisionKind::Reject;
  if ((admitted && a.y_true == 1) || (!admitted && a.y_true == 0)) ++rs.correct;
  if (a.x < gp.theta) {
    if (a.y_true == 0) {
      ++rs.n0_below;
    } else {
      ++rs.n1_below;
    }
  }

  const double realized = (a.x >= gp.theta && a.y_true == 0) ? 1.0 : 0.0;
  const double expected = err_prob_[a.group];
  err_window_.emplace_back(realized, expected);
  err_obs_sum_ += realized;
  err_exp_sum_ += expected;
  while (err_window_.size() > cfg_.schedule.window) {
    err_obs_sum_ -= err_window_.front().first;
    err_exp_sum_ -= err_window_.front().second;
    err_window_.pop_front();
  }
}

void EngineState::reset_round_stats() {
  for (auto& rs : round_stats_) rs = RoundStats{};
}

void EngineState::log_point(Trajectory& traj,
                            const std::vector<std::array<std::size_t, 2>>& sizes) {
  TrajectoryPoint pt;
  pt.round = round_;
  pt.arrivals = arrivals_;
  pt.epsilon = policy_.epsilon;
  pt.groups.resize(est_.n_groups());
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    const GroupPolicy& gp = policy_.groups[g];
    TrajectoryGroup& tg = pt.groups[g];
    tg.theta = gp.theta;
    tg.lb = gp.lb;
    tg.ub = gp.ub;
    for (int y = 0; y < 2; ++y) {
      const auto& dist = est_.group(g).dist[y];
      tg.cell[y].omega_hat = dist.omega;
      tg.cell[y].psi = dist.psi;
      tg.cell[y].batch_n = sizes.empty() ? 0 : sizes[g][y];
      tg.cell[y].clamped = (y == 0) ? gp.lb_clamped : gp.ub_clamped;
    }
    const RoundStats& rs = round_stats_[g];
    tg.accuracy = rs.seen == 0
                      ? std::numeric_limits<double>::quiet_NaN()
                      : static_cast<double>(rs.correct) / static_cast<double>(rs.seen);
    tg.n0_below = rs.n0_below;
    tg.n1_below = rs.n1_below;
  }
  traj.points.push_back(std::move(pt));
}

void EngineState::finish_round(Trajectory& traj) {
  std::vector<std::array<std::size_t, 2>> sizes(est_.n_groups());
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    sizes[g] = {batches_[g][0].size(), batches_[g][1].size()};
  }

  // Round metrics under the estimates/policy that generated the round's data.
  std::vector<double> expl_err(est_.n_groups(), 0.0);
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    expl_err[g] = exploration_error(est_, policy_, policy_.epsilon,
                                    round_stats_[g].n0_below,
                                    round_stats_[g].n1_below, g);
  }
  std::vector<double> thetas(est_.n_groups());
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    thetas[g] = policy_.groups[g].theta;
  }
  const double gap =
      eo_gap(std::span<const DecisionRecord>(traj.records)
                 .subspan(round_start_record_),
             thetas);

  update();
  ++round_;

  log_point(traj, sizes);
  TrajectoryPoint& pt = traj.points.back();
  pt.eo_gap = gap;
  for (std::size_t g = 0; g < est_.n_groups(); ++g) {
    pt.groups[g].exploration_error = expl_err[g];
  }

  reset_round_stats();
  round_start_record_ = traj.records.size();
  recompute_policy();
}

Trajectory EngineState::run(const std::vector<AgentArrival>& arrivals) {
  Trajectory traj;
  traj.records.reserve(arrivals.size());
  log_point(traj, {});
  for (const AgentArrival& a : arrivals) {
    const DecisionRecord rec = decide(a);
    note_arrival(rec);
    accumulate(rec);
    traj.records.push_back(rec);
    if (ready_to_update()) finish_round(traj);
  }
  return traj;
}

Trajectory run_engine(const EngineConfig& cfg,
                      const std::vector<AgentArrival>& arrivals,
                      const RandomStream& stream) {
  EngineState state(cfg, stream);
  return state.run(arrivals);
}

}  // namespace debias
