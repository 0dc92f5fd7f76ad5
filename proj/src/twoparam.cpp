#include "debias/twoparam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "debias/distribution.hpp"
#include "debias/population.hpp"
#include "debias/special.hpp"

namespace debias {

void TwoParamAccumulator::seed_prior(double mean0, double var0, double weight) {
  if (!(weight >= 2.0)) {
    throw std::domain_error("seed_prior: weight must be >= 2");
  }
  if (!(var0 >= 0.0)) {
    throw std::domain_error("seed_prior: variance must be non-negative");
  }
  n_ = static_cast<std::uint64_t>(std::llround(weight));
  mean_ = mean0;
  m2_ = var0 * (weight - 1.0);
  s2_ = var0;
}

void TwoParamAccumulator::incr_var(double x) {
  if (n_ < 1) {
    throw std::domain_error("incr_var: requires at least one absorbed sample");
  }
  if (mode_ == MomentMode::Exact) {
    const double mean_after =
        mean_ + (x - mean_) / static_cast<double>(n_ + 1);
    m2_ += (x - mean_) * (x - mean_after);
  } else {
    const double n = static_cast<double>(n_);
    s2_ = ((n - 1.0) / n) * s2_ + (x * x - mean_ * mean_) / n;
  }
}

void TwoParamAccumulator::incr_mean(double x) {
  mean_ = (static_cast<double>(n_) * mean_ + x) / static_cast<double>(n_ + 1);
  ++n_;
}

void TwoParamAccumulator::absorb(double x) {
  if (n_ >= 1) incr_var(x);
  incr_mean(x);
}

double TwoParamAccumulator::variance() const {
  if (mode_ == MomentMode::LaggedMean) return s2_;
  return n_ >= 2 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double truncated_gaussian_variance(double sigma, double half) {
  if (!(sigma > 0.0 && half > 0.0)) {
    throw std::domain_error("truncated_gaussian_variance: requires sigma, half > 0");
  }
  const double b = half / sigma;
  if (b < 0.05) {
    // The direct formula subtracts two nearly equal O(1) terms whose gap is
    // O(b^2); below b = 0.05 the series in u = b^2 is the accurate branch
    // (next omitted term is O(u^3), relative error < 1e-11 at the crossover).
    const double u = b * b;
    return half * half * (1.0 / 3.0 - 2.0 * u / 45.0 + 2.0 * u * u / 945.0);
  }
  const double mass = 2.0 * normal_cdf(b) - 1.0;
  return sigma * sigma * (1.0 - 2.0 * b * normal_pdf(b) / mass);
}

double untruncate_variance(double s2, double a, double b, double mu,
                           double sigma_init, bool* infeasible) {
  if (infeasible != nullptr) *infeasible = false;
  if (!(s2 > 0.0)) {
    throw std::domain_error("untruncate_variance: s2 must be positive");
  }
  if (!(a < mu && mu < b)) {
    throw std::domain_error("untruncate_variance: requires a < mu < b");
  }
  if (std::abs((b - mu) - (mu - a)) > 1e-9) {
    throw std::domain_error("untruncate_variance: window must be symmetric about mu");
  }
  if (!(sigma_init > 0.0)) {
    throw std::domain_error("untruncate_variance: sigma_init must be positive");
  }
  const double half = 0.5 * (b - a);
  constexpr double kLoBound = 1e-6;
  constexpr double kHiBound = 1e6;

  double lo = std::clamp(sigma_init, kLoBound, kHiBound);
  double hi = lo;
  while (lo > kLoBound && truncated_gaussian_variance(lo, half) > s2) {
    lo = std::max(kLoBound, lo * 0.5);
  }
  while (hi < kHiBound && truncated_gaussian_variance(hi, half) < s2) {
    hi = std::min(kHiBound, hi * 2.0);
  }
  if (truncated_gaussian_variance(hi, half) < s2) {
    // s2 exceeds the truncated variance of every bracketed sigma (it is at
    // least the uniform-limit variance of the window).
    if (infeasible != nullptr) *infeasible = true;
    return hi;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_gaussian_variance(mid, half) < s2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void TwoParamConfig::validate() const {
  for (int y = 0; y < 2; ++y) {
    if (!(sigma_true[y] > 0.0 && sigma_init[y] > 0.0)) {
      throw std::domain_error("TwoParamConfig: standard deviations must be positive");
    }
  }
  if (!(alpha1 > 0.0 && alpha1 < 1.0)) {
    throw std::domain_error("TwoParamConfig: alpha1 must lie in (0,1)");
  }
  if (batch_min < 2) {
    throw std::domain_error("TwoParamConfig: batch_min must be >= 2");
  }
  if (!(prior_weight >= 2.0)) {
    throw std::domain_error("TwoParamConfig: prior_weight must be >= 2");
  }
  if (!(mu_init[0] < mu_init[1]) || !(mu_true[0] < mu_true[1])) {
    throw std::domain_error("TwoParamConfig: label-0 mean must lie below label-1 mean");
  }
  schedule.validate();
}

namespace {

struct RoundPolicy {
  double theta = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  double eps = 0.0;
};

}  // namespace

TwoParamTrajectory run_two_param(const TwoParamConfig& cfg,
                                 const RandomStream& stream) {
  cfg.validate();
  std::array<double, 2> mu = cfg.mu_init;
  std::array<double, 2> sg = cfg.sigma_init;
  std::uint64_t arrivals = 0;
  std::uint64_t round = 0;

  auto make_policy = [&]() -> RoundPolicy {
    GroupEstimate ge;
    ge.dist[0] = DistEstimate::from_psi(FamilyKind::gaussian(sg[0]), mu[0], 50.0);
    ge.dist[1] = DistEstimate::from_psi(FamilyKind::gaussian(sg[1]), mu[1], 50.0);
    ge.alpha[0] = 1.0 - cfg.alpha1;
    ge.alpha[1] = cfg.alpha1;
    const double margin = 1e-3 * std::min(sg[0], sg[1]);
    if (!(mu[0] + margin < mu[1] - margin)) {
      throw std::runtime_error("run_two_param: label mean estimates collapsed");
    }
    RoundPolicy rp;
    // Keep theta strictly between the means so both symmetric windows exist.
    rp.theta = std::clamp(optimal_threshold(ge), mu[0] + margin, mu[1] - margin);
    rp.lb = 2.0 * mu[0] - rp.theta;  // window (lb, theta) centered on mu[0]
    rp.ub = 2.0 * mu[1] - rp.theta;  // window (theta, ub) centered on mu[1]
    rp.eps = next_epsilon(cfg.schedule, arrivals, 0.0, 0.0);
    return rp;
  };

  auto log_round = [&](TwoParamTrajectory& traj, const RoundPolicy& rp,
                       const std::array<bool, 2>& infeasible) {
    TwoParamRound pt;
    pt.round = round;
    pt.arrivals = arrivals;
    pt.mu_hat = mu;
    pt.sigma_hat = sg;
    pt.theta = rp.theta;
    pt.lb = rp.lb;
    pt.ub = rp.ub;
    pt.epsilon = rp.eps;
    pt.infeasible = infeasible;
    traj.rounds.push_back(pt);
  };

  TwoParamTrajectory traj;
  RoundPolicy rp = make_policy();
  log_round(traj, rp, {false, false});

  while (arrivals < cfg.horizon) {
    TwoParamAccumulator acc[2] = {TwoParamAccumulator(cfg.mode),
                                  TwoParamAccumulator(cfg.mode)};
    acc[0].seed_prior(mu[0], truncated_gaussian_variance(sg[0], rp.theta - mu[0]),
                      cfg.prior_weight);
    acc[1].seed_prior(mu[1], truncated_gaussian_variance(sg[1], mu[1] - rp.theta),
                      cfg.prior_weight);
    std::size_t in_window[2] = {0, 0};

    while ((in_window[0] < cfg.batch_min || in_window[1] < cfg.batch_min) &&
           arrivals < cfg.horizon) {
      const std::uint64_t t = arrivals++;
      const int y = stream.uniform(t, Draw::Label) < cfg.alpha1 ? 1 : 0;
      const double x = cfg.mu_true[y] +
                       cfg.sigma_true[y] *
                           normal_quantile(stream.uniform(t, Draw::Feature));
      bool admitted = x >= rp.theta;
      if (!admitted && x >= rp.lb &&
          stream.uniform(t, Draw::ExploreCoin) < rp.eps) {
        admitted = true;
      }
      if (!admitted) continue;
      if (y == 0 && x > rp.lb && x < rp.theta) {
        acc[0].absorb(x);
        ++in_window[0];
      } else if (y == 1 && x > rp.theta && x < rp.ub) {
        acc[1].absorb(x);
        ++in_window[1];
      }
    }
    if (in_window[0] < cfg.batch_min || in_window[1] < cfg.batch_min) {
      break;  // horizon exhausted mid-round; keep the last logged state
    }

    std::array<bool, 2> infeasible{false, false};
    for (int y = 0; y < 2; ++y) {
      const double half = (y == 0) ? rp.theta - mu[y] : mu[y] - rp.theta;
      const double a = mu[y] - half;
      const double b = mu[y] + half;
      sg[y] = untruncate_variance(acc[y].variance(), a, b, mu[y], sg[y],
                                  &infeasible[y]);
      mu[y] = acc[y].mean();
    }
    ++round;
    log_round(traj, rp, infeasible);
    rp = make_policy();
  }
  return traj;
}

}  // namespace debias
