#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "debias/policy.hpp"
#include "debias/random.hpp"

namespace debias {

// Variance recurrence flavor. Exact reproduces the two-pass sample variance
// (numerically stable single-pass form). LaggedMean applies the shortcut
// recurrence s2 <- ((N-1)/N) s2 + (x^2 - mu^2)/N with the PRE-update mean and
// count, which carries an O(1/N) error; it is kept behind this switch for
// comparison and is not used by default.
enum class MomentMode { Exact, LaggedMean };

// Incremental truncated moments: running mean and variance of the samples
// absorbed from the current window, optionally seeded with a pseudo-sample
// prior so beliefs carry across window changes.
class TwoParamAccumulator {
 public:
  explicit TwoParamAccumulator(MomentMode mode = MomentMode::Exact)
      : mode_(mode) {}

  // Replace the contents with a pseudo-sample of the given weight, mean and
  // variance (weight >= 2).
  void seed_prior(double mean0, double var0, double weight);

  // Variance recurrence for the incoming sample; requires n >= 1 and must be
  // called BEFORE incr_mean for the same sample.
  void incr_var(double x);

  // Running-mean recurrence; increments the count.
  void incr_mean(double x);

  // incr_var (when applicable) followed by incr_mean.
  void absorb(double x);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;

 private:
  MomentMode mode_;
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;  // Exact: sum of squared deviations
  double s2_ = 0.0;  // LaggedMean: running variance
};

// Solve for the standard deviation sigma of an untruncated Gaussian given the
// variance s2 observed inside a window (a, b) symmetric about mu:
//   s2 = sigma^2 * (1 + (alpha phi(alpha) - beta phi(beta)) / (Phi(beta) - Phi(alpha)))
// with alpha = (a - mu)/sigma, beta = (b - mu)/sigma. The right-hand side is
// strictly increasing in sigma, so bisection from a bracket seeded at
// sigma_init is exact. Throws std::domain_error when the window is not
// symmetric about mu or s2 <= 0. When s2 exceeds every achievable truncated
// variance, *infeasible (if given) is set and the upper bracket is returned.
double untruncate_variance(double s2, double a, double b, double mu,
                           double sigma_init, bool* infeasible = nullptr);

// Forward map: variance of a N(mu, sigma) truncated to the symmetric window
// (mu - half, mu + half).
double truncated_gaussian_variance(double sigma, double half);

struct TwoParamConfig {
  std::array<double, 2> mu_true{7.0, 10.0};       // per label
  std::array<double, 2> sigma_true{1.0, 1.0};
  std::array<double, 2> mu_init{5.0, 13.0};
  std::array<double, 2> sigma_init{1.3, 1.3};
  double alpha1 = 0.5;           // label-1 fraction
  EpsilonSchedule schedule;      // fixed-decay schedules recommended here
  std::uint64_t horizon = 60000;
  std::size_t batch_min = 300;   // in-window samples per label to close a round
  double prior_weight = 1000.0;  // pseudo-sample weight carried across rounds
  MomentMode mode = MomentMode::Exact;

  void validate() const;
};

struct TwoParamRound {
  std::uint64_t round = 0;
  std::uint64_t arrivals = 0;
  std::array<double, 2> mu_hat{};
  std::array<double, 2> sigma_hat{};
  double theta = 0.0;
  double lb = 0.0;
  double ub = 0.0;
  double epsilon = 0.0;
  std::array<bool, 2> infeasible{};  // untruncation hit its upper bracket
};

struct TwoParamTrajectory {
  std::vector<TwoParamRound> rounds;  // rounds[0] is the initial state
};

// Joint mean/variance debiasing loop: per round, both labels' estimates
// define the threshold and a window symmetric about each label's mean (label
// 0 between the exploration lower bound and theta, label 1 between theta and
// the mirrored upper bound); admitted in-window samples feed the incremental
// truncated moments, the truncated mean is taken directly (symmetric window)
// and the variance is untruncated. Beliefs persist across rounds as a
// pseudo-sample prior of weight prior_weight.
TwoParamTrajectory run_two_param(const TwoParamConfig& cfg,
                                 const RandomStream& stream);

}  // namespace debias
