#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "debias/policy.hpp"
#include "debias/population.hpp"
#include "debias/random.hpp"
#include "debias/special.hpp"

using namespace debias;

namespace {

GroupEstimate gaussian_group(double mu0, double mu1, double sigma,
                             double alpha1, double tau0 = 60.0,
                             double tau1 = 50.0) {
  GroupEstimate g;
  g.dist[0] = DistEstimate::from_psi(FamilyKind::gaussian(sigma), mu0, tau0);
  g.dist[1] = DistEstimate::from_psi(FamilyKind::gaussian(sigma), mu1, tau1);
  g.alpha[0] = 1.0 - alpha1;
  g.alpha[1] = alpha1;
  return g;
}

// Independent dense-grid minimizer used as the optimizer oracle.
double grid_oracle(const GroupEstimate& g, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double th = lo + (hi - lo) * i / (points - 1);
    best = std::min(best, misclassification_rate(g, th));
  }
  return best;
}

void merged_span(const GroupEstimate& g, double& lo, double& hi) {
  lo = std::min({lo, quantile(g.dist[0], 0.001), quantile(g.dist[1], 0.001)});
  hi = std::max({hi, quantile(g.dist[0], 0.999), quantile(g.dist[1], 0.999)});
}

double tpr(const GroupEstimate& g, double theta) {
  return 1.0 - cdf(g.dist[1], theta);
}

}  // namespace

TEST_CASE("misclassification rate formula") {
  const GroupEstimate g = gaussian_group(7.0, 10.0, 1.0, 0.5);
  const double j = misclassification_rate(g, 8.5);
  CHECK(j == doctest::Approx(normal_cdf(-1.5)).epsilon(1e-12));
}

TEST_CASE("optimal threshold: symmetric equal-variance case is the midpoint") {
  const GroupEstimate g = gaussian_group(7.0, 10.0, 1.0, 0.5);
  CHECK(optimal_threshold(g) == doctest::Approx(8.5).epsilon(1e-7));
}

TEST_CASE("optimal threshold: unequal label mix shifts by log-odds over gap") {
  // alpha1 = 0.3: stationarity of 0.3*phi(th-10) = 0.7*phi(th-7) gives
  // th = 8.5 + ln(7/3)/3.
  const GroupEstimate g = gaussian_group(7.0, 10.0, 1.0, 0.3);
  const double expected = 8.5 + std::log(7.0 / 3.0) / 3.0;
  CHECK(optimal_threshold(g) == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("optimal threshold: degenerate label mix throws") {
  GroupEstimate g = gaussian_group(7.0, 10.0, 1.0, 0.5);
  g.alpha[0] = 0.0;
  g.alpha[1] = 1.0;
  CHECK_THROWS_AS(optimal_threshold(g), std::domain_error);
  g.alpha[0] = 1.0;
  g.alpha[1] = 0.0;
  CHECK_THROWS_AS(optimal_threshold(g), std::domain_error);
}

TEST_CASE("optimal threshold matches a 20001-point grid on 50 random instances") {
  RandomStream rs(4242);
  Sequence seq(rs);
  for (int inst = 0; inst < 50; ++inst) {
    GroupEstimate g;
    const bool use_beta = seq.next() < 0.4;
    const double alpha1 = 0.1 + 0.8 * seq.next();
    if (use_beta) {
      const double b0 = 0.8 + 3.0 * seq.next();
      const double b1 = 0.8 + 3.0 * seq.next();
      g.dist[0] = DistEstimate::from_psi(FamilyKind::beta(b0),
                                         0.5 + 2.5 * seq.next(), 60.0);
      g.dist[1] = DistEstimate::from_psi(FamilyKind::beta(b1),
                                         1.0 + 4.0 * seq.next(), 50.0);
    } else {
      const double s = 0.5 + 2.0 * seq.next();
      const double mu0 = 4.0 + 4.0 * seq.next();
      g.dist[0] = DistEstimate::from_psi(FamilyKind::gaussian(s), mu0, 60.0);
      g.dist[1] =
          DistEstimate::from_psi(FamilyKind::gaussian(s), mu0 + 0.5 + 4.0 * seq.next(), 50.0);
    }
    g.alpha[0] = 1.0 - alpha1;
    g.alpha[1] = alpha1;

    const double theta = optimal_threshold(g);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    merged_span(g, lo, hi);
    const double oracle = grid_oracle(g, lo, hi, 20001);
    CHECK(misclassification_rate(g, theta) <= oracle + 1e-7);
  }
}

TEST_CASE("same decision rule: one shared threshold, summed-objective optimal") {
  PopulationEstimate pop;
  pop.groups.push_back(gaussian_group(7.0, 10.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(6.0, 11.0, 1.5, 0.3));
  FairnessRule rule{FairnessKind::SameDecisionRule, 0.0};
  const std::vector<double> th = optimal_thresholds_fair(pop, rule);
  REQUIRE(th.size() == 2);
  CHECK(th[0] == th[1]);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& g : pop.groups) merged_span(g, lo, hi);
  double oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20001; ++i) {
    const double t = lo + (hi - lo) * i / 20000.0;
    oracle = std::min(oracle, misclassification_rate(pop.groups[0], t) +
                                  misclassification_rate(pop.groups[1], t));
  }
  const double ours = misclassification_rate(pop.groups[0], th[0]) +
                      misclassification_rate(pop.groups[1], th[0]);
  CHECK(ours <= oracle + 1e-7);
}

TEST_CASE("equal opportunity, exact parity: TPRs match to 1e-6 and optimum") {
  PopulationEstimate pop;
  pop.groups.push_back(gaussian_group(7.0, 10.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(6.5, 12.0, 1.2, 0.4));
  FairnessRule rule{FairnessKind::EqualOpportunity, 0.0};
  const std::vector<double> th = optimal_thresholds_fair(pop, rule);
  REQUIRE(th.size() == 2);
  CHECK(std::abs(tpr(pop.groups[0], th[0]) - tpr(pop.groups[1], th[1])) <= 1e-6);

  double oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20001; ++i) {
    const double q = 0.0005 + (0.9995 - 0.0005) * i / 20000.0;
    double s = 0.0;
    for (const auto& g : pop.groups) {
      s += misclassification_rate(g, quantile(g.dist[1], 1.0 - q));
    }
    oracle = std::min(oracle, s);
  }
  const double ours = misclassification_rate(pop.groups[0], th[0]) +
                      misclassification_rate(pop.groups[1], th[1]);
  CHECK(ours <= oracle + 1e-7);
}

TEST_CASE("equal opportunity with slack: wide band reduces to the free optima") {
  PopulationEstimate pop;
  pop.groups.push_back(gaussian_group(7.0, 10.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(7.0, 12.0, 1.0, 0.5));
  const std::vector<double> free_th =
      optimal_thresholds_fair(pop, {FairnessKind::Unconstrained, 0.0});
  const std::vector<double> th =
      optimal_thresholds_fair(pop, {FairnessKind::EqualOpportunity, 0.2});
  REQUIRE(th.size() == 2);
  CHECK(th[0] == doctest::Approx(free_th[0]).epsilon(1e-5));
  CHECK(th[1] == doctest::Approx(free_th[1]).epsilon(1e-5));
}

TEST_CASE("equal opportunity with slack: binding band lands on the edge") {
  PopulationEstimate pop;
  pop.groups.push_back(gaussian_group(7.0, 10.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(7.0, 12.0, 1.0, 0.5));
  const double slack = 0.02;
  // Free TPRs differ by ~0.06 here, so the band binds.
  const std::vector<double> th =
      optimal_thresholds_fair(pop, {FairnessKind::EqualOpportunity, slack});
  const double gap = std::abs(tpr(pop.groups[0], th[0]) - tpr(pop.groups[1], th[1]));
  CHECK(gap <= slack + 1e-9);
  CHECK(gap >= slack - 1e-4);

  // Oracle: scan q_a densely; for fixed q_a the separable objective makes the
  // banded-optimal q_b the free optimum clamped into [q_a - s, q_a + s].
  double qb_free = 0.0;
  double best_free = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 40001; ++i) {
    const double q = 0.0005 + (0.9995 - 0.0005) * i / 40000.0;
    const double v = misclassification_rate(
        pop.groups[1], quantile(pop.groups[1].dist[1], 1.0 - q));
    if (v < best_free) {
      best_free = v;
      qb_free = q;
    }
  }
  double oracle = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 40001; ++i) {
    const double qa = 0.0005 + (0.9995 - 0.0005) * i / 40000.0;
    const double qb =
        std::clamp(qb_free, std::max(0.0005, qa - slack), std::min(0.9995, qa + slack));
    const double v =
        misclassification_rate(pop.groups[0], quantile(pop.groups[0].dist[1], 1.0 - qa)) +
        misclassification_rate(pop.groups[1], quantile(pop.groups[1].dist[1], 1.0 - qb));
    oracle = std::min(oracle, v);
  }
  const double ours = misclassification_rate(pop.groups[0], th[0]) +
                      misclassification_rate(pop.groups[1], th[1]);
  CHECK(ours <= oracle + 1e-7);
}

TEST_CASE("equal opportunity slack requires exactly two groups") {
  PopulationEstimate pop;
  pop.groups.push_back(gaussian_group(7.0, 10.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(7.0, 11.0, 1.0, 0.5));
  pop.groups.push_back(gaussian_group(7.0, 12.0, 1.0, 0.5));
  CHECK_THROWS_AS(
      optimal_thresholds_fair(pop, {FairnessKind::EqualOpportunity, 0.1}),
      std::invalid_argument);
  // Exact parity generalizes to any group count.
  const auto th =
      optimal_thresholds_fair(pop, {FairnessKind::EqualOpportunity, 0.0});
  CHECK(th.size() == 3);
  CHECK(std::abs(tpr(pop.groups[0], th[0]) - tpr(pop.groups[2], th[2])) <= 1e-6);
}

TEST_CASE("lower bound: symmetric gaussian case is the mirrored point") {
  const DistEstimate est0 = DistEstimate::from_psi(FamilyKind::gaussian(1.0), 7.0, 50.0);
  for (double theta = 4.5; theta <= 9.5; theta += 0.25) {
    const BoundResult r = lower_bound(est0, theta);
    CHECK_FALSE(r.clamped);
    CHECK(r.value == doctest::Approx(2.0 * 7.0 - theta).epsilon(1e-9));
  }
}

TEST_CASE("upper bound: symmetric gaussian case mirrors below the reference") {
  const DistEstimate est1 = DistEstimate::from_psi(FamilyKind::gaussian(1.0), 10.0, 50.0);
  for (double theta = 7.0; theta <= 10.0; theta += 0.25) {
    const BoundResult r = upper_bound(est1, theta);
    CHECK_FALSE(r.clamped);
    CHECK(r.value == doctest::Approx(2.0 * 10.0 - theta).epsilon(1e-9));
  }
  CHECK_THROWS_AS(upper_bound(est1, 10.5), std::domain_error);
}

TEST_CASE("bounds satisfy the cdf-balance identity on a beta grid") {
  const DistEstimate est0 = DistEstimate::from_omega(FamilyKind::beta(3.0), 0.35, 60.0);
  for (double p = 0.62; p <= 0.9; p += 0.04) {
    const double theta = quantile(est0, p);
    const BoundResult r = lower_bound(est0, theta);
    REQUIRE_FALSE(r.clamped);
    const double left = cdf(est0, est0.omega) - cdf(est0, r.value);
    const double right = cdf(est0, theta) - cdf(est0, est0.omega);
    CHECK(left == doctest::Approx(right).epsilon(1e-9));
    CHECK(r.value < est0.omega);
  }
  const DistEstimate est1 = DistEstimate::from_omega(FamilyKind::beta(2.0), 0.6, 50.0);
  for (double p = 0.2; p <= 0.48; p += 0.04) {
    const double theta = quantile(est1, p);
    const BoundResult r = upper_bound(est1, theta);
    REQUIRE_FALSE(r.clamped);
    const double left = cdf(est1, est1.omega) - cdf(est1, theta);
    const double right = cdf(est1, r.value) - cdf(est1, est1.omega);
    CHECK(left == doctest::Approx(right).epsilon(1e-9));
    CHECK(r.value > est1.omega);
  }
}

TEST_CASE("lower bound clamps to the 0.0001 quantile when the equation exits") {
  // tau=30: F(omega)=0.3, so any theta at/above the 60% quantile drives the
  // defining argument to zero or below.
  const DistEstimate est0 = DistEstimate::from_omega(FamilyKind::gaussian(1.0), 7.0, 30.0);
  const double theta = quantile(est0, 0.75);
  const BoundResult r = lower_bound(est0, theta);
  CHECK(r.clamped);
  CHECK(r.value == doctest::Approx(quantile(est0, 0.0001)).epsilon(1e-12));
}

TEST_CASE("fixed-decay epsilon schedule steps down and floors at eps_min") {
  EpsilonSchedule s;
  s.kind = ScheduleKind::FixedDecay;
  s.eps0 = 0.5;
  s.step = 0.1;
  s.every = 10000;
  CHECK(next_epsilon(s, 0, 0, 0) == doctest::Approx(0.5));
  CHECK(next_epsilon(s, 9999, 0, 0) == doctest::Approx(0.5));
  CHECK(next_epsilon(s, 10000, 0, 0) == doctest::Approx(0.4));
  CHECK(next_epsilon(s, 35000, 0, 0) == doctest::Approx(0.2));
  CHECK(next_epsilon(s, 500000, 0, 0) == doctest::Approx(s.eps_min));
}

TEST_CASE("adaptive epsilon tracks the realized-vs-expected error gap") {
  EpsilonSchedule s;
  s.kind = ScheduleKind::Adaptive;
  s.gain = 1.0;
  CHECK(next_epsilon(s, 123, 5.0, 5.0) == doctest::Approx(s.eps_min));
  CHECK(next_epsilon(s, 123, 10.0, 5.0) == doctest::Approx(1.0));  // |10-5|/5
  CHECK(next_epsilon(s, 123, 6.0, 5.0) == doctest::Approx(0.2));
  // err_exp below 1 uses the floor of 1 in the denominator.
  CHECK(next_epsilon(s, 123, 0.3, 0.1) == doctest::Approx(0.2));
  s.gain = 0.5;
  CHECK(next_epsilon(s, 123, 6.0, 5.0) == doctest::Approx(0.1));
}

TEST_CASE("epsilon never leaves [eps_min, eps_max]") {
  RandomStream rs(99);
  Sequence seq(rs);
  for (int i = 0; i < 200; ++i) {
    EpsilonSchedule s;
    s.kind = (seq.next() < 0.5) ? ScheduleKind::FixedDecay : ScheduleKind::Adaptive;
    s.eps0 = 0.05 + 0.9 * seq.next();
    s.eps_min = 0.01;
    s.eps_max = std::max(s.eps0, 0.2 + 0.8 * seq.next());
    s.step = 0.2 * seq.next();
    s.gain = 0.1 + 3.0 * seq.next();
    const double eps = next_epsilon(s, static_cast<std::uint64_t>(seq.next() * 1e6),
                                    200.0 * seq.next(), 200.0 * seq.next());
    CHECK(eps >= s.eps_min);
    CHECK(eps <= s.eps_max);
  }
}

TEST_CASE("schedule and fairness validation") {
  EpsilonSchedule s;
  s.eps_min = 0.0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s = EpsilonSchedule{};
  s.eps0 = 2.0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s = EpsilonSchedule{};
  s.every = 0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  s = EpsilonSchedule{};
  s.window = 0;
  CHECK_THROWS_AS(s.validate(), std::domain_error);
  FairnessRule r{FairnessKind::EqualOpportunity, -0.1};
  CHECK_THROWS_AS(r.validate(), std::domain_error);
}
