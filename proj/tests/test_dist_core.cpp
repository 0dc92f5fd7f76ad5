#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "debias/distribution.hpp"
#include "debias/random.hpp"
#include "debias/special.hpp"
#include "debias/stats.hpp"

using namespace debias;

namespace {

// Adaptive Simpson quadrature, used as the independent oracle for every CDF
// value below.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

TEST_CASE("standard normal pdf/cdf against quadrature oracle") {
  CHECK(normal_pdf(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-12));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double z : {-3.0, -1.0, -0.5, 0.3, 1.0, 2.5}) {
    const double oracle =
        integrate([](double t) { return normal_pdf(t); }, -12.0, z);
    CHECK(normal_cdf(z) == doctest::Approx(oracle).epsilon(1e-10));
  }
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
}

TEST_CASE("normal quantile inverts the cdf across the interior") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  for (double p = 1e-6; p < 1.0; p += 0.0137) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
}

TEST_CASE("incomplete beta against quadrature oracle and symmetry") {
  const double pairs[][2] = {{2.0, 3.0}, {0.5, 0.5}, {1.94, 3.32}, {7.0, 1.2}};
  for (const auto& ab : pairs) {
    const double a = ab[0];
    const double b = ab[1];
    const double lb = log_beta(a, b);
    // Integrate in u with t = u^2 so the integrand stays bounded at t -> 0
    // even when a = 1/2 (the raw density is singular there).
    auto pdf_u = [&](double u) {
      if (u <= 0.0) return a == 0.5 ? 2.0 * std::exp(-lb) : 0.0;
      return 2.0 * std::exp((2.0 * a - 1.0) * std::log(u) +
                            (b - 1.0) * std::log1p(-u * u) - lb);
    };
    for (double x : {0.05, 0.3, 0.62, 0.9}) {
      const double oracle = integrate(pdf_u, 0.0, std::sqrt(x));
      CHECK(incomplete_beta(a, b, x) == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(incomplete_beta(a, b, x) ==
            doctest::Approx(1.0 - incomplete_beta(b, a, 1.0 - x)).epsilon(1e-11));
    }
  }
}

TEST_CASE("gaussian estimate: cdf/quantile/pdf coherence") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::gaussian(2.0), 7.0, 50.0);
  CHECK(est.omega == doctest::Approx(7.0).epsilon(1e-12));  // median = mean
  CHECK(cdf(est, 7.0) == doctest::Approx(0.5).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.5, 0.77, 0.999}) {
    const double x = quantile(est, p);
    CHECK(cdf(est, x) == doctest::Approx(p).epsilon(1e-10));
  }
  // pdf is the derivative of the cdf.
  const double h = 1e-6;
  for (double x : {4.0, 7.0, 9.5}) {
    const double num = (cdf(est, x + h) - cdf(est, x - h)) / (2.0 * h);
    CHECK(pdf(est, x) == doctest::Approx(num).epsilon(1e-6));
  }
}

TEST_CASE("beta estimate: quantile inverts cdf to 1e-9") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::beta(3.32), 1.94, 60.0);
  for (double p : {0.001, 0.2, 0.5, 0.83, 0.999}) {
    const double x = quantile(est, p);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    CHECK(cdf(est, x) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(quantile(est, 0.0), std::domain_error);
  CHECK_THROWS_AS(quantile(est, 1.0), std::domain_error);
}

TEST_CASE("solve_param_for_percentile is the inverse of the percentile map") {
  RandomStream rs(911);
  Sequence seq(rs);
  for (int i = 0; i < 40; ++i) {
    const double tau = 5.0 + 90.0 * seq.next();
    {
      const double target = -4.0 + 12.0 * seq.next();
      const double psi = solve_param_for_percentile(FamilyKind::gaussian(1.7), tau, target);
      const DistEstimate est = DistEstimate::from_psi(FamilyKind::gaussian(1.7), psi, tau);
      CHECK(est.omega == doctest::Approx(target).epsilon(1e-8));
    }
    {
      const double target = 0.05 + 0.9 * seq.next();
      const double psi = solve_param_for_percentile(FamilyKind::beta(2.5), tau, target);
      CHECK(psi > 0.0);
      const DistEstimate est = DistEstimate::from_psi(FamilyKind::beta(2.5), psi, tau);
      CHECK(est.omega == doctest::Approx(target).epsilon(1e-8));
    }
  }
}

TEST_CASE("from_omega anchors the requested percentile") {
  const DistEstimate g = DistEstimate::from_omega(FamilyKind::gaussian(1.0), 7.0, 60.0);
  CHECK(g.omega == doctest::Approx(7.0).epsilon(1e-10));
  CHECK(cdf(g, 7.0) == doctest::Approx(0.6).epsilon(1e-10));
  // At tau=60 the free mean sits one 60%-quantile unit below omega.
  CHECK(g.psi == doctest::Approx(7.0 - normal_quantile(0.6)).epsilon(1e-9));

  const DistEstimate b = DistEstimate::from_omega(FamilyKind::beta(3.32), 0.4, 60.0);
  CHECK(cdf(b, 0.4) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("cdf and quantile are monotone") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::beta(1.0), 2.0, 50.0);
  double prev = -1.0;
  for (double x = 0.02; x < 1.0; x += 0.02) {
    const double c = cdf(est, x);
    CHECK(c >= prev);
    prev = c;
  }
  prev = 0.0;
  for (double p = 0.02; p < 1.0; p += 0.02) {
    const double q = quantile(est, p);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("inverse-transform sampling passes a KS test at n=10000") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::gaussian(1.0), 10.0, 50.0);
  RandomStream rs(20240501);
  Sequence seq(rs);
  const std::size_t n = 10000;
  std::vector<double> xs = sample_batch(est, n, seq);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(est, xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  // 0.1% critical value of the one-sample KS statistic.
  CHECK(d < 1.949 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("truncated quantile solves the conditional-cdf equation") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::gaussian(1.3), 5.0, 50.0);
  const double a = 3.0;
  const double b = 6.0;
  for (double p : {0.1, 0.5, 0.9}) {
    const double x = truncated_quantile(est, a, b, p);
    CHECK(x > a);
    CHECK(x < b);
    const double cond = (cdf(est, x) - cdf(est, a)) / (cdf(est, b) - cdf(est, a));
    CHECK(cond == doctest::Approx(p).epsilon(1e-9));
  }
  // A window far outside the support mass throws.
  CHECK_THROWS_AS(truncated_quantile(est, 200.0, 201.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(truncated_quantile(est, 6.0, 3.0, 0.5), std::domain_error);
}

TEST_CASE("family validation") {
  CHECK_THROWS_AS(FamilyKind::gaussian(0.0), std::domain_error);
  CHECK_THROWS_AS(FamilyKind::beta(-1.0), std::domain_error);
  CHECK_THROWS_AS(DistEstimate::from_psi(FamilyKind::beta(2.0), -0.5, 50.0),
                  std::domain_error);
  CHECK_THROWS_AS(DistEstimate::from_psi(FamilyKind::gaussian(1.0), 0.0, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(DistEstimate::from_psi(FamilyKind::gaussian(1.0), 0.0, 100.0),
                  std::domain_error);
  CHECK(in_support(FamilyKind::gaussian(1.0), -100.0));
  CHECK_FALSE(in_support(FamilyKind::beta(1.0), 0.0));
  CHECK_FALSE(in_support(FamilyKind::beta(1.0), 1.0));
  CHECK(in_support(FamilyKind::beta(1.0), 0.5));
}

TEST_CASE("empirical percentile matches the interpolation rule") {
  CHECK(empirical_percentile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(empirical_percentile({3.0, 1.0, 2.0}, 0.5) == doctest::Approx(2.0));
  CHECK(empirical_percentile({5.0, -1.0, 2.0}, 0.0) == doctest::Approx(-1.0));
  CHECK(empirical_percentile({5.0, -1.0, 2.0}, 1.0) == doctest::Approx(5.0));
  CHECK(empirical_percentile({10.0, 20.0}, 0.25) == doctest::Approx(12.5));
  CHECK(empirical_percentile({7.0}, 0.9) == doctest::Approx(7.0));
  CHECK_THROWS_AS(empirical_percentile({}, 0.5), std::domain_error);
  CHECK_THROWS_AS(empirical_percentile({1.0}, 1.5), std::domain_error);
}

TEST_CASE("sampling determinism: same stream, same batch") {
  const DistEstimate est = DistEstimate::from_psi(FamilyKind::beta(2.0), 1.5, 50.0);
  RandomStream rs = RandomStream::derive(77, 3);
  Sequence s1(rs);
  Sequence s2(rs);
  const auto a = sample_batch(est, 64, s1);
  const auto b = sample_batch(est, 64, s2);
  CHECK(a == b);
  RandomStream other = RandomStream::derive(77, 4);
  Sequence s3(other);
  const auto c = sample_batch(est, 64, s3);
  CHECK(a != c);
}
