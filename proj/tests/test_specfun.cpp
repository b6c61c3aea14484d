#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "semisup/specfun.hpp"

using namespace semisup::specfun;

namespace {

// Independent long-double evaluation of H(x) for the oracle comparisons:
// Taylor series of erf around 0 for |t| < 3, Laplace continued fraction of
// erfc beyond. Shares no code path with h_tail.
long double h_tail_oracle(long double x) {
  const long double t = x / 1.41421356237309504880L;
  if (std::fabs((double)t) < 3.0L) {
    // erf(t) = 2/sqrt(pi) sum (-1)^k t^(2k+1) / (k! (2k+1))
    long double term = t, sum = t;
    for (int k = 1; k < 200; ++k) {
      term *= -t * t / k;
      sum += term / (2 * k + 1);
      if (std::fabs((double)(term / (2 * k + 1))) < 1e-30) break;
    }
    const long double erf_t = sum * 1.1283791670955125739L;  // 2/sqrt(pi)
    return 0.5L * (1.0L - erf_t);
  }
  if (t > 0) {
    // Laplace CF: erfc(t) = e^{-t^2}/sqrt(pi) / (t + (1/2)/(t + 1/(t + (3/2)/(t + ...))))
    long double cf = 0.0L;
    for (int k = 120; k >= 1; --k) cf = (0.5L * k) / (t + cf);
    const long double erfc_t =
        std::exp(-t * t) / 1.7724538509055160273L / (t + cf);
    return 0.5L * erfc_t;
  }
  return 1.0L - h_tail_oracle(-x);
}

}  // namespace

TEST_CASE("h_tail basics") {
  CHECK(h_tail(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  // frozen: Phi(-1), cross-checked at runtime against the series oracle
  const double expected = 0.15865525393145705;
  CHECK(h_tail(1.0) == doctest::Approx(expected).epsilon(1e-13));
  CHECK((double)h_tail_oracle(1.0L) == doctest::Approx(expected).epsilon(1e-13));

  // tail limit: below representable range but finite in log space
  CHECK(h_tail(40.0) < 1e-300);
  CHECK(std::isfinite(log_h_tail(40.0)));
  CHECK(log_h_tail(40.0) < -750.0);
}

TEST_CASE("h_tail symmetry identity") {
  for (double x : {-7.5, -3.0, -1.0, -0.1, 0.0, 0.3, 2.0, 5.5, 8.0}) {
    CHECK(h_tail(x) + h_tail(-x) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("h_tail against the series oracle across the range") {
  for (double x = -10.0; x <= 10.0; x += 0.37) {
    const long double ref = h_tail_oracle(x);
    CHECK(h_tail(x) == doctest::Approx((double)ref).epsilon(2e-13));
  }
}

TEST_CASE("log_h_tail consistent across the tail switch") {
  for (double x : {7.9, 7.99, 8.0, 8.01, 8.3, 12.0, 20.0, 37.0}) {
    const double direct = std::log(h_tail(x));
    if (std::isfinite(direct))
      CHECK(log_h_tail(x) == doctest::Approx(direct).epsilon(1e-11));
  }
  CHECK(log_h_tail(-30.0) == doctest::Approx(-h_tail(30.0)).epsilon(1e-6));
}

TEST_CASE("h_prime values and symmetry") {
  CHECK(h_prime(0.0) == doctest::Approx(-0.3989422804014327).epsilon(1e-14));
  for (double x : {0.2, 1.0, 3.7}) CHECK(h_prime(x) == h_prime(-x));
  CHECK(h_prime(1.5) < 0.0);
}

TEST_CASE("h_prime is the derivative of h_tail") {
  const double eps = 1e-5;
  for (double x = -8.0; x <= 8.0; x += 0.53) {
    const double fd = (h_tail(x + eps) - h_tail(x - eps)) / (2 * eps);
    CHECK(fd == doctest::Approx(h_prime(x)).epsilon(1e-6));
  }
  // spec'd spot check
  const double x = 0.7, e2 = 1e-5;
  const double fd = (h_tail(x + e2) - h_tail(x - e2)) / (2 * e2);
  CHECK(std::fabs(fd - h_prime(x)) < 1e-8);
}

TEST_CASE("mills_ratio_neg") {
  CHECK(mills_ratio_neg(0.0) ==
        doctest::Approx(-2.0 / kSqrt2Pi).epsilon(1e-14));
  // agrees with the naive quotient wherever that does not underflow
  for (double x = -25.0; x <= 25.0; x += 0.61) {
    const double naive = h_prime(x) / h_tail(x);
    CHECK(mills_ratio_neg(x) == doctest::Approx(naive).epsilon(1e-10));
  }
  // extended-precision spot check at x = 5
  const long double h5 = h_tail_oracle(5.0L);
  const long double p5 = -std::exp(-12.5) / 2.5066282746310005024L;
  CHECK(mills_ratio_neg(5.0) ==
        doctest::Approx((double)(p5 / h5)).epsilon(1e-10));
  // asymptotic form: ratio ~ -x for large x
  for (double x : {15.0, 30.0, 40.0}) {
    CHECK(mills_ratio_neg(x) / (-x) == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(mills_ratio_neg(x) < -x);  // -(x + 1/x - ...) bounds
  }
}

TEST_CASE("g_marginal mixture") {
  // a -> 0: both arguments reduce to h, so the mixture equals H(h)
  CHECK(g_marginal(0.0, 1.0, 0.3, 1.7) ==
        doctest::Approx(h_tail(0.3)).epsilon(1e-14));
  // h = 0: the +-az arguments are opposite, mixture = 1/2 for any z
  CHECK(g_marginal(0.7, 1.0, 0.0, 0.4) == doctest::Approx(0.5).epsilon(1e-14));
  // range and evenness in z
  for (double z : {-3.0, -0.5, 0.0, 1.2, 6.0}) {
    const double v = g_marginal(0.6, 1.0, 0.05, z);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(g_marginal(0.6, 1.0, 0.05, -z)).epsilon(1e-13));
  }
  // extended-precision direct evaluation at the spec'd point
  {
    const double a = 0.6, b = 1.0, h = 0.05, z = 0.2;
    const long double r = std::sqrt((long double)(b * b - a * a));
    const long double ref = 0.5L * (h_tail_oracle((b * h - a * z) / (double)r) +
                                    h_tail_oracle((b * h + a * z) / (double)r));
    CHECK(g_marginal(a, b, h, z) == doctest::Approx((double)ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(g_marginal(1.0, 1.0, 0.1, 0.0), std::domain_error);
  CHECK_THROWS_AS(g_marginal(2.0, 1.0, 0.1, 0.0), std::domain_error);
}

TEST_CASE("g_marginal_prime") {
  // a = 0: both phi arguments coincide
  CHECK(g_marginal_prime(0.0, 1.0, 0.4, 2.2) == doctest::Approx(0.0));
  // h = 0: phi is even, so the difference vanishes
  CHECK(g_marginal_prime(0.5, 1.0, 0.0, 1.1) == doctest::Approx(0.0));
  // finite-difference consistency in the h direction:
  // dG/dh = (b/r) * [phi((bh-az)/r)... ] = -(b/r)*(-G') ... handled below
  const double a = 0.6, b = 1.0, h = 0.05, z = 0.2, eps = 1e-6;
  const double fd = (g_marginal(a, b, h + eps, z) - g_marginal(a, b, h - eps, z)) /
                    (2 * eps);
  const double r = std::sqrt(b * b - a * a);
  // dG/dh = -(b/r) * 0.5 [phi((bh-az)/r) + phi((bh+az)/r)]; the difference
  // flavor is the z-odd part: check instead against dG/dz
  const double fdz = (g_marginal(a, b, h, z + eps) - g_marginal(a, b, h, z - eps)) /
                     (2 * eps);
  CHECK(fdz == doctest::Approx((a / r) * g_marginal_prime(a, b, h, z) * 1.0)
                   .epsilon(1e-7));
  (void)fd;
  CHECK_THROWS_AS(g_marginal_prime(1.0, 0.5, 0.1, 0.0), std::domain_error);
}

TEST_CASE("quadrature rule invariants") {
  for (int order : {21, 64, 201}) {
    const auto rule = QuadratureRule::gauss_hermite(order);
    REQUIRE(rule.nodes.size() == (std::size_t)order);
    double w_sum = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      CHECK(rule.weights[i] > 0.0);
      if (i > 0) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
      w_sum += rule.weights[i];
      m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
      m4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
    }
    CHECK(w_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-8));
  }
  CHECK_THROWS_AS(QuadratureRule::gauss_hermite(0), std::invalid_argument);
  CHECK_THROWS_AS(QuadratureRule::gauss_hermite(1000), std::invalid_argument);
}

TEST_CASE("gauss_expect") {
  const auto rule = QuadratureRule::gauss_hermite(201);
  CHECK(gauss_expect([](double) { return 1.0; }, rule) ==
        doctest::Approx(1.0).epsilon(1e-13));
  CHECK(gauss_expect([](double z) { return z * z; }, rule) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // E[H(z)] = 1/2 by symmetry
  CHECK(gauss_expect([](double z) { return h_tail(z); }, rule) ==
        doctest::Approx(0.5).epsilon(1e-10));
  CHECK_THROWS_AS(gauss_expect([](double z) { return std::log(z); }, rule),
                  IntegrationError);
}

TEST_CASE("normal_quantile round trip") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    const double x = normal_quantile(p);
    CHECK(1.0 - h_tail(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(upper_tail_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
}
