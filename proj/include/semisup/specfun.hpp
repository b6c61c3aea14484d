#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

// Gaussian tail functions and quadrature against the standard normal
// measure Dz = dz exp(-z^2/2)/sqrt(2*pi). Everything here is pure and
// thread-safe; QuadratureRule is immutable after construction.

namespace semisup::specfun {

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kSqrt2Pi = 2.5066282746310005024;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// H(x) = P(Z > x). Underflows to 0 for x > ~37.6; use log_h_tail there.
double h_tail(double x);

// log H(x), finite for every finite x.
double log_h_tail(double x);

// H'(x) = -exp(-x^2/2)/sqrt(2*pi)
double h_prime(double x);

inline double log_phi(double x) { return -0.5 * x * x - kLogSqrt2Pi; }
inline double phi(double x) { return std::exp(-0.5 * x * x) * kInvSqrt2Pi; }

// H'(x)/H(x), evaluated in log space / by continued fraction so that it is
// accurate for large positive x where both pieces underflow. ~ -x as x -> inf.
double mills_ratio_neg(double x);

// Mills ratio H(x)/phi(x) for x >= 0 (continued fraction).
double mills_ratio_upper(double x);

// Inverse of the standard normal CDF.
double normal_quantile(double p);
// x such that H(x) = p, p in (0,1).
double upper_tail_quantile(double p);

// G_h(a,b) at field z: the +-h mixture weight
//   1/2 [ H((b*h - a*z)/sqrt(b^2-a^2)) + H((b*h + a*z)/sqrt(b^2-a^2)) ],
// even in z, in (0,1). (The sign of the second argument differs from the
// source formula, which is inconsistent with its own channel functions;
// see g_marginal tests.)
double g_marginal(double a, double b, double h, double z);

// G'_h(a,b) at field z:
//   1/2 [ phi((b*h - a*z)/r) - phi((b*h + a*z)/r) ],  r = sqrt(b^2-a^2).
double g_marginal_prime(double a, double b, double h, double z);

// log G_h(a,b), stable when both tails underflow.
double log_g_marginal(double a, double b, double h, double z);

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // positive, sum to 1
  int order = 0;

  // Gauss-Hermite rule mapped to the standard normal measure.
  static QuadratureRule gauss_hermite(int order = kDefaultOrder);

  static constexpr int kDefaultOrder = 201;
  static constexpr int kMaxOrder = 600;
};

// sum_i w_i f(z_i); throws IntegrationError if f returns a non-finite value.
template <typename F>
double gauss_expect(F&& f, const QuadratureRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) {
      throw IntegrationError("gauss_expect: integrand is not finite at z=" +
                             std::to_string(rule.nodes[i]));
    }
    acc += rule.weights[i] * v;
  }
  return acc;
}

// log(exp(la) + exp(lb)) without overflow
double log_add_exp(double la, double lb);
// log(exp(la) - exp(lb)) for la >= lb; -inf when equal
double log_sub_exp(double la, double lb);

}  // namespace semisup::specfun
