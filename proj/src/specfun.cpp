#include "semisup/specfun.hpp"

#include <algorithm>
#include <limits>

#include "semisup/rng.hpp"

namespace semisup::specfun {

namespace {

constexpr double kTailSwitch = 8.0;

// Continued fraction for the Mills ratio R(x) = H(x)/phi(x),
//   R(x) = 1/(x + 1/(x + 2/(x + 3/(...)))),
// evaluated with the modified Lentz algorithm. Converges fast for x >= ~6.
double mills_cf(double x) {
  const double tiny = 1e-300;
  double f = x != 0.0 ? x : tiny;
  double c = f;
  double d = 0.0;
  for (int k = 1; k <= 300; ++k) {
    const double a = static_cast<double>(k);
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 / f;
}

}  // namespace

double h_tail(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double mills_ratio_upper(double x) { return mills_cf(x); }

double log_h_tail(double x) {
  if (x > kTailSwitch) return log_phi(x) + std::log(mills_cf(x));
  if (x < -kTailSwitch) return std::log1p(-h_tail(-x));
  return std::log(h_tail(x));
}

double h_prime(double x) { return -phi(x); }

double mills_ratio_neg(double x) {
  if (x > kTailSwitch) return -1.0 / mills_cf(x);
  return h_prime(x) / h_tail(x);
}

double log_add_exp(double la, double lb) {
  if (la < lb) std::swap(la, lb);
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  return la + std::log1p(std::exp(lb - la));
}

double log_sub_exp(double la, double lb) {
  if (lb >= la) return -std::numeric_limits<double>::infinity();
  return la + std::log1p(-std::exp(lb - la));
}

namespace {

// Acklam's rational approximation to the normal quantile, then one Halley
// step against erfc to reach full double precision.
double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("normal_quantile: p must be in (0,1)");
  double x = normal_quantile_approx(p);
  for (int it = 0; it < 2; ++it) {
    const double err = (1.0 - h_tail(x)) - p;  // Phi(x) - p
    const double pdf = phi(x);
    if (pdf <= 0.0) break;
    const double u = err / pdf;
    x -= u / (1.0 + 0.5 * x * u);  // Halley
  }
  return x;
}

double upper_tail_quantile(double p) { return -normal_quantile(p); }

double g_marginal(double a, double b, double h, double z) {
  if (!(a >= 0.0 && a < b))
    throw std::domain_error("g_marginal: requires 0 <= a < b");
  const double r = std::sqrt((b - a) * (b + a));
  return 0.5 * (h_tail((b * h - a * z) / r) + h_tail((b * h + a * z) / r));
}

double g_marginal_prime(double a, double b, double h, double z) {
  if (!(a >= 0.0 && a < b))
    throw std::domain_error("g_marginal_prime: requires 0 <= a < b");
  const double r = std::sqrt((b - a) * (b + a));
  return 0.5 * (phi((b * h - a * z) / r) - phi((b * h + a * z) / r));
}

double log_g_marginal(double a, double b, double h, double z) {
  if (!(a >= 0.0 && a < b))
    throw std::domain_error("log_g_marginal: requires 0 <= a < b");
  const double r = std::sqrt((b - a) * (b + a));
  return std::log(0.5) + log_add_exp(log_h_tail((b * h - a * z) / r),
                                     log_h_tail((b * h + a * z) / r));
}

namespace {

// Orthonormal physicists' Hermite values (p_n, p_{n-1}) at t.
// p_0 = pi^{-1/4}, p_{k+1} = t sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}.
void hermite_pair(int n, double t, double& pn, double& pnm1) {
  double pkm1 = 0.0;
  double pk = 0.7511255444649425;  // pi^{-1/4}
  for (int k = 0; k < n; ++k) {
    const double pkp1 = t * std::sqrt(2.0 / (k + 1)) * pk -
                        std::sqrt(static_cast<double>(k) / (k + 1)) * pkm1;
    pkm1 = pk;
    pk = pkp1;
  }
  pn = pk;
  pnm1 = pkm1;
}

// Number of eigenvalues of the Hermite Jacobi matrix below x
// (Sturm pivot count; a_k = 0, b_k^2 = k/2). Near-zero pivots are forced to
// -pivmin so the count stays monotone through pivot breakdowns.
int eigen_count_below(int n, double x) {
  constexpr double pivmin = 1e-30;
  int count = 0;
  double d = -x;
  if (std::fabs(d) < pivmin) d = -pivmin;
  if (d < 0.0) ++count;
  for (int k = 2; k <= n; ++k) {
    const double bsq = 0.5 * (k - 1);
    d = -x - bsq / d;
    if (std::fabs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1 || order > kMaxOrder)
    throw std::invalid_argument("gauss_hermite: order out of range");
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  const double bound = std::sqrt(2.0 * order + 1.0) + 2.0;
  for (int i = 0; i < order; ++i) {
    // isolate the i-th eigenvalue by bisection on the Sturm count
    double lo = -bound, hi = bound;
    for (int it = 0; it < 70; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (eigen_count_below(order, mid) <= i)
        lo = mid;
      else
        hi = mid;
    }
    double t = 0.5 * (lo + hi);
    // Newton polish on the orthonormal recurrence, kept inside the bracket;
    // p_n'(t) = sqrt(2n) p_{n-1}
    for (int it = 0; it < 60; ++it) {
      double pn, pnm1;
      hermite_pair(order, t, pn, pnm1);
      const double deriv = std::sqrt(2.0 * order) * pnm1;
      if (deriv == 0.0) break;
      const double step = pn / deriv;
      const double t_new = t - step;
      if (!(t_new >= lo && t_new <= hi)) break;
      t = t_new;
      if (std::fabs(step) < 1e-16 * (1.0 + std::fabs(t))) break;
    }
    double pn, pnm1;
    hermite_pair(order, t, pn, pnm1);
    const double w_phys = 1.0 / (order * pnm1 * pnm1);
    rule.nodes[i] = kSqrt2 * t;           // physicists' t -> standard normal z
    rule.weights[i] = w_phys / 1.7724538509055160273;  // / sqrt(pi)
  }
  // bisection indexing already yields ascending order; enforce anyway
  std::vector<std::size_t> idx(order);
  for (int i = 0; i < order; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return rule.nodes[a] < rule.nodes[b];
  });
  QuadratureRule sorted;
  sorted.order = order;
  sorted.nodes.reserve(order);
  sorted.weights.reserve(order);
  for (auto j : idx) {
    sorted.nodes.push_back(rule.nodes[j]);
    sorted.weights.push_back(rule.weights[j]);
  }
  return sorted;
}

}  // namespace semisup::specfun

namespace semisup {

double Rng::normal() { return specfun::normal_quantile(uniform()); }

}  // namespace semisup
