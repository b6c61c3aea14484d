#include "semisup/replica.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace semisup::replica {

using specfun::h_tail;
using specfun::log_g_marginal;
using specfun::log_h_tail;
using specfun::log_phi;
using specfun::phi;

namespace {

constexpr double kQMax = 1.0 - 1e-14;
constexpr double kZMax = 10.0;

// 16-point Gauss-Legendre on [-1,1], nodes by Newton on P_16.
struct Gl16 {
  std::array<double, 16> x{}, w{};
  Gl16() {
    constexpr int n = 16;
    for (int i = 0; i < n / 2; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pn = 0.0, pnm1 = 0.0;
      for (int it = 0; it < 100; ++it) {
        pnm1 = 1.0;
        pn = t;
        for (int k = 1; k < n; ++k) {
          const double pkp1 = ((2 * k + 1) * t * pn - k * pnm1) / (k + 1);
          pnm1 = pn;
          pn = pkp1;
        }
        const double deriv = n * (t * pn - pnm1) / (t * t - 1.0);
        const double step = pn / deriv;
        t -= step;
        if (std::fabs(step) < 1e-16) break;
      }
      const double deriv = n * (t * pn - pnm1) / (t * t - 1.0);
      x[i] = -t;
      x[n - 1 - i] = t;
      w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * deriv * deriv);
    }
  }
};

const Gl16& gl16() {
  static const Gl16 rule;
  return rule;
}

struct TransitionLocus {
  double center;
  double scale;  // local width of the integrand's transition layer
};

// Composite Gauss-Legendre nodes in z for one (q, margins) configuration.
// Bulk panels cover [-kZMax, kZMax]; around each transition locus the panels
// shrink geometrically down to ~scale/3 so the layer is resolved even when
// its width is far below the bulk panel size. Node weights fold in the
// standard normal density.
struct SaddleNodes {
  std::vector<double> z, w;
};

SaddleNodes build_saddle_nodes(const std::vector<TransitionLocus>& loci,
                               int bulk_panels) {
  std::vector<double> edges;
  edges.reserve(256);
  for (int i = 0; i <= bulk_panels; ++i)
    edges.push_back(-kZMax + 2.0 * kZMax * i / bulk_panels);
  for (const auto& locus : loci) {
    // bulk panels resolve layers wider than their own size; anything finer
    // needs the geometric window (the nearest complex zeros of H sit at
    // distance ~2*scale, which caps the usable panel width near the locus)
    if (locus.scale >= 0.5) continue;
    const double half = 45.0 * locus.scale;
    for (int k = 0; k <= 8; ++k) {
      const double off = half / (1 << k);
      for (double sgn : {-1.0, 1.0}) {
        const double e = locus.center + sgn * off;
        if (e > -kZMax && e < kZMax) edges.push_back(e);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const auto& gl = gl16();
  SaddleNodes nodes;
  nodes.z.reserve((edges.size() - 1) * 16);
  nodes.w.reserve((edges.size() - 1) * 16);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    if (r < 1e-300) continue;
    for (int i = 0; i < 16; ++i) {
      const double zi = c + r * gl.x[i];
      nodes.z.push_back(zi);
      nodes.w.push_back(r * gl.w[i] * phi(zi));
    }
  }
  return nodes;
}

int bulk_panels_for(const specfun::QuadratureRule& rule) {
  return std::clamp(rule.order / 5, 24, 120);
}

std::vector<TransitionLocus> loci_for(double q, double m, double g, double h) {
  std::vector<TransitionLocus> loci;
  const double sq = std::sqrt(q);
  const double v = 1.0 - q;
  if (sq > 0.0) {
    const double scale = std::sqrt(v) / sq;
    loci.push_back({h / sq, scale});
    loci.push_back({-h / sq, scale});
  }
  if (m > 0.0 && m < q) {  // teacher layer, distinct from the student one
    const double s = std::sqrt(q - m * m);
    const double scale = s / m;
    loci.push_back({sq * g / m, scale});
    loci.push_back({-sq * g / m, scale});
  }
  return loci;
}

// exp with underflow flushed to zero (the flushed terms are genuinely
// negligible: they only arise when the integrand factor is < 1e-320)
double exp_flush(double v) { return v < -745.0 ? 0.0 : std::exp(v); }

struct TermSums {
  double lab_m = 0.0, lab_q = 0.0, lab_f = 0.0;
  double unl_m = 0.0, unl_q = 0.0, unl_f = 0.0;
};

// One pass over the composite nodes accumulating every data-term integral.
// bayes_reduced selects the analytic m = q simplification of the teacher
// weight (the general formula is 0/0 there as q -> 0).
TermSums accumulate_terms(double q, double m, double g, double h,
                          const SaddleNodes& nodes, bool bayes_reduced) {
  const double v = 1.0 - q;
  const double sq = std::sqrt(q);
  const double sv = std::sqrt(v);
  const double s = bayes_reduced ? 0.0 : std::sqrt(q - m * m);

  TermSums sums;
  for (std::size_t i = 0; i < nodes.z.size(); ++i) {
    const double z = nodes.z[i];
    const double wt = nodes.w[i];

    // student fields: M transitions at z = +h/sq, P at z = -h/sq
    const double M = (h - sq * z) / sv;
    const double P = (h + sq * z) / sv;
    const double lM = log_h_tail(M);
    const double lP = log_h_tail(P);
    const double lphiM = log_phi(M);
    const double lphiP = log_phi(P);

    // teacher fields
    double TM, TP;  // (sqrt(q) g -+ m z)/s
    if (bayes_reduced) {
      TM = (g - sq * z) / sv;
      TP = (g + sq * z) / sv;
    } else {
      TM = (sq * g - m * z) / s;
      TP = (sq * g + m * z) / s;
    }

    // labeled: weight H(T) against the M-oriented student field
    const double ratio1 = exp_flush(lphiM - lM);  // phi/H, ~|M| for large M
    sums.lab_m += wt * phi(TM) * ratio1;
    sums.lab_q += wt * h_tail(TM) * ratio1 * ratio1;
    sums.lab_f += wt * h_tail(TM) * lM;

    // unlabeled: +-h mixture
    const double lG = std::log(0.5) + specfun::log_add_exp(lP, lM);
    const double hi = std::max(lphiM, lphiP);
    const double lo = std::min(lphiM, lphiP);
    const double labs_gp = std::log(0.5) + specfun::log_sub_exp(hi, lo);
    const double sgn = (lphiM >= lphiP) ? 1.0 : -1.0;
    const double rg = sgn * exp_flush(labs_gp - lG);  // G'_h/G_h
    const double gg = 0.5 * (h_tail(TP) + h_tail(TM));
    const double ggp = 0.5 * (phi(TM) - phi(TP));
    sums.unl_m += wt * ggp * rg;
    sums.unl_q += wt * gg * rg * rg;
    sums.unl_f += wt * gg * lG;
  }
  return sums;
}

struct SaddleTerms {
  double jm = 0.0, jq = 0.0, data_free_energy = 0.0;
};

SaddleTerms evaluate_terms(double q, double m, const LearningSetup& setup,
                           const specfun::QuadratureRule& rule,
                           bool bayes_reduced) {
  const auto nodes = build_saddle_nodes(
      loci_for(q, bayes_reduced ? -1.0 : m, setup.g, setup.h),
      bulk_panels_for(rule));
  const auto sums =
      accumulate_terms(q, m, setup.g, setup.h, nodes, bayes_reduced);
  const double hg = h_tail(setup.g);
  SaddleTerms t;
  t.jm = (setup.alpha * sums.lab_m + setup.beta * sums.unl_m) / hg;
  t.jq = (setup.alpha * sums.lab_q + setup.beta * sums.unl_q) / hg;
  t.data_free_energy =
      (setup.alpha * sums.lab_f + setup.beta * sums.unl_f) / hg;
  return t;
}

double clamp_q(double q) { return std::clamp(q, 0.0, kQMax); }

}  // namespace

void LearningSetup::validate() const {
  auto ok = [](double x) { return std::isfinite(x) && x >= 0.0; };
  if (!ok(g) || !ok(h) || !ok(alpha) || !ok(beta))
    throw std::invalid_argument(
        "LearningSetup: g, h, alpha, beta must be finite and non-negative");
}

double generalization_error(double q) {
  if (!(q >= 0.0 && q <= 1.0))
    throw std::domain_error("generalization_error: q must be in [0,1]");
  // 2 asin(sqrt((1-q)/2)) = arccos(q), well conditioned at q -> 1
  return 2.0 * std::asin(std::sqrt(0.5 * (1.0 - q))) / M_PI;
}

double rhs_single(double q, const LearningSetup& setup,
                  const specfun::QuadratureRule& rule) {
  setup.validate();
  if (!setup.bayes_optimal())
    throw std::invalid_argument("rhs_single: requires g == h");
  if (!(q >= 0.0 && q < 1.0))
    throw std::domain_error("rhs_single: q must be in [0,1)");
  const auto t = evaluate_terms(q, q, setup, rule, /*bayes_reduced=*/true);
  if (!std::isfinite(t.jm))
    throw specfun::IntegrationError("rhs_single: non-finite integrand");
  // the map's value can exceed 1 away from fixed points; the fixed points
  // themselves always lie in [0, 1)
  return t.jm;
}

SaddleResidual residual_pair(const OrderParams& p, const LearningSetup& setup,
                             const specfun::QuadratureRule& rule) {
  setup.validate();
  if (!(p.q >= 0.0 && p.q < 1.0) || !(p.m >= 0.0))
    throw std::domain_error("residual_pair: invalid order parameters");
  const double v = 1.0 - p.q;
  if (setup.bayes_optimal() && p.m == p.q) {
    const double s1 = rhs_single(p.q, setup, rule);
    const double r = (s1 - p.q) / v;
    return {r, r};
  }
  const double s2 = p.q - p.m * p.m;
  if (s2 < 1e-12)
    throw DegenerateInputError(
        "residual_pair: q - m^2 < 1e-12 with g != h; use the Bayes-optimal "
        "path instead");
  const auto t = evaluate_terms(p.q, p.m, setup, rule, false);
  SaddleResidual r;
  r.r_m = std::sqrt(p.q) / (std::sqrt(s2) * std::sqrt(v)) * t.jm - p.m / v;
  r.r_q = t.jq / v - s2 / (v * v);
  if (!std::isfinite(r.r_m) || !std::isfinite(r.r_q))
    throw specfun::IntegrationError("residual_pair: non-finite residual");
  return r;
}

namespace {

// Bisection polish inside a local bracket around the damped iterate. The
// bracket radius stays small so the polish cannot hop to a different basin;
// returns true when a sign change was found and refined.
bool polish_root(const LearningSetup& setup,
                 const specfun::QuadratureRule& rule, double& q,
                 double radius) {
  auto f = [&](double qq) { return qq - rhs_single(qq, setup, rule); };
  double h = std::max(radius, 1e-12);
  for (int grow = 0; grow < 10 && h <= 0.05; ++grow, h *= 2.0) {
    double lo = std::max(0.0, q - h), hi = std::min(kQMax, q + h);
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) {
      q = lo;
      return true;
    }
    if (fhi == 0.0) {
      q = hi;
      return true;
    }
    if (flo * fhi > 0.0) continue;
    while (hi - lo > 1e-15) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (flo * fm < 0.0)
        hi = mid;
      else {
        lo = mid;
        flo = fm;
      }
    }
    q = 0.5 * (lo + hi);
    return true;
  }
  return false;
}

SolveOutcome solve_bayes(const LearningSetup& setup, double q0,
                         const specfun::QuadratureRule& rule,
                         const SolverConfig& cfg) {
  SolveOutcome out;
  double q = clamp_q(q0);
  int it = 0;
  bool converged = false;
  double dq = 1.0;
  for (; it < cfg.max_iter; ++it) {
    const double s_at_q = rhs_single(q, setup, rule);
    // state-evolution form of the map: same fixed points as q <- S(q) but
    // contracting on the steep low-error branch where |dS/dq| ~ 1/(1-q)
    const double qhat = s_at_q / (1.0 - q);
    const double q_se = qhat / (1.0 + qhat);
    const double q_next = clamp_q((1.0 - cfg.damping) * q + cfg.damping * q_se);
    dq = std::fabs(q_next - q);
    q = q_next;
    const bool settled = dq < 1e-7 * (1.0 + q);
    const bool periodic = it >= 40 && it % 40 == 0;
    if (settled || periodic) {
      // the damped map localizes the basin; a bracketed bisection finishes
      // the job, which matters near spinodals where the contraction is weak
      if (polish_root(setup, rule, q, std::max(4.0 * dq, 1e-9))) {
        converged = true;
        ++it;
        break;
      }
    }
  }
  const double s_final = rhs_single(q, setup, rule);
  out.params = {q, q, generalization_error(q)};
  const double r = (s_final - q) / (1.0 - q);
  out.residual = {r, r};
  out.iterations = it;
  out.converged = converged;
  return out;
}

SolveOutcome solve_general(const LearningSetup& setup, double q0,
                           const specfun::QuadratureRule& rule,
                           const SolverConfig& cfg) {
  SolveOutcome out;
  double q = std::clamp(q0, 1e-6, kQMax);
  // on the Nishimori line the solution sits on the diagonal m = q; seeding
  // far below it can leave the intended basin entirely (m = q keeps
  // s^2 = q - m^2 = q(1-q) > 0, no degeneracy)
  double m = setup.bayes_optimal() ? q : 0.5 * std::sqrt(q);
  m = std::clamp(m, 1e-8, std::sqrt(q) * 0.999999);
  SaddleResidual res{1.0, 1.0};
  int it = 0;
  bool converged = false;
  int settled = 0;
  for (; it < cfg.max_iter; ++it) {
    const double v = 1.0 - q;
    const double s2 = std::max(q - m * m, 1e-300);
    const double s = std::sqrt(s2);
    const auto t = evaluate_terms(q, m, setup, rule, false);
    res.r_m = std::sqrt(q) / (s * std::sqrt(v)) * t.jm - m / v;
    res.r_q = t.jq / v - s2 / (v * v);
    // relative to the equation scales: near q -> 1 both sides are O(1/V^2)
    // and the root's q-accuracy is set by the residual slope, which grows
    // just as fast, so a scale-aware test loses nothing
    const double scale_m = 1.0 + m / v;
    const double scale_q = 1.0 + s2 / (v * v);
    if (std::fabs(res.r_m) < cfg.tol * scale_m &&
        std::fabs(res.r_q) < cfg.tol * scale_q) {
      converged = true;
      break;
    }
    // state-evolution form: move to hat variables and invert the spherical
    // prior relations m = V mh, q = V^2 (mh^2 + rh) in closed form. The raw
    // map q <- m^2 + V Jq is expanding on the steep near-1 branch; this one
    // contracts there just like the Bayes-optimal path.
    const double mh = std::sqrt(q) / (s * std::sqrt(v)) * t.jm;
    const double rh = t.jq / v;
    const double dsum = mh * mh + rh;
    double q_new;
    if (dsum < 1e-14) {
      q_new = dsum;
    } else {
      q_new = (2.0 * dsum + 1.0 - std::sqrt(4.0 * dsum + 1.0)) / (2.0 * dsum);
    }
    const double q_prev = q, m_prev = m;
    q = (1.0 - cfg.damping) * q + cfg.damping * q_new;
    q = std::clamp(q, 1e-12, kQMax);
    const double m_new = (1.0 - q_new) * mh;
    m = (1.0 - cfg.damping) * m + cfg.damping * m_new;
    m = std::clamp(m, 0.0, std::sqrt(q) * (1.0 - 1e-12));
    // near q -> 1 the residual scale ~ 1/V^3 amplifies integration noise
    // past any usable tolerance while the iterate itself is pinned; a run
    // of sub-1e-12 steps is the reliable signal there
    if (std::fabs(q - q_prev) < 1e-12 * (1.0 + q) &&
        std::fabs(m - m_prev) < 1e-12 * (1.0 + m)) {
      if (++settled >= 5) {
        converged = true;
        ++it;
        break;
      }
    } else {
      settled = 0;
    }
  }
  out.params = {q, m, generalization_error(q)};
  out.residual = res;
  out.iterations = it;
  out.converged = converged;
  return out;
}

}  // namespace

SolveOutcome try_solve_fixed_point(const LearningSetup& setup, double q0,
                                   const specfun::QuadratureRule& rule,
                                   const SolverConfig& config) {
  setup.validate();
  if (!(q0 >= 0.0 && q0 < 1.0))
    throw std::domain_error("solve_fixed_point: q0 must be in [0,1)");
  if (!(config.damping > 0.0 && config.damping <= 1.0))
    throw std::domain_error("solve_fixed_point: damping must be in (0,1]");
  if (setup.bayes_optimal() && !config.force_coupled)
    return solve_bayes(setup, q0, rule, config);
  return solve_general(setup, q0, rule, config);
}

OrderParams solve_fixed_point(const LearningSetup& setup, double q0,
                              const specfun::QuadratureRule& rule,
                              double damping, double tol, int max_iter) {
  SolverConfig cfg{damping, tol, max_iter};
  auto out = try_solve_fixed_point(setup, q0, rule, cfg);
  if (!out.converged)
    throw NonConvergenceError("solve_fixed_point: no convergence after " +
                                  std::to_string(max_iter) + " iterations",
                              out);
  return out.params;
}

std::vector<OrderParams> find_all_roots(const LearningSetup& setup,
                                        const specfun::QuadratureRule& rule,
                                        int grid_size) {
  setup.validate();
  if (!setup.bayes_optimal())
    throw std::invalid_argument("find_all_roots: requires g == h");
  if (grid_size < 100)
    throw std::invalid_argument("find_all_roots: grid_size must be >= 100");

  std::vector<double> qs;
  qs.reserve(2 * grid_size);
  for (int i = 0; i < grid_size; ++i)
    qs.push_back((1.0 - 1e-6) * i / (grid_size - 1));
  // log-spaced refinement in 1-q: coexisting roots at large alpha all sit
  // within 1-q < 1e-2 and a uniform grid cannot separate them
  const double u_hi = 0.2, u_lo = 1e-10;
  for (int i = 0; i < grid_size; ++i) {
    const double u =
        u_hi * std::pow(u_lo / u_hi, static_cast<double>(i) / (grid_size - 1));
    qs.push_back(1.0 - u);
  }
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());

  auto f = [&](double q) { return q - rhs_single(q, setup, rule); };
  std::vector<double> fv(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) fv[i] = f(qs[i]);

  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
    if (fv[i] == 0.0) {
      roots.push_back(qs[i]);
      continue;
    }
    if (fv[i] * fv[i + 1] < 0.0) {
      double lo = qs[i], hi = qs[i + 1], flo = fv[i];
      // machine-width bisection: the map is steep near the packed roots, so
      // every representable digit of q is needed for |q - S(q)| < 1e-10
      while (hi - lo > 2.3e-16 * std::max(1.0, std::fabs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if (flo * fm < 0.0)
          hi = mid;
        else {
          lo = mid;
          flo = fm;
        }
      }
      const double cand_lo = lo, cand_hi = hi;
      roots.push_back(std::fabs(f(cand_lo)) <= std::fabs(f(cand_hi)) ? cand_lo
                                                                     : cand_hi);
    }
  }
  if (!fv.empty() && fv.back() == 0.0) roots.push_back(qs.back());

  std::vector<OrderParams> out;
  for (double r : roots) {
    if (!out.empty() && std::fabs(out.back().q - r) < 1e-9) continue;
    out.push_back({r, r, generalization_error(r)});
  }
  return out;
}

double free_energy(const OrderParams& p, const LearningSetup& setup,
                   const specfun::QuadratureRule& rule) {
  setup.validate();
  if (!(p.q >= 0.0 && p.q <= kQMax))
    throw std::domain_error("free_energy: q out of range");
  const bool bayes_reduced = (p.m == p.q);
  if (!bayes_reduced && p.q - p.m * p.m < 1e-12)
    throw DegenerateInputError("free_energy: q - m^2 degenerate with m != q");
  const auto t = evaluate_terms(p.q, p.m, setup, rule, bayes_reduced);
  const double v = 1.0 - p.q;
  const double value =
      t.data_free_energy + 0.5 * std::log(v) + (p.q - p.m * p.m) / (2.0 * v);
  if (!std::isfinite(value))
    throw specfun::IntegrationError("free_energy: non-finite value");
  return value;
}

namespace {

struct TwoSeedResult {
  SolveOutcome low;   // seeded from q0 = 1e-3 (or warm start)
  SolveOutcome high;  // seeded from q0 = 1 - 1e-3 (or warm start)
  bool distinct = false;
};

TwoSeedResult two_seed_solve(const LearningSetup& setup,
                             const specfun::QuadratureRule& rule,
                             const SolverConfig& cfg, double warm_lo,
                             double warm_hi) {
  TwoSeedResult r;
  r.low = try_solve_fixed_point(setup, warm_lo, rule, cfg);
  r.high = try_solve_fixed_point(setup, warm_hi, rule, cfg);
  r.distinct = r.low.converged && r.high.converged &&
               std::fabs(r.low.params.q - r.high.params.q) > 1e-5;
  return r;
}

}  // namespace

Branch trace_branch(const LearningSetup& setup_base, double beta_lo,
                    double beta_hi, int n_steps, SweepDirection direction,
                    const specfun::QuadratureRule& rule,
                    const SolverConfig& config) {
  setup_base.validate();
  if (n_steps < 2) throw std::invalid_argument("trace_branch: n_steps >= 2");
  if (!(beta_lo >= 0.0 && beta_hi > beta_lo))
    throw std::invalid_argument("trace_branch: bad beta range");

  Branch branch;
  branch.direction = direction;
  branch.setup = setup_base;

  const bool ascending = direction == SweepDirection::ascending;
  const double seed_default = ascending ? 1e-3 : 1.0 - 1e-3;
  const double seed_opposite = ascending ? 1.0 - 1e-3 : 1e-3;
  double warm = seed_default;

  for (int i = 0; i < n_steps; ++i) {
    const double frac = static_cast<double>(i) / (n_steps - 1);
    const double beta =
        ascending ? beta_lo + (beta_hi - beta_lo) * frac
                  : beta_hi - (beta_hi - beta_lo) * frac;
    LearningSetup setup = setup_base;
    setup.beta = beta;

    auto out = try_solve_fixed_point(setup, warm, rule, config);
    if (!out.converged) {
      BranchPoint fail;
      fail.beta = beta;
      fail.q = out.params.q;
      fail.m = out.params.m;
      fail.epsilon = out.params.epsilon;
      fail.converged = false;
      branch.points.push_back(fail);
      warm = seed_opposite;  // branch ended; restart from the other extreme
      continue;
    }

    BranchPoint pt;
    pt.beta = beta;
    pt.q = out.params.q;
    pt.m = out.params.m;
    pt.epsilon = out.params.epsilon;
    pt.converged = true;
    pt.free_energy_value = free_energy(out.params, setup, rule);
    pt.stable = true;
    if (setup.bayes_optimal()) {
      // stable iff this point attains the max of -F among coexisting states
      auto other = try_solve_fixed_point(
          setup, pt.q > 0.5 ? 1e-3 : 1.0 - 1e-3, rule, config);
      if (other.converged && std::fabs(other.params.q - pt.q) > 1e-5) {
        const double f_other = free_energy(other.params, setup, rule);
        pt.stable = pt.free_energy_value >=
                    f_other - 1e-10 * (1.0 + std::fabs(f_other));
      }
    }
    branch.points.push_back(pt);
    warm = pt.q;
  }
  return branch;
}

SpinodalReport spinodal_scan(const LearningSetup& setup_base, double beta_lo,
                             double beta_hi,
                             const specfun::QuadratureRule& rule,
                             double tolerance_beta) {
  setup_base.validate();
  if (!setup_base.bayes_optimal())
    throw std::invalid_argument("spinodal_scan: requires g == h");
  if (!(beta_hi > beta_lo) || tolerance_beta <= 0.0)
    throw std::invalid_argument("spinodal_scan: bad range or tolerance");

  SolverConfig cfg;
  // alpha = 0 keeps q = 0 as an exact root for every beta, so coexistence is
  // simply the existence of a nonzero root and the upper spinodal is absent
  // (the seeded chain can escape a root that is still present once the
  // trivial state turns unstable, so the two-seed probe would misreport it).
  const bool trivial_root_persists = setup_base.alpha == 0.0;
  auto multi_at = [&](double beta, double warm_lo) {
    LearningSetup s = setup_base;
    s.beta = beta;
    if (trivial_root_persists) {
      TwoSeedResult r;
      r.high = try_solve_fixed_point(s, 1.0 - 1e-3, rule, cfg);
      r.low.converged = true;
      r.low.params = {0.0, 0.0, 0.5};
      r.distinct = r.high.converged && r.high.params.q > 1e-5;
      return r;
    }
    return two_seed_solve(s, rule, cfg, warm_lo, 1.0 - 1e-3);
  };

  // geometric presence scan, warm-starting the low-seed chain upward
  const double lo_floor = std::max(beta_lo, 1e-3);
  std::vector<double> grid;
  for (double b = lo_floor; b < beta_hi; b *= 1.05) grid.push_back(b);
  grid.push_back(beta_hi);

  double warm_lo = 1e-3;
  double first_multi = -1.0, last_multi = -1.0;
  double before_first = beta_lo, after_last = beta_hi;
  double prev = beta_lo;
  for (double b : grid) {
    auto r = multi_at(b, warm_lo);
    if (r.low.converged) warm_lo = std::min(r.low.params.q, 1.0 - 1e-3);
    if (r.distinct) {
      if (first_multi < 0.0) {
        first_multi = b;
        before_first = prev;
      }
      last_multi = b;
      after_last = beta_hi;
    } else if (last_multi > 0.0 && after_last == beta_hi) {
      after_last = b;
    }
    prev = b;
  }

  SpinodalReport report;
  if (first_multi < 0.0) {
    report.n_solutions_inside = 1;
    return report;
  }

  // lower edge
  if (first_multi > lo_floor) {
    double lo = before_first, hi = first_multi;
    while (hi - lo > tolerance_beta) {
      const double mid = 0.5 * (lo + hi);
      (multi_at(mid, 1e-3).distinct ? hi : lo) = mid;
    }
    report.beta_sp_lower = 0.5 * (lo + hi);
  }
  // upper edge (absent when the window extends past beta_hi, e.g. the
  // alpha = 0 structure where q = 0 remains a root for every beta)
  if (after_last < beta_hi) {
    double lo = last_multi, hi = after_last;
    while (hi - lo > tolerance_beta) {
      const double mid = 0.5 * (lo + hi);
      (multi_at(mid, 1e-3).distinct ? lo : hi) = mid;
    }
    report.beta_sp_upper = 0.5 * (lo + hi);
  }

  double mid_beta;
  if (report.beta_sp_lower && report.beta_sp_upper)
    mid_beta = 0.5 * (*report.beta_sp_lower + *report.beta_sp_upper);
  else if (report.beta_sp_lower)
    mid_beta = std::min(2.0 * *report.beta_sp_lower, beta_hi);
  else
    mid_beta = first_multi;
  LearningSetup s = setup_base;
  s.beta = mid_beta;
  report.n_solutions_inside =
      static_cast<int>(find_all_roots(s, rule, 400).size());
  return report;
}

double learning_curve_exponent(const LearningSetup& setup_base,
                               const std::vector<double>& beta_samples,
                               const specfun::QuadratureRule& rule) {
  setup_base.validate();
  if (beta_samples.size() < 2)
    throw std::invalid_argument("learning_curve_exponent: need >= 2 betas");
  SolverConfig cfg;
  double warm = 1.0 - 1e-3;  // low-error branch seed
  std::vector<double> lx, ly;
  for (double beta : beta_samples) {
    LearningSetup setup = setup_base;
    setup.beta = beta;
    auto out = try_solve_fixed_point(setup, warm, rule, cfg);
    if (!out.converged)
      throw NonConvergenceError("learning_curve_exponent: branch lost at beta=" +
                                    std::to_string(beta),
                                out);
    warm = out.params.q;
    lx.push_back(std::log(beta));
    ly.push_back(std::log(out.params.epsilon));
  }
  const std::size_t n = lx.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace semisup::replica
