#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semisup/specfun.hpp"

// Replica-symmetric order-parameter equations for semi-supervised perceptron
// learning with margin-structured data, their free energy, branch tracing in
// beta, and spinodal location.
//
// Conventions (V = 1-q, s = sqrt(q-m^2), all integrals against Dz):
//   J_m = (1/H(g)) [ alpha E phi(A) phi(X)/H(X) + beta E G'_g G'_h / G_h ]
//   J_q = (1/H(g)) [ alpha E H(A) (phi(X)/H(X))^2 + beta E G_g (G'_h/G_h)^2 ]
// with A = (sqrt(q) g + m z)/s, X = (sqrt(q) z + h)/sqrt(V), and the G's the
// +-margin mixtures of g_marginal / g_marginal_prime evaluated at
// (a,b) = (m, sqrt(q)) [teacher, margin g] and (sqrt(q), 1) [student, margin h].
// The saddle conditions, i.e. the stationarity of free_energy, read
//   m-equation:  (sqrt(q)/(s sqrt(V))) J_m = m/(1-q)
//   q-equation:  J_q/(1-q)             = (q-m^2)/(1-q)^2
// On the Bayes-optimal line g = h they reduce to the single fixed point
//   q = S(q) = (1/H(h)) [ alpha E phi(X)^2/H(X) + beta E G'_h^2/G_h ],
// which is what rhs_single evaluates.

namespace semisup::replica {

struct LearningSetup {
  double g = 0.0;      // data (teacher) margin
  double h = 0.0;      // assumed (model) margin
  double alpha = 0.0;  // labeled data per dimension, L/N
  double beta = 0.0;   // unlabeled data per dimension, U/N

  bool bayes_optimal() const { return g == h; }
  void validate() const;
};

struct OrderParams {
  double q = 0.0;        // replica overlap, in [0,1)
  double m = 0.0;        // teacher overlap, in [0, sqrt(q)]
  double epsilon = 0.5;  // arccos(q)/pi
};

struct SaddleResidual {
  double r_m = 0.0;
  double r_q = 0.0;
};

struct SolverConfig {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 5000;
  // route a g == h setup through the coupled (q, m) iteration anyway;
  // used to check Nishimori consistency of the general path
  bool force_coupled = false;
};

struct SolveOutcome {
  OrderParams params;
  SaddleResidual residual;
  int iterations = 0;
  bool converged = false;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, SolveOutcome last)
      : std::runtime_error(what), last_outcome(std::move(last)) {}
  SolveOutcome last_outcome;
};

class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// arccos(q)/pi on [0,1]; domain error outside.
double generalization_error(double q);

// Bayes-optimal fixed-point map S(q) (requires setup.g == setup.h). The
// value can exceed 1 between fixed points; solutions of q = S(q) lie in
// [0, 1).
double rhs_single(double q, const LearningSetup& setup,
                  const specfun::QuadratureRule& rule);

// Residuals of the two saddle-point equations at (q, m).
// Requires q > m^2 (up to the Bayes-optimal m = q reduction when g = h).
SaddleResidual residual_pair(const OrderParams& p, const LearningSetup& setup,
                             const specfun::QuadratureRule& rule);

SolveOutcome try_solve_fixed_point(const LearningSetup& setup, double q0,
                                   const specfun::QuadratureRule& rule,
                                   const SolverConfig& config = {});

// Throws NonConvergenceError (carrying the last iterate) after max_iter.
OrderParams solve_fixed_point(const LearningSetup& setup, double q0,
                              const specfun::QuadratureRule& rule,
                              double damping = 0.5, double tol = 1e-10,
                              int max_iter = 5000);

// All roots of q = S(q), ascending. Scans a uniform grid over
// [0, 1-1e-6] plus a log-spaced refinement in 1-q (the coexisting roots at
// large alpha pack into 1-q < 1e-2), then bisects each sign change to 1e-12.
std::vector<OrderParams> find_all_roots(const LearningSetup& setup,
                                        const specfun::QuadratureRule& rule,
                                        int grid_size = 400);

// -F at (q, m): data terms (normalized by H(g)) plus
// log(1-q)/2 + (q-m^2)/(2(1-q)).
double free_energy(const OrderParams& p, const LearningSetup& setup,
                   const specfun::QuadratureRule& rule);

enum class SweepDirection { ascending, descending };

struct BranchPoint {
  double beta = 0.0;
  double q = 0.0;
  double m = 0.0;
  double epsilon = 0.5;
  double free_energy_value = 0.0;
  bool stable = true;
  bool converged = true;
};

struct Branch {
  std::vector<BranchPoint> points;  // ordered by sweep position
  SweepDirection direction = SweepDirection::ascending;
  LearningSetup setup;  // beta field is the swept variable
};

// Sweeps beta over [beta_lo, beta_hi] with warm starts; ascending sweeps seed
// from q0 = 1e-3, descending from q0 = 1 - 1e-3 (the q=0 branch persists for
// all beta when alpha=0, so ascending seeds must start strictly above 0).
// stable = point attains the max of -F among coexisting roots at its beta
// (labeled only on Bayes-optimal setups, where coexistence is computable).
Branch trace_branch(const LearningSetup& setup_base, double beta_lo,
                    double beta_hi, int n_steps, SweepDirection direction,
                    const specfun::QuadratureRule& rule,
                    const SolverConfig& config = {});

struct SpinodalReport {
  std::optional<double> beta_sp_lower;
  std::optional<double> beta_sp_upper;
  int n_solutions_inside = 1;
};

// Brackets the multi-solution window in beta by bisecting on the root count
// of find_all_roots. Absent windows are reported, not an error; an edge that
// lies outside [beta_lo, beta_hi] is left unset.
SpinodalReport spinodal_scan(const LearningSetup& setup_base, double beta_lo,
                             double beta_hi,
                             const specfun::QuadratureRule& rule,
                             double tolerance_beta = 0.5);

// Least-squares slope of log eps vs log beta on the low-error branch.
double learning_curve_exponent(const LearningSetup& setup_base,
                               const std::vector<double>& beta_samples,
                               const specfun::QuadratureRule& rule);

}  // namespace semisup::replica
