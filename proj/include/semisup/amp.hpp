#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semisup/synthdata.hpp"

// Approximate message passing for the margin posterior: per-datum messages
// a_mu, per-component messages a_k, the scalar kappa (channel variance is
// b = 1/kappa) and the Onsager scalar B. The weight estimate is w = a/kappa.
//
// update_rule selects between the source update equations taken verbatim
// (kappa = (1 + (4/N) sum a_k^2)/2, memory term B a_k, unlabeled
// D = C^2 + correction) and the message-passing form consistent with the
// channel derivation and the spherical prior: D = -dC/d_omega (minus sign on
// the unlabeled correction), lambda = sum(D)/N, effective observation
// R = w + (x^T C)/lambda, posterior mean on the sphere w = R-rescaled with
// per-component variance V = sqrt(N)/(lambda |R|) and kappa = 1/V. The
// verbatim rule diverges on every instance we tried; both are kept and the
// experiments run the consistent one. See README.

namespace semisup::amp {

enum class UpdateRule { verbatim, bayes };

struct AmpConfig {
  int max_iter = 200;
  double rel_tol = 1e-8;       // convergence threshold on relative dw
  double damping = 1.0;        // 1.0 = undamped, per the source
  double divergence_bound = 1e100;
  UpdateRule update_rule = UpdateRule::verbatim;
  bool label_in_field = false;  // substitute a -> y a inside z+- (labeled)
  double init_scale = 0.1;      // stddev of the randomized a_k init
  bool record_trajectory = false;
};

struct AmpState {
  std::vector<double> a_data;  // length L+U
  std::vector<double> a_comp;  // length N
  double kappa = 1.0;
  double b_scalar = 0.0;
  int t = 0;
};

struct TrajectoryRow {
  int iteration;
  double q_emp;
  double rel_dw;
  double kappa;
  double b_scalar;
};

struct AmpResult {
  std::vector<double> w_hat;
  double q_emp = 0.0;       // cosine overlap with the teacher
  double epsilon_emp = 0.5; // arccos(q_emp)/pi
  int iterations_used = 0;
  bool converged = false;
  double wall_seconds = 0.0;  // a sweep costs O((L+U) N); measured per run
  std::vector<TrajectoryRow> trajectory;  // filled when record_trajectory
};

// Channel functions, verbatim formulas with z+- = (h +- a)/sqrt(b),
// evaluated in log space where the tails underflow. For labeled data y
// enters only as the prefactor of C.
double channel_c(double a, double b, double h, bool labeled, int y = 1);
double channel_d(double a, double b, double h, bool labeled, int y = 1);

// One synchronous sweep; all updates read the t-state.
AmpState amp_step(const AmpState& state, const synthdata::Dataset& data,
                  double h, const AmpConfig& config);

AmpState make_initial_state(const synthdata::Dataset& data,
                            const AmpConfig& config, std::uint64_t seed);

AmpResult run_amp(const synthdata::Dataset& data, double h,
                  const AmpConfig& config, const AmpState& init);
AmpResult run_amp(const synthdata::Dataset& data, double h,
                  const AmpConfig& config, std::uint64_t init_seed = 0);

// cosine overlap (w_hat . w0)/(|w_hat||w0|), clamped to [-1,1]
double measure_overlap(const std::vector<double>& w_hat,
                       const synthdata::Teacher& teacher);

struct ProtocolPoint {
  double alpha = 0.0;
  double mean_epsilon = 0.5;
  double stderr_epsilon = 0.0;
  int diverged_count = 0;
  int sample_count = 0;
};

// Pre-train at alpha = 0 on U = beta*N unlabeled data from a randomized
// initial state, then raise alpha along the schedule, appending fresh labeled
// data and warm-starting from the previous state with config.max_iter sweeps.
// Per-alpha mean and standard error of epsilon over n_samples independent
// datasets (teacher shared, data independent). Divergences are recorded and
// excluded from the mean. Runs samples on `workers` threads.
std::vector<ProtocolPoint> fine_tune_protocol(
    const synthdata::Teacher& teacher, double g, double h, double beta,
    const std::vector<double>& alpha_schedule, int n_samples,
    const AmpConfig& config, std::uint64_t seed, int workers = 1);

void write_trajectory(const AmpResult& result, const std::string& path);

}  // namespace semisup::amp
