#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Experiment configuration, CSV output and the canonical experiment runners.
// Every CSV starts with a metadata line carrying the tool version, the config
// hash and the master seed, which is enough to reproduce the run bit-exactly.

namespace semisup::harness {

inline constexpr const char* kCsvVersion = "semisup-csv v1";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kConfigExit = 2, kComputeExit = 3 };

struct PhaseDiagramParams {
  std::vector<double> h_values{0.1, 0.05, 0.03, 0.02, 0.01};
  std::vector<double> alpha_values{1.0, 10.0};
  double g = -1.0;  // negative means g = h
  int n_beta = 80;
  double beta_min = 1e-3;
  double beta_max = -1.0;  // negative means adaptive: 2x upper spinodal
  int quad_order = 201;
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 5000;
};

struct AmpEnsembleParams {
  int n = 100;
  int n_samples = 1000;
  std::vector<double> betas{100.0, 200.0};
  double h = 0.05;
  double g = -1.0;
  double alpha_max = 5.0;
  double alpha_step = 0.25;
  int max_iter = 20;
  double rel_tol = 1e-8;
  double damping = 0.5;
  std::string update_rule = "bayes";
  bool label_in_field = true;
};

struct SpinodalParams {
  std::vector<double> h_values{0.1, 0.05, 0.03, 0.02, 0.01};
  std::vector<double> alpha_values{1.0, 10.0};
  double g = -1.0;
  double beta_lo = 1e-3;
  double beta_hi = 4e5;
  double tol_beta = 0.5;
  int quad_order = 201;
};

struct LearningCurveParams {
  double h = 0.05;
  double g = -1.0;
  double alpha = 1.0;
  double beta_lo = 1e3;
  double beta_hi = 1e4;
  int n_beta = 9;
  int quad_order = 201;
};

struct DatagenParams {
  int n = 100;
  int l = 100;
  int u = 1000;
  double g = 0.05;
  bool verify = true;
};

struct ExperimentConfig {
  std::string kind;  // phase-diagram | amp-ensemble | spinodal | learning-curve | datagen
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::string out_path = "";

  PhaseDiagramParams phase_diagram;
  AmpEnsembleParams amp_ensemble;
  SpinodalParams spinodal;
  LearningCurveParams learning_curve;
  DatagenParams datagen;

  static ExperimentConfig from_json_file(const std::string& path);
  void apply_json_text(const std::string& text);
  std::string canonical_json() const;
  std::uint64_t config_hash() const;
  void validate() const;
};

// Pre-sized deterministic fan-out: fn(i) for i in [0, n), any scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Runs the configured experiment; throws ConfigError / ComputeError.
void run_experiment(const ExperimentConfig& config);

namespace detail {
std::string format_double(double v);
std::uint64_t fnv1a(const std::string& text);
}  // namespace detail

}  // namespace semisup::harness
