#include <cmath>
#include <fstream>
#include <sstream>

#include "semisup/amp.hpp"
#include "semisup/harness.hpp"
#include "semisup/replica.hpp"
#include "semisup/rng.hpp"
#include "semisup/synthdata.hpp"

namespace semisup::harness {

namespace {

using detail::format_double;
using replica::LearningSetup;
using replica::SolverConfig;
using replica::SweepDirection;

constexpr std::uint64_t kTeacherSeedTag = 0x7ea00001ULL;

std::string metadata_line(const ExperimentConfig& cfg,
                          const std::string& extra = "") {
  std::ostringstream os;
  os << "# " << kCsvVersion << " kind=" << cfg.kind << " config_hash="
     << std::hex << cfg.config_hash() << std::dec
     << " master_seed=" << cfg.master_seed;
  if (!extra.empty()) os << " " << extra;
  return os.str();
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ComputeError("cannot open output file: " + path);
  for (const auto& line : lines) out << line << "\n";
  if (!out) throw ComputeError("write failed: " + path);
}

// ---------- phase-diagram ----------

void run_phase_diagram(const ExperimentConfig& cfg) {
  const auto& p = cfg.phase_diagram;
  const auto rule = specfun::QuadratureRule::gauss_hermite(p.quad_order);
  SolverConfig solver{p.damping, p.tol, p.max_iter};

  struct Cell {
    double h, alpha;
    std::vector<std::string> rows;
  };
  std::vector<Cell> cells;
  for (double h : p.h_values)
    for (double a : p.alpha_values) cells.push_back({h, a, {}});

  parallel_for(static_cast<int>(cells.size()), cfg.workers, [&](int ci) {
    Cell& cell = cells[ci];
    LearningSetup setup;
    setup.h = cell.h;
    setup.g = p.g < 0.0 ? cell.h : p.g;
    setup.alpha = cell.alpha;
    setup.beta = 0.0;

    double beta_max = p.beta_max;
    if (beta_max <= 0.0) {
      if (setup.alpha > 0.0 && setup.bayes_optimal()) {
        auto window = replica::spinodal_scan(setup, p.beta_min, 4e5, rule, 1.0);
        if (window.beta_sp_upper)
          beta_max = 2.0 * *window.beta_sp_upper;
        else if (window.beta_sp_lower)
          beta_max = 4.0 * *window.beta_sp_lower;
        else
          beta_max = 500.0;
      } else {
        beta_max = 500.0;
      }
    }

    for (auto dir : {SweepDirection::ascending, SweepDirection::descending}) {
      replica::Branch branch = replica::trace_branch(
          setup, p.beta_min, beta_max, p.n_beta, dir, rule, solver);
      const char* sweep =
          dir == SweepDirection::ascending ? "ascending" : "descending";
      for (const auto& pt : branch.points) {
        std::ostringstream row;
        row << format_double(cell.h) << ',' << format_double(setup.g) << ','
            << format_double(cell.alpha) << ',' << format_double(pt.beta)
            << ',' << (pt.stable ? "dominant" : "metastable") << ','
            << format_double(pt.q) << ',' << format_double(pt.m) << ','
            << format_double(pt.epsilon) << ','
            << format_double(pt.free_energy_value) << ','
            << (pt.stable ? 1 : 0) << ',' << sweep << ','
            << (pt.converged ? "ok" : "no_convergence");
        cell.rows.push_back(row.str());
      }
    }
  });

  std::vector<std::string> lines;
  lines.push_back(metadata_line(cfg));
  lines.push_back(
      "h,g,alpha,beta,branch,q,m,epsilon,free_energy,stable,sweep_direction,"
      "status");
  for (const auto& cell : cells)
    for (const auto& row : cell.rows) lines.push_back(row);
  write_lines(cfg.out_path, lines);
}

// ---------- amp-ensemble ----------

void run_amp_ensemble(const ExperimentConfig& cfg) {
  const auto& p = cfg.amp_ensemble;
  const double g = p.g < 0.0 ? p.h : p.g;

  std::vector<double> schedule;
  for (double a = 0.0; a <= p.alpha_max + 1e-12; a += p.alpha_step)
    schedule.push_back(a);

  amp::AmpConfig acfg;
  acfg.max_iter = p.max_iter;
  acfg.rel_tol = p.rel_tol;
  acfg.damping = p.damping;
  acfg.update_rule = p.update_rule == "verbatim" ? amp::UpdateRule::verbatim
                                                 : amp::UpdateRule::bayes;
  acfg.label_in_field = p.label_in_field;

  std::vector<std::string> lines;
  lines.push_back(metadata_line(cfg));
  lines.push_back("beta,alpha,mean_epsilon,stderr_epsilon,diverged_count");

  for (std::size_t bi = 0; bi < p.betas.size(); ++bi) {
    const double beta = p.betas[bi];
    const std::uint64_t beta_seed =
        derive_seed(cfg.master_seed, kTeacherSeedTag, bi);
    const auto teacher = synthdata::sample_teacher(p.n, beta_seed);
    auto points = amp::fine_tune_protocol(teacher, g, p.h, beta, schedule,
                                          p.n_samples, acfg, beta_seed,
                                          cfg.workers);
    for (const auto& pt : points) {
      std::ostringstream row;
      row << format_double(beta) << ',' << format_double(pt.alpha) << ','
          << format_double(pt.mean_epsilon) << ','
          << format_double(pt.stderr_epsilon) << ',' << pt.diverged_count;
      lines.push_back(row.str());
    }
  }
  write_lines(cfg.out_path, lines);
}

// ---------- spinodal ----------

void run_spinodal(const ExperimentConfig& cfg) {
  const auto& p = cfg.spinodal;
  const auto rule = specfun::QuadratureRule::gauss_hermite(p.quad_order);

  struct Cell {
    double h, alpha;
    std::string row;
  };
  std::vector<Cell> cells;
  for (double h : p.h_values)
    for (double a : p.alpha_values) cells.push_back({h, a, {}});

  parallel_for(static_cast<int>(cells.size()), cfg.workers, [&](int ci) {
    Cell& cell = cells[ci];
    LearningSetup setup;
    setup.h = cell.h;
    setup.g = p.g < 0.0 ? cell.h : p.g;
    setup.alpha = cell.alpha;
    setup.beta = 0.0;
    auto report =
        replica::spinodal_scan(setup, p.beta_lo, p.beta_hi, rule, p.tol_beta);
    std::ostringstream row;
    row << format_double(cell.h) << ',' << format_double(cell.alpha) << ',';
    if (report.beta_sp_lower) row << format_double(*report.beta_sp_lower);
    row << ',';
    if (report.beta_sp_upper) row << format_double(*report.beta_sp_upper);
    cell.row = row.str();
  });

  std::vector<std::string> lines;
  lines.push_back(metadata_line(cfg));
  lines.push_back("h,alpha,beta_sp_lower,beta_sp_upper");
  for (const auto& cell : cells) lines.push_back(cell.row);
  write_lines(cfg.out_path, lines);
}

// ---------- learning-curve ----------

void run_learning_curve(const ExperimentConfig& cfg) {
  const auto& p = cfg.learning_curve;
  const auto rule = specfun::QuadratureRule::gauss_hermite(p.quad_order);
  LearningSetup setup;
  setup.h = p.h;
  setup.g = p.g < 0.0 ? p.h : p.g;
  setup.alpha = p.alpha;
  setup.beta = 0.0;

  std::vector<double> betas;
  for (int i = 0; i < p.n_beta; ++i) {
    const double f = static_cast<double>(i) / (p.n_beta - 1);
    betas.push_back(p.beta_lo * std::pow(p.beta_hi / p.beta_lo, f));
  }
  const double slope = replica::learning_curve_exponent(setup, betas, rule);

  SolverConfig solver;
  std::vector<std::string> lines;
  lines.push_back(metadata_line(cfg, "slope=" + format_double(slope)));
  lines.push_back("beta,q,epsilon");
  double warm = 1.0 - 1e-3;
  for (double beta : betas) {
    LearningSetup s = setup;
    s.beta = beta;
    auto out = replica::try_solve_fixed_point(s, warm, rule, solver);
    warm = out.params.q;
    std::ostringstream row;
    row << format_double(beta) << ',' << format_double(out.params.q) << ','
        << format_double(out.params.epsilon);
    lines.push_back(row.str());
  }
  write_lines(cfg.out_path, lines);
}

// ---------- datagen ----------

void run_datagen(const ExperimentConfig& cfg) {
  const auto& p = cfg.datagen;
  auto data = synthdata::make_dataset(p.n, p.l, p.u, p.g, cfg.master_seed);
  synthdata::save_dataset(data, cfg.out_path);
  if (p.verify) {
    auto loaded = synthdata::load_dataset(cfg.out_path);
    if (loaded.features != data.features || loaded.labels != data.labels)
      throw ComputeError("datagen: round-trip mismatch");
    for (int mu = 0; mu < loaded.rows(); ++mu) {
      const double f = loaded.teacher_field(mu);
      const bool ok = mu < loaded.l_count
                          ? loaded.labels[mu] * f > loaded.margin_g
                          : std::fabs(f) > loaded.margin_g;
      if (!ok) throw ComputeError("datagen: margin violation on load");
    }
  }
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.kind == "phase-diagram")
    run_phase_diagram(config);
  else if (config.kind == "amp-ensemble")
    run_amp_ensemble(config);
  else if (config.kind == "spinodal")
    run_spinodal(config);
  else if (config.kind == "learning-curve")
    run_learning_curve(config);
  else if (config.kind == "datagen")
    run_datagen(config);
  else
    throw ConfigError("unknown kind: " + config.kind);
}

}  // namespace semisup::harness
