#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "semisup/harness.hpp"

using semisup::harness::ExperimentConfig;

namespace {

void add_common(CLI::App* cmd, std::string& config_path, ExperimentConfig& cfg) {
  cmd->set_help_flag("--help", "print help");  // frees -h / --h for margins
  cmd->add_option("--config", config_path, "JSON config file");
  cmd->add_option("--seed", cfg.master_seed, "master seed");
  cmd->add_option("--workers", cfg.workers, "worker thread count");
  cmd->add_option("--out", cfg.out_path, "output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "semisup: replica-symmetric theory and AMP experiments for "
      "semi-supervised perceptron learning with margin data"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;

  auto* pd = app.add_subcommand("phase-diagram",
                                "trace generalization-error branches over beta");
  add_common(pd, config_path, cfg);
  pd->add_option("--h", cfg.phase_diagram.h_values, "model margin grid");
  pd->add_option("--alpha", cfg.phase_diagram.alpha_values, "labeled ratio grid");
  pd->add_option("--g", cfg.phase_diagram.g, "data margin (default: g = h)");
  pd->add_option("--n-beta", cfg.phase_diagram.n_beta, "points per sweep");
  pd->add_option("--beta-max", cfg.phase_diagram.beta_max,
                 "sweep end (default: adaptive, 2x upper spinodal)");
  pd->add_option("--quad-order", cfg.phase_diagram.quad_order, "quadrature order");

  auto* ae = app.add_subcommand("amp-ensemble",
                                "pre-train/fine-tune AMP ensemble statistics");
  add_common(ae, config_path, cfg);
  ae->add_option("--n", cfg.amp_ensemble.n, "system size N");
  ae->add_option("--n-samples", cfg.amp_ensemble.n_samples, "ensemble size");
  ae->add_option("--beta", cfg.amp_ensemble.betas, "unlabeled ratios");
  ae->add_option("--h", cfg.amp_ensemble.h, "model margin");
  ae->add_option("--g", cfg.amp_ensemble.g, "data margin (default: g = h)");
  ae->add_option("--alpha-max", cfg.amp_ensemble.alpha_max, "schedule end");
  ae->add_option("--alpha-step", cfg.amp_ensemble.alpha_step, "schedule step");
  ae->add_option("--max-iter", cfg.amp_ensemble.max_iter, "fine-tune sweeps");
  ae->add_option("--damping", cfg.amp_ensemble.damping, "AMP damping");
  ae->add_option("--update-rule", cfg.amp_ensemble.update_rule,
                 "bayes | verbatim");
  ae->add_flag("--label-in-field,!--no-label-in-field",
               cfg.amp_ensemble.label_in_field,
               "substitute a -> y a in the labeled channel");

  auto* sp = app.add_subcommand("spinodal", "bracket multi-solution windows");
  add_common(sp, config_path, cfg);
  sp->add_option("--h", cfg.spinodal.h_values, "model margin grid");
  sp->add_option("--alpha", cfg.spinodal.alpha_values, "labeled ratio grid");
  sp->add_option("--beta-lo", cfg.spinodal.beta_lo, "scan start");
  sp->add_option("--beta-hi", cfg.spinodal.beta_hi, "scan end");
  sp->add_option("--tol-beta", cfg.spinodal.tol_beta, "edge tolerance");

  auto* lc = app.add_subcommand("learning-curve",
                                "low-error branch log-log slope over beta");
  add_common(lc, config_path, cfg);
  lc->add_option("--h", cfg.learning_curve.h, "model margin");
  lc->add_option("--alpha", cfg.learning_curve.alpha, "labeled ratio");
  lc->add_option("--beta-lo", cfg.learning_curve.beta_lo, "fit range start");
  lc->add_option("--beta-hi", cfg.learning_curve.beta_hi, "fit range end");
  lc->add_option("--n-beta", cfg.learning_curve.n_beta, "fit points");

  auto* dg = app.add_subcommand("datagen", "write a synthetic dataset file");
  add_common(dg, config_path, cfg);
  dg->add_option("--n", cfg.datagen.n, "dimension N");
  dg->add_option("--l", cfg.datagen.l, "labeled count");
  dg->add_option("--u", cfg.datagen.u, "unlabeled count");
  dg->add_option("--g", cfg.datagen.g, "data margin");
  dg->add_flag("--verify,!--no-verify", cfg.datagen.verify,
               "reload and audit margins after writing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : semisup::harness::kConfigExit;
  }

  // config file (when given) provides the base; flags already parsed win
  if (!config_path.empty()) {
    try {
      ExperimentConfig base = ExperimentConfig::from_json_file(config_path);
      // re-parse the command line on top of the file values
      base.kind.clear();
      cfg = base;
      app.clear();
      app.parse(argc, argv);
    } catch (const semisup::harness::ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return semisup::harness::kConfigExit;
    } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? 0 : semisup::harness::kConfigExit;
    }
  }

  for (auto* sub : {pd, ae, sp, lc, dg}) {
    if (sub->parsed()) {
      cfg.kind = sub->get_name();
      break;
    }
  }

  try {
    semisup::harness::run_experiment(cfg);
  } catch (const semisup::harness::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return semisup::harness::kConfigExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return semisup::harness::kComputeExit;
  }
  return semisup::harness::kOk;
}
