#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "semisup/harness.hpp"
#include "semisup/synthdata.hpp"

using namespace semisup::harness;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("config parsing, validation, hashing") {
  ExperimentConfig cfg;
  cfg.apply_json_text(R"({"kind":"datagen","master_seed":7,"out":"x.bin",
                          "datagen":{"n":50,"l":10,"u":20,"g":0.1}})");
  CHECK(cfg.kind == "datagen");
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.datagen.n == 50);
  cfg.validate();

  // hash is stable under scheduling-only knobs, sensitive to physics knobs
  const auto h1 = cfg.config_hash();
  cfg.workers = 16;
  CHECK(cfg.config_hash() == h1);
  cfg.datagen.g = 0.2;
  CHECK(cfg.config_hash() != h1);

  ExperimentConfig bad;
  bad.kind = "nonsense";
  bad.out_path = "x";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig().apply_json_text("{invalid"), ConfigError);
  ExperimentConfig noout;
  noout.kind = "datagen";
  noout.out_path = "";
  CHECK_THROWS_AS(noout.validate(), ConfigError);
}

TEST_CASE("datagen experiment round trips and reproduces") {
  ExperimentConfig cfg;
  cfg.kind = "datagen";
  cfg.master_seed = 99;
  cfg.out_path = "harness_ds.bin";
  cfg.datagen = {40, 20, 60, 0.15, true};
  run_experiment(cfg);
  const auto first = slurp(cfg.out_path);
  run_experiment(cfg);
  const auto second = slurp(cfg.out_path);
  CHECK(first == second);

  const auto loaded = semisup::synthdata::load_dataset(cfg.out_path);
  CHECK(loaded.n == 40);
  CHECK(loaded.l_count == 20);
  CHECK(loaded.u_count == 60);
  CHECK(loaded.seed == 99);
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("learning-curve experiment CSV") {
  ExperimentConfig cfg;
  cfg.kind = "learning-curve";
  cfg.out_path = "harness_lc.csv";
  cfg.learning_curve.h = 0.05;
  cfg.learning_curve.alpha = 1.0;
  cfg.learning_curve.beta_lo = 400.0;
  cfg.learning_curve.beta_hi = 800.0;
  cfg.learning_curve.n_beta = 3;
  run_experiment(cfg);
  const auto body = slurp(cfg.out_path);
  CHECK(count_lines(body) == 5);  // metadata + header + 3 rows
  CHECK(body.find("# semisup-csv v1 kind=learning-curve config_hash=") == 0);
  CHECK(body.find("slope=") != std::string::npos);
  CHECK(body.find("beta,q,epsilon") != std::string::npos);

  run_experiment(cfg);
  CHECK(slurp(cfg.out_path) == body);  // byte-identical rerun
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("spinodal experiment CSV") {
  ExperimentConfig cfg;
  cfg.kind = "spinodal";
  cfg.out_path = "harness_sp.csv";
  cfg.workers = 2;
  cfg.spinodal.h_values = {0.1};
  cfg.spinodal.alpha_values = {1.0};
  cfg.spinodal.beta_lo = 1.0;
  cfg.spinodal.beta_hi = 2000.0;
  cfg.spinodal.tol_beta = 5.0;
  run_experiment(cfg);
  const auto body = slurp(cfg.out_path);
  CHECK(count_lines(body) == 3);
  CHECK(body.find("h,alpha,beta_sp_lower,beta_sp_upper") != std::string::npos);
  // the h=0.1, alpha=1 window exists well inside this range
  std::istringstream rows(body);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  std::getline(rows, line);
  std::istringstream cells(line);
  std::string c;
  std::getline(cells, c, ',');
  CHECK(std::stod(c) == doctest::Approx(0.1));
  std::getline(cells, c, ',');
  std::getline(cells, c, ',');
  CHECK(!c.empty());  // lower edge present
  std::getline(cells, c, ',');
  CHECK(!c.empty());  // upper edge present

  run_experiment(cfg);
  CHECK(slurp(cfg.out_path) == body);
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("phase-diagram experiment CSV") {
  ExperimentConfig cfg;
  cfg.kind = "phase-diagram";
  cfg.out_path = "harness_pd.csv";
  cfg.workers = 2;
  cfg.phase_diagram.h_values = {0.1};
  cfg.phase_diagram.alpha_values = {1.0};
  cfg.phase_diagram.n_beta = 12;
  cfg.phase_diagram.beta_min = 1.0;
  cfg.phase_diagram.beta_max = 150.0;
  run_experiment(cfg);
  const auto body = slurp(cfg.out_path);
  CHECK(count_lines(body) == 2 + 2 * 12);  // two sweeps
  CHECK(body.find(
            "h,g,alpha,beta,branch,q,m,epsilon,free_energy,stable,"
            "sweep_direction,status") != std::string::npos);
  CHECK(body.find("ascending") != std::string::npos);
  CHECK(body.find("descending") != std::string::npos);

  run_experiment(cfg);
  CHECK(slurp(cfg.out_path) == body);
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("amp-ensemble experiment CSV") {
  ExperimentConfig cfg;
  cfg.kind = "amp-ensemble";
  cfg.out_path = "harness_ae.csv";
  cfg.workers = 2;
  cfg.amp_ensemble.n = 40;
  cfg.amp_ensemble.n_samples = 3;
  cfg.amp_ensemble.betas = {30.0};
  cfg.amp_ensemble.alpha_max = 1.0;
  cfg.amp_ensemble.alpha_step = 0.5;
  run_experiment(cfg);
  const auto body = slurp(cfg.out_path);
  CHECK(count_lines(body) == 2 + 3);  // alpha in {0, 0.5, 1.0}
  CHECK(body.find("beta,alpha,mean_epsilon,stderr_epsilon,diverged_count") !=
        std::string::npos);
  run_experiment(cfg);
  CHECK(slurp(cfg.out_path) == body);

  // worker count must not change the bytes
  cfg.workers = 1;
  run_experiment(cfg);
  CHECK(slurp(cfg.out_path) == body);
  std::remove(cfg.out_path.c_str());
}
