#include "semisup/harness.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace semisup::harness {

using nlohmann::json;

namespace detail {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json(const PhaseDiagramParams& p) {
  return json{{"h_values", p.h_values},   {"alpha_values", p.alpha_values},
              {"g", p.g},                 {"n_beta", p.n_beta},
              {"beta_min", p.beta_min},   {"beta_max", p.beta_max},
              {"quad_order", p.quad_order}, {"damping", p.damping},
              {"tol", p.tol},             {"max_iter", p.max_iter}};
}

void from_json(const json& j, PhaseDiagramParams& p) {
  get_if(j, "h_values", p.h_values);
  get_if(j, "alpha_values", p.alpha_values);
  get_if(j, "g", p.g);
  get_if(j, "n_beta", p.n_beta);
  get_if(j, "beta_min", p.beta_min);
  get_if(j, "beta_max", p.beta_max);
  get_if(j, "quad_order", p.quad_order);
  get_if(j, "damping", p.damping);
  get_if(j, "tol", p.tol);
  get_if(j, "max_iter", p.max_iter);
}

json to_json(const AmpEnsembleParams& p) {
  return json{{"n", p.n},
              {"n_samples", p.n_samples},
              {"betas", p.betas},
              {"h", p.h},
              {"g", p.g},
              {"alpha_max", p.alpha_max},
              {"alpha_step", p.alpha_step},
              {"max_iter", p.max_iter},
              {"rel_tol", p.rel_tol},
              {"damping", p.damping},
              {"update_rule", p.update_rule},
              {"label_in_field", p.label_in_field}};
}

void from_json(const json& j, AmpEnsembleParams& p) {
  get_if(j, "n", p.n);
  get_if(j, "n_samples", p.n_samples);
  get_if(j, "betas", p.betas);
  get_if(j, "h", p.h);
  get_if(j, "g", p.g);
  get_if(j, "alpha_max", p.alpha_max);
  get_if(j, "alpha_step", p.alpha_step);
  get_if(j, "max_iter", p.max_iter);
  get_if(j, "rel_tol", p.rel_tol);
  get_if(j, "damping", p.damping);
  get_if(j, "update_rule", p.update_rule);
  get_if(j, "label_in_field", p.label_in_field);
}

json to_json(const SpinodalParams& p) {
  return json{{"h_values", p.h_values}, {"alpha_values", p.alpha_values},
              {"g", p.g},               {"beta_lo", p.beta_lo},
              {"beta_hi", p.beta_hi},   {"tol_beta", p.tol_beta},
              {"quad_order", p.quad_order}};
}

void from_json(const json& j, SpinodalParams& p) {
  get_if(j, "h_values", p.h_values);
  get_if(j, "alpha_values", p.alpha_values);
  get_if(j, "g", p.g);
  get_if(j, "beta_lo", p.beta_lo);
  get_if(j, "beta_hi", p.beta_hi);
  get_if(j, "tol_beta", p.tol_beta);
  get_if(j, "quad_order", p.quad_order);
}

json to_json(const LearningCurveParams& p) {
  return json{{"h", p.h},           {"g", p.g},
              {"alpha", p.alpha},   {"beta_lo", p.beta_lo},
              {"beta_hi", p.beta_hi}, {"n_beta", p.n_beta},
              {"quad_order", p.quad_order}};
}

void from_json(const json& j, LearningCurveParams& p) {
  get_if(j, "h", p.h);
  get_if(j, "g", p.g);
  get_if(j, "alpha", p.alpha);
  get_if(j, "beta_lo", p.beta_lo);
  get_if(j, "beta_hi", p.beta_hi);
  get_if(j, "n_beta", p.n_beta);
  get_if(j, "quad_order", p.quad_order);
}

json to_json(const DatagenParams& p) {
  return json{{"n", p.n}, {"l", p.l}, {"u", p.u}, {"g", p.g},
              {"verify", p.verify}};
}

void from_json(const json& j, DatagenParams& p) {
  get_if(j, "n", p.n);
  get_if(j, "l", p.l);
  get_if(j, "u", p.u);
  get_if(j, "g", p.g);
  get_if(j, "verify", p.verify);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg;
  cfg.apply_json_text(ss.str());
  return cfg;
}

void ExperimentConfig::apply_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    get_if(j, "kind", kind);
    get_if(j, "master_seed", master_seed);
    get_if(j, "workers", workers);
    get_if(j, "out", out_path);
    if (j.contains("phase_diagram")) from_json(j["phase_diagram"], phase_diagram);
    if (j.contains("amp_ensemble")) from_json(j["amp_ensemble"], amp_ensemble);
    if (j.contains("spinodal")) from_json(j["spinodal"], spinodal);
    if (j.contains("learning_curve")) from_json(j["learning_curve"], learning_curve);
    if (j.contains("datagen")) from_json(j["datagen"], datagen);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

std::string ExperimentConfig::canonical_json() const {
  json j{{"kind", kind},
         {"master_seed", master_seed},
         {"workers", workers},
         {"out", out_path},
         {"phase_diagram", to_json(phase_diagram)},
         {"amp_ensemble", to_json(amp_ensemble)},
         {"spinodal", to_json(spinodal)},
         {"learning_curve", to_json(learning_curve)},
         {"datagen", to_json(datagen)}};
  return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const {
  // the hash must not depend on scheduling-only knobs
  ExperimentConfig c = *this;
  c.workers = 0;
  return detail::fnv1a(c.canonical_json());
}

void ExperimentConfig::validate() const {
  static const char* kinds[] = {"phase-diagram", "amp-ensemble", "spinodal",
                                "learning-curve", "datagen"};
  bool ok = false;
  for (const char* k : kinds) ok = ok || kind == k;
  if (!ok) throw ConfigError("unknown experiment kind: '" + kind + "'");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (out_path.empty()) throw ConfigError("output path required (--out)");

  auto margins_ok = [](double h, double g) {
    return h >= 0.0 && (g < 0.0 || g >= 0.0);
  };
  if (kind == "phase-diagram") {
    const auto& p = phase_diagram;
    if (p.h_values.empty() || p.alpha_values.empty())
      throw ConfigError("phase-diagram: empty h or alpha grid");
    for (double h : p.h_values)
      if (!(h >= 0.0)) throw ConfigError("phase-diagram: h must be >= 0");
    for (double a : p.alpha_values)
      if (!(a >= 0.0)) throw ConfigError("phase-diagram: alpha must be >= 0");
    if (p.n_beta < 2) throw ConfigError("phase-diagram: n_beta >= 2");
    if (p.quad_order < 1 || p.quad_order > 600)
      throw ConfigError("phase-diagram: quad_order out of range");
  } else if (kind == "amp-ensemble") {
    const auto& p = amp_ensemble;
    if (p.n < 2) throw ConfigError("amp-ensemble: n >= 2");
    if (p.n_samples < 1) throw ConfigError("amp-ensemble: n_samples >= 1");
    if (p.betas.empty()) throw ConfigError("amp-ensemble: empty beta list");
    if (!margins_ok(p.h, p.g)) throw ConfigError("amp-ensemble: bad margins");
    if (!(p.alpha_step > 0.0) || !(p.alpha_max >= 0.0))
      throw ConfigError("amp-ensemble: bad alpha schedule");
    if (p.update_rule != "bayes" && p.update_rule != "verbatim")
      throw ConfigError("amp-ensemble: update_rule must be bayes|verbatim");
  } else if (kind == "spinodal") {
    const auto& p = spinodal;
    if (p.h_values.empty() || p.alpha_values.empty())
      throw ConfigError("spinodal: empty h or alpha grid");
    if (!(p.beta_hi > p.beta_lo)) throw ConfigError("spinodal: bad beta range");
    if (!(p.tol_beta > 0.0)) throw ConfigError("spinodal: tol_beta > 0");
  } else if (kind == "learning-curve") {
    const auto& p = learning_curve;
    if (!(p.beta_hi > p.beta_lo) || p.n_beta < 2)
      throw ConfigError("learning-curve: bad beta grid");
  } else if (kind == "datagen") {
    const auto& p = datagen;
    if (p.n < 2) throw ConfigError("datagen: n >= 2");
    if (p.l < 0 || p.u < 0) throw ConfigError("datagen: l, u >= 0");
    if (!(p.g >= 0.0)) throw ConfigError("datagen: g >= 0");
  }
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int n_threads = std::min(std::max(1, workers), n);
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace semisup::harness
