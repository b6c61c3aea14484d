#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "semisup/amp.hpp"
#include "semisup/oracle.hpp"
#include "semisup/replica.hpp"
#include "semisup/specfun.hpp"
#include "semisup/synthdata.hpp"

namespace py = pybind11;
using namespace semisup;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Replica-symmetric theory and AMP experiments for semi-supervised "
      "perceptron learning with margin-structured data";

  // --- special functions ---
  m.def("h_tail", &specfun::h_tail, py::arg("x"),
        "Gaussian upper-tail probability H(x)");
  m.def("log_h_tail", &specfun::log_h_tail, py::arg("x"));
  m.def("h_prime", &specfun::h_prime, py::arg("x"));
  m.def("mills_ratio_neg", &specfun::mills_ratio_neg, py::arg("x"));
  m.def("g_marginal", &specfun::g_marginal, py::arg("a"), py::arg("b"),
        py::arg("h"), py::arg("z"));
  m.def("g_marginal_prime", &specfun::g_marginal_prime, py::arg("a"),
        py::arg("b"), py::arg("h"), py::arg("z"));

  py::class_<specfun::QuadratureRule>(m, "QuadratureRule")
      .def_static("gauss_hermite", &specfun::QuadratureRule::gauss_hermite,
                  py::arg("order") = specfun::QuadratureRule::kDefaultOrder)
      .def_readonly("nodes", &specfun::QuadratureRule::nodes)
      .def_readonly("weights", &specfun::QuadratureRule::weights)
      .def_readonly("order", &specfun::QuadratureRule::order);

  // --- replica theory ---
  py::class_<replica::LearningSetup>(m, "LearningSetup")
      .def(py::init([](double g, double h, double alpha, double beta) {
             replica::LearningSetup s;
             s.g = g;
             s.h = h;
             s.alpha = alpha;
             s.beta = beta;
             s.validate();
             return s;
           }),
           py::arg("g"), py::arg("h"), py::arg("alpha"), py::arg("beta"))
      .def_readwrite("g", &replica::LearningSetup::g)
      .def_readwrite("h", &replica::LearningSetup::h)
      .def_readwrite("alpha", &replica::LearningSetup::alpha)
      .def_readwrite("beta", &replica::LearningSetup::beta)
      .def("bayes_optimal", &replica::LearningSetup::bayes_optimal);

  py::class_<replica::OrderParams>(m, "OrderParams")
      .def_readonly("q", &replica::OrderParams::q)
      .def_readonly("m", &replica::OrderParams::m)
      .def_readonly("epsilon", &replica::OrderParams::epsilon)
      .def("__repr__", [](const replica::OrderParams& p) {
        return "OrderParams(q=" + std::to_string(p.q) +
               ", m=" + std::to_string(p.m) +
               ", epsilon=" + std::to_string(p.epsilon) + ")";
      });

  m.def("generalization_error", &replica::generalization_error, py::arg("q"));
  m.def(
      "rhs_single",
      [](double q, const replica::LearningSetup& s, int order) {
        return replica::rhs_single(
            q, s, specfun::QuadratureRule::gauss_hermite(order));
      },
      py::arg("q"), py::arg("setup"), py::arg("quad_order") = 201);
  m.def(
      "solve_fixed_point",
      [](const replica::LearningSetup& s, double q0, double damping,
         double tol, int max_iter, int order) {
        return replica::solve_fixed_point(
            s, q0, specfun::QuadratureRule::gauss_hermite(order), damping,
            tol, max_iter);
      },
      py::arg("setup"), py::arg("q0"), py::arg("damping") = 0.5,
      py::arg("tol") = 1e-10, py::arg("max_iter") = 5000,
      py::arg("quad_order") = 201);
  m.def(
      "find_all_roots",
      [](const replica::LearningSetup& s, int grid_size, int order) {
        return replica::find_all_roots(
            s, specfun::QuadratureRule::gauss_hermite(order), grid_size);
      },
      py::arg("setup"), py::arg("grid_size") = 400,
      py::arg("quad_order") = 201);
  m.def(
      "free_energy",
      [](double q, double mval, const replica::LearningSetup& s, int order) {
        replica::OrderParams p{q, mval, 0.0};
        return replica::free_energy(
            p, s, specfun::QuadratureRule::gauss_hermite(order));
      },
      py::arg("q"), py::arg("m"), py::arg("setup"),
      py::arg("quad_order") = 201);
  m.def(
      "spinodal_scan",
      [](const replica::LearningSetup& s, double beta_lo, double beta_hi,
         double tol_beta, int order) {
        const auto r = replica::spinodal_scan(
            s, beta_lo, beta_hi, specfun::QuadratureRule::gauss_hermite(order),
            tol_beta);
        py::dict d;
        d["beta_sp_lower"] =
            r.beta_sp_lower ? py::object(py::float_(*r.beta_sp_lower))
                            : py::object(py::none());
        d["beta_sp_upper"] =
            r.beta_sp_upper ? py::object(py::float_(*r.beta_sp_upper))
                            : py::object(py::none());
        d["n_solutions_inside"] = r.n_solutions_inside;
        return d;
      },
      py::arg("setup"), py::arg("beta_lo"), py::arg("beta_hi"),
      py::arg("tol_beta") = 0.5, py::arg("quad_order") = 201);

  // --- synthetic data ---
  py::class_<synthdata::Teacher>(m, "Teacher")
      .def_readonly("w0", &synthdata::Teacher::w0)
      .def_readonly("n", &synthdata::Teacher::n);
  py::class_<synthdata::Dataset>(m, "Dataset")
      .def_readonly("n", &synthdata::Dataset::n)
      .def_readonly("l_count", &synthdata::Dataset::l_count)
      .def_readonly("u_count", &synthdata::Dataset::u_count)
      .def_readonly("margin_g", &synthdata::Dataset::margin_g)
      .def_readonly("seed", &synthdata::Dataset::seed)
      .def_readonly("teacher", &synthdata::Dataset::teacher)
      .def("teacher_field", &synthdata::Dataset::teacher_field, py::arg("mu"));
  m.def("sample_teacher", &synthdata::sample_teacher, py::arg("n"),
        py::arg("seed"));
  m.def("make_dataset", &synthdata::make_dataset, py::arg("n"), py::arg("l"),
        py::arg("u"), py::arg("g"), py::arg("seed"));
  m.def("save_dataset", &synthdata::save_dataset, py::arg("dataset"),
        py::arg("path"));
  m.def("load_dataset", &synthdata::load_dataset, py::arg("path"));

  // --- AMP ---
  py::enum_<amp::UpdateRule>(m, "UpdateRule")
      .value("verbatim", amp::UpdateRule::verbatim)
      .value("bayes", amp::UpdateRule::bayes);
  py::class_<amp::AmpConfig>(m, "AmpConfig")
      .def(py::init<>())
      .def_readwrite("max_iter", &amp::AmpConfig::max_iter)
      .def_readwrite("rel_tol", &amp::AmpConfig::rel_tol)
      .def_readwrite("damping", &amp::AmpConfig::damping)
      .def_readwrite("divergence_bound", &amp::AmpConfig::divergence_bound)
      .def_readwrite("update_rule", &amp::AmpConfig::update_rule)
      .def_readwrite("label_in_field", &amp::AmpConfig::label_in_field)
      .def_readwrite("init_scale", &amp::AmpConfig::init_scale)
      .def_readwrite("record_trajectory", &amp::AmpConfig::record_trajectory);
  py::class_<amp::AmpResult>(m, "AmpResult")
      .def_readonly("w_hat", &amp::AmpResult::w_hat)
      .def_readonly("q_emp", &amp::AmpResult::q_emp)
      .def_readonly("epsilon_emp", &amp::AmpResult::epsilon_emp)
      .def_readonly("iterations_used", &amp::AmpResult::iterations_used)
      .def_readonly("converged", &amp::AmpResult::converged);
  m.def("channel_c", &amp::channel_c, py::arg("a"), py::arg("b"), py::arg("h"),
        py::arg("labeled"), py::arg("y") = 1);
  m.def("channel_d", &amp::channel_d, py::arg("a"), py::arg("b"), py::arg("h"),
        py::arg("labeled"), py::arg("y") = 1);
  m.def(
      "run_amp",
      [](const synthdata::Dataset& d, double h, const amp::AmpConfig& cfg,
         std::uint64_t seed) { return amp::run_amp(d, h, cfg, seed); },
      py::arg("dataset"), py::arg("h"), py::arg("config"),
      py::arg("init_seed") = 0);
  m.def("measure_overlap", &amp::measure_overlap, py::arg("w_hat"),
        py::arg("teacher"));
  m.def(
      "fine_tune_protocol",
      [](const synthdata::Teacher& t, double g, double h, double beta,
         const std::vector<double>& schedule, int n_samples,
         const amp::AmpConfig& cfg, std::uint64_t seed, int workers) {
        const auto pts = amp::fine_tune_protocol(t, g, h, beta, schedule,
                                                 n_samples, cfg, seed, workers);
        py::list out;
        for (const auto& p : pts) {
          py::dict d;
          d["alpha"] = p.alpha;
          d["mean_epsilon"] = p.mean_epsilon;
          d["stderr_epsilon"] = p.stderr_epsilon;
          d["diverged_count"] = p.diverged_count;
          d["sample_count"] = p.sample_count;
          out.append(d);
        }
        return out;
      },
      py::arg("teacher"), py::arg("g"), py::arg("h"), py::arg("beta"),
      py::arg("alpha_schedule"), py::arg("n_samples"), py::arg("config"),
      py::arg("seed"), py::arg("workers") = 1);

  // --- desk-scale posterior oracle ---
  py::class_<oracle::McmcConfig>(m, "McmcConfig")
      .def(py::init<>())
      .def_readwrite("n_sweeps", &oracle::McmcConfig::n_sweeps)
      .def_readwrite("burn_in", &oracle::McmcConfig::burn_in)
      .def_readwrite("proposal_step", &oracle::McmcConfig::proposal_step)
      .def_readwrite("seed", &oracle::McmcConfig::seed)
      .def_readwrite("n_chains", &oracle::McmcConfig::n_chains)
      .def_readwrite("thin", &oracle::McmcConfig::thin);
  m.def(
      "posterior_sample_overlap",
      [](const synthdata::Dataset& d, double h, const oracle::McmcConfig& cfg) {
        const auto r = oracle::posterior_sample_overlap(d, h, cfg);
        py::dict out;
        out["mean_overlap"] = r.mean_overlap;
        out["stderr_overlap"] = r.stderr_overlap;
        out["acceptance_rate"] = r.acceptance_rate;
        out["tuned_step"] = r.tuned_step;
        return out;
      },
      py::arg("dataset"), py::arg("h"), py::arg("config"));

  m.attr("__version__") = "0.1.0";
}
