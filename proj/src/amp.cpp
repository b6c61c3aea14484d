#include "semisup/amp.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "semisup/rng.hpp"
#include "semisup/specfun.hpp"

namespace semisup::amp {

using specfun::log_h_tail;
using specfun::log_phi;

namespace {

constexpr std::uint64_t kInitTag = 0xa39f11b2ULL;
constexpr std::uint64_t kProtoTag = 0x5a3d77c1ULL;

struct ChannelPair {
  double c, d;
};

// Scale-invariant evaluation of the unlabeled channel: every H and phi is
// divided by the dominant tail, so the ratios survive when both underflow.
ChannelPair unlabeled_channel(double a, double b, double h, bool d_minus) {
  const double sb = std::sqrt(b);
  const double zm = (h - a) / sb;
  const double zp = (h + a) / sb;
  const double lhm = log_h_tail(zm);
  const double lhp = log_h_tail(zp);
  const double lpm = log_phi(zm);
  const double lpp = log_phi(zp);
  const double ref = std::max(lhm, lhp);
  const double hm = std::exp(lhm - ref);
  const double hp = std::exp(lhp - ref);
  auto rescale = [&](double lv) {
    const double e = lv - ref;
    return e < -745.0 ? 0.0 : std::exp(e);
  };
  const double pm = rescale(lpm);
  const double pp = rescale(lpp);
  const double den = hm + hp;
  ChannelPair out;
  out.c = (pm - pp) / (sb * den);
  const double corr = (zm * pm + zp * pp) / (b * den);
  out.d = out.c * out.c + (d_minus ? -corr : corr);
  return out;
}

ChannelPair labeled_channel(double a, double b, double h, int y,
                            bool label_in_field) {
  const double sb = std::sqrt(b);
  const double a_eff = label_in_field ? y * a : a;
  const double zm = (h - a_eff) / sb;
  // phi(zm)/H(zm) = -mills_ratio_neg(zm), stable for any zm
  const double ratio = -specfun::mills_ratio_neg(zm);
  ChannelPair out;
  out.c = y * ratio / sb;
  out.d = out.c * out.c - y * zm * out.c / sb;
  return out;
}

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check_state(const AmpState& s, double bound) {
  auto bad = [bound](double v) { return !std::isfinite(v) || std::fabs(v) > bound; };
  if (bad(s.kappa) || bad(s.b_scalar))
    throw DivergenceError("amp: scalar state diverged");
  for (double v : s.a_comp)
    if (bad(v)) throw DivergenceError("amp: a_comp diverged");
  for (double v : s.a_data)
    if (bad(v)) throw DivergenceError("amp: a_data diverged");
}

void step_into(const AmpState& state, const synthdata::Dataset& data, double h,
               const AmpConfig& cfg, AmpState& next) {
  const int n = data.n;
  const int rows = data.rows();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  const double b = 1.0 / state.kappa;
  const bool d_minus = cfg.update_rule == UpdateRule::bayes;

  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = state.a_comp[k] / state.kappa;

  std::vector<double> c_vals(rows), d_vals(rows);
  for (int mu = 0; mu < rows; ++mu) {
    ChannelPair ch =
        mu < data.l_count
            ? labeled_channel(state.a_data[mu], b, h, data.labels[mu],
                              cfg.label_in_field)
            : unlabeled_channel(state.a_data[mu], b, h, d_minus);
    c_vals[mu] = ch.c;
    d_vals[mu] = ch.d;
  }

  double d_sum = 0.0;
  for (int mu = 0; mu < rows; ++mu) d_sum += d_vals[mu];
  const double b_new = d_sum / n;

  next.a_comp.assign(n, 0.0);
  next.a_data.assign(rows, 0.0);
  next.t = state.t + 1;

  // x^T C (features consumed as x/sqrt(N))
  for (int mu = 0; mu < rows; ++mu) {
    const double* x = data.row(mu);
    const double c = c_vals[mu] * inv_sqrt_n;
    for (int k = 0; k < n; ++k) next.a_comp[k] += x[k] * c;
  }

  if (cfg.update_rule == UpdateRule::verbatim) {
    double a2 = 0.0;
    for (int k = 0; k < n; ++k) a2 += state.a_comp[k] * state.a_comp[k];
    next.kappa = 0.5 * (1.0 + 4.0 * a2 / n);
    next.b_scalar = b_new;
    for (int k = 0; k < n; ++k) {
      const double raw = next.a_comp[k] + state.b_scalar * state.a_comp[k];
      next.a_comp[k] =
          cfg.damping * raw + (1.0 - cfg.damping) * state.a_comp[k];
    }
    // a_mu update from the t-state weight vector
    for (int mu = 0; mu < rows; ++mu) {
      const double* x = data.row(mu);
      double f = 0.0;
      for (int k = 0; k < n; ++k) f += x[k] * w[k];
      next.a_data[mu] = f * inv_sqrt_n - c_vals[mu] / state.kappa;
    }
  } else {
    // spherical-prior input step. R = w + (x^T C)/lambda is the effective
    // observation; the posterior mean on |w|^2 = N is R rescaled, with
    // per-component variance V = sqrt(N)/(lambda |R|). The norm constraint
    // is what keeps the hard-margin channel from running away (a Gaussian
    // shrinkage here lets kappa grow without bound).
    const double lambda = std::max(b_new, 1e-8);
    std::vector<double> r(n);
    double r_norm2 = 0.0;
    for (int k = 0; k < n; ++k) {
      r[k] = w[k] + next.a_comp[k] / lambda;  // next.a_comp holds x^T C
      r_norm2 += r[k] * r[k];
    }
    const double r_norm = std::sqrt(std::max(r_norm2, 1e-300));
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    double v_new = sqrt_n / (lambda * r_norm);
    v_new = std::clamp(v_new, 1e-10, 1.0);
    const double rho = std::sqrt(std::max(1.0 - v_new, 0.0));
    const double scale = sqrt_n * rho / r_norm;

    next.kappa = 1.0 / v_new;  // channel variance b = 1/kappa = V
    next.b_scalar = b_new;
    std::vector<double> w_new(n);
    for (int k = 0; k < n; ++k) {
      w_new[k] = cfg.damping * (r[k] * scale) + (1.0 - cfg.damping) * w[k];
      next.a_comp[k] = w_new[k] * next.kappa;
    }
    for (int mu = 0; mu < rows; ++mu) {
      const double* x = data.row(mu);
      double f = 0.0;
      for (int k = 0; k < n; ++k) f += x[k] * w_new[k];
      const double raw = f * inv_sqrt_n - v_new * c_vals[mu];
      next.a_data[mu] =
          cfg.damping * raw + (1.0 - cfg.damping) * state.a_data[mu];
    }
  }
  check_state(next, cfg.divergence_bound);
}

}  // namespace

double channel_c(double a, double b, double h, bool labeled, int y) {
  if (!(b > 0.0)) throw std::domain_error("channel_c: b must be > 0");
  const ChannelPair ch = labeled ? labeled_channel(a, b, h, y, false)
                                 : unlabeled_channel(a, b, h, false);
  if (!std::isfinite(ch.c)) throw std::runtime_error("channel_c: diverged");
  return ch.c;
}

double channel_d(double a, double b, double h, bool labeled, int y) {
  if (!(b > 0.0)) throw std::domain_error("channel_d: b must be > 0");
  const ChannelPair ch = labeled ? labeled_channel(a, b, h, y, false)
                                 : unlabeled_channel(a, b, h, false);
  if (!std::isfinite(ch.d)) throw std::runtime_error("channel_d: diverged");
  return ch.d;
}

AmpState amp_step(const AmpState& state, const synthdata::Dataset& data,
                  double h, const AmpConfig& config) {
  AmpState next;
  step_into(state, data, h, config, next);
  return next;
}

AmpState make_initial_state(const synthdata::Dataset& data,
                            const AmpConfig& config, std::uint64_t seed) {
  AmpState s;
  s.a_data.assign(data.rows(), 0.0);
  s.a_comp.resize(data.n);
  Rng rng(derive_seed(seed, kInitTag, 0));
  for (auto& v : s.a_comp) v = config.init_scale * rng.normal();
  s.kappa = 1.0;
  s.b_scalar = 0.0;
  s.t = 0;
  return s;
}

double measure_overlap(const std::vector<double>& w_hat,
                       const synthdata::Teacher& teacher) {
  if (static_cast<int>(w_hat.size()) != teacher.n)
    throw std::invalid_argument("measure_overlap: size mismatch");
  double dot = 0.0, nw = 0.0, nt = 0.0;
  for (int k = 0; k < teacher.n; ++k) {
    dot += w_hat[k] * teacher.w0[k];
    nw += w_hat[k] * w_hat[k];
    nt += teacher.w0[k] * teacher.w0[k];
  }
  if (nw == 0.0 || nt == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nw) * std::sqrt(nt));
  return std::clamp(c, -1.0, 1.0);
}

namespace {

AmpResult run_amp_impl(const synthdata::Dataset& data, double h,
                       const AmpConfig& config, AmpState state) {
  const auto t_start = std::chrono::steady_clock::now();
  AmpResult result;
  AmpState next;
  bool converged = false;
  int t = 0;
  for (; t < config.max_iter; ++t) {
    try {
      step_into(state, data, h, config, next);
    } catch (const DivergenceError&) {
      break;  // surface as converged = false with the last finite state
    }
    double dn = 0.0, nn = 0.0;
    for (int k = 0; k < data.n; ++k) {
      const double wn = next.a_comp[k] / next.kappa;
      const double wo = state.a_comp[k] / state.kappa;
      dn += (wn - wo) * (wn - wo);
      nn += wo * wo;
    }
    const double rel = std::sqrt(dn) / std::max(std::sqrt(nn), 1e-300);
    std::swap(state, next);
    if (config.record_trajectory) {
      std::vector<double> w(data.n);
      for (int k = 0; k < data.n; ++k) w[k] = state.a_comp[k] / state.kappa;
      result.trajectory.push_back({state.t, measure_overlap(w, data.teacher),
                                   rel, state.kappa, state.b_scalar});
    }
    if (rel < config.rel_tol) {
      converged = true;
      ++t;
      break;
    }
  }
  result.iterations_used = t;
  result.converged = converged;
  result.w_hat.resize(data.n);
  for (int k = 0; k < data.n; ++k)
    result.w_hat[k] = state.a_comp[k] / state.kappa;
  result.q_emp = measure_overlap(result.w_hat, data.teacher);
  result.epsilon_emp = std::acos(std::clamp(result.q_emp, -1.0, 1.0)) / M_PI;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace

AmpResult run_amp(const synthdata::Dataset& data, double h,
                  const AmpConfig& config, const AmpState& init) {
  return run_amp_impl(data, h, config, init);
}

AmpResult run_amp(const synthdata::Dataset& data, double h,
                  const AmpConfig& config, std::uint64_t init_seed) {
  return run_amp_impl(data, h, config,
                      make_initial_state(data, config, init_seed));
}

std::vector<ProtocolPoint> fine_tune_protocol(
    const synthdata::Teacher& teacher, double g, double h, double beta,
    const std::vector<double>& alpha_schedule, int n_samples,
    const AmpConfig& config, std::uint64_t seed, int workers) {
  if (alpha_schedule.empty() || alpha_schedule.front() != 0.0)
    throw std::invalid_argument(
        "fine_tune_protocol: schedule must be ascending and start at 0");
  for (std::size_t i = 1; i < alpha_schedule.size(); ++i)
    if (alpha_schedule[i] <= alpha_schedule[i - 1])
      throw std::invalid_argument("fine_tune_protocol: schedule not ascending");
  if (n_samples < 1)
    throw std::invalid_argument("fine_tune_protocol: n_samples >= 1");

  const int n = teacher.n;
  const int u_count = static_cast<int>(std::lround(beta * n));
  const int l_max =
      static_cast<int>(std::lround(alpha_schedule.back() * n));
  const std::size_t n_alpha = alpha_schedule.size();

  // per (sample, alpha): epsilon and divergence flag
  std::vector<double> eps(static_cast<std::size_t>(n_samples) * n_alpha, 0.0);
  std::vector<std::uint8_t> bad(eps.size(), 0);

  std::vector<std::thread> pool;
  std::atomic<int> next_sample{0};

  auto run_sample_full = [&](int s) {
    const std::uint64_t sample_seed = derive_seed(seed, kProtoTag, s);

    std::vector<double> lab_feat;
    std::vector<std::int8_t> lab_y;
    synthdata::sample_labeled(teacher, g, l_max, sample_seed, lab_feat, lab_y);
    std::vector<double> unl_feat;
    synthdata::sample_unlabeled(teacher, g, u_count, sample_seed, unl_feat);

    AmpState st;
    bool have_state = false;
    int prev_l = 0;

    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
      const int l_count =
          static_cast<int>(std::lround(alpha_schedule[ai] * n));
      synthdata::Dataset d;
      d.n = n;
      d.l_count = l_count;
      d.u_count = u_count;
      d.margin_g = g;
      d.seed = sample_seed;
      d.teacher = teacher;
      d.labels.assign(lab_y.begin(), lab_y.begin() + l_count);
      d.features.resize(static_cast<std::size_t>(l_count + u_count) * n);
      std::copy(lab_feat.begin(),
                lab_feat.begin() + static_cast<std::size_t>(l_count) * n,
                d.features.begin());
      std::copy(unl_feat.begin(), unl_feat.end(),
                d.features.begin() + static_cast<std::size_t>(l_count) * n);

      if (!have_state) {
        st = make_initial_state(d, config, sample_seed);
        have_state = true;
      } else if (l_count != prev_l) {
        // keep messages of retained data, zero the freshly appended rows
        std::vector<double> a_new(l_count + u_count, 0.0);
        std::copy(st.a_data.begin(), st.a_data.begin() + prev_l,
                  a_new.begin());
        std::copy(st.a_data.begin() + prev_l, st.a_data.end(),
                  a_new.begin() + l_count);
        st.a_data = std::move(a_new);
      }
      prev_l = l_count;

      AmpConfig cfg = config;
      cfg.record_trajectory = false;

      // iterate in place so the final state persists for the warm start
      AmpState next;
      bool diverged = false;
      int iters = 0;
      for (; iters < cfg.max_iter; ++iters) {
        try {
          step_into(st, d, h, cfg, next);
        } catch (const DivergenceError&) {
          diverged = true;
          break;
        }
        double dn = 0.0, nn = 0.0;
        for (int k = 0; k < n; ++k) {
          const double wn = next.a_comp[k] / next.kappa;
          const double wo = st.a_comp[k] / st.kappa;
          dn += (wn - wo) * (wn - wo);
          nn += wo * wo;
        }
        const double rel = std::sqrt(dn) / std::max(std::sqrt(nn), 1e-300);
        std::swap(st, next);
        if (rel < cfg.rel_tol) break;
      }

      std::vector<double> w(n);
      for (int k = 0; k < n; ++k) w[k] = st.a_comp[k] / st.kappa;
      const double q = measure_overlap(w, teacher);
      const std::size_t idx = static_cast<std::size_t>(s) * n_alpha + ai;
      eps[idx] = std::acos(std::clamp(q, -1.0, 1.0)) / M_PI;
      bad[idx] = diverged ? 1 : 0;
    }
  };

  const int n_workers = std::max(1, workers);
  for (int wk = 0; wk < n_workers; ++wk) {
    pool.emplace_back([&]() {
      for (;;) {
        const int s = next_sample.fetch_add(1);
        if (s >= n_samples) return;
        run_sample_full(s);
      }
    });
  }
  for (auto& th : pool) th.join();

  std::vector<ProtocolPoint> out(n_alpha);
  for (std::size_t ai = 0; ai < n_alpha; ++ai) {
    ProtocolPoint& p = out[ai];
    p.alpha = alpha_schedule[ai];
    double sum = 0.0, sum2 = 0.0;
    int good = 0, div = 0;
    for (int s = 0; s < n_samples; ++s) {
      const std::size_t idx = static_cast<std::size_t>(s) * n_alpha + ai;
      if (bad[idx]) {
        ++div;
        continue;
      }
      sum += eps[idx];
      sum2 += eps[idx] * eps[idx];
      ++good;
    }
    p.diverged_count = div;
    p.sample_count = good;
    if (good > 0) {
      p.mean_epsilon = sum / good;
      if (good > 1) {
        const double var =
            std::max(0.0, (sum2 - sum * sum / good) / (good - 1));
        p.stderr_epsilon = std::sqrt(var / good);
      }
    }
  }
  return out;
}

void write_trajectory(const AmpResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_trajectory: cannot open " + path);
  out << "iteration,q_emp,rel_dw,kappa,B\n";
  char buf[256];
  for (const auto& row : result.trajectory) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n",
                  row.iteration, row.q_emp, row.rel_dw, row.kappa,
                  row.b_scalar);
    out << buf;
  }
}

}  // namespace semisup::amp
