#include "semisup/oracle.hpp"

#include <algorithm>
#include <vector>

#include "semisup/rng.hpp"

namespace semisup::oracle {

namespace {

constexpr std::uint64_t kChainTag = 0x9c41c7a3ULL;

bool feasible(const synthdata::Dataset& data, double h,
              const std::vector<double>& w) {
  const int n = data.n;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (int mu = 0; mu < data.rows(); ++mu) {
    const double* x = data.row(mu);
    double f = 0.0;
    for (int k = 0; k < n; ++k) f += x[k] * w[k];
    f *= inv_sqrt_n;
    if (mu < data.l_count) {
      if (data.labels[mu] * f <= h) return false;
    } else {
      if (std::fabs(f) <= h) return false;
    }
  }
  return true;
}

void propose(const std::vector<double>& w, double step, Rng& rng,
             std::vector<double>& out) {
  const int n = static_cast<int>(w.size());
  double norm2 = 0.0;
  for (int k = 0; k < n; ++k) {
    out[k] = w[k] + step * rng.normal();
    norm2 += out[k] * out[k];
  }
  const double scale = std::sqrt(n / norm2);
  for (int k = 0; k < n; ++k) out[k] *= scale;
}

struct ChainStats {
  std::vector<double> batch_means;
  std::vector<double> samples;
  long accepted = 0;
  long proposed = 0;
  double step = 0.0;
};

ChainStats run_chain(const synthdata::Dataset& data, double h,
                     const McmcConfig& cfg, std::uint64_t chain_seed) {
  const int n = data.n;
  Rng rng(chain_seed);
  std::vector<double> w = data.teacher.w0;  // feasible start for h <= g
  if (!feasible(data, h, w))
    throw std::invalid_argument(
        "posterior_sample_overlap: teacher infeasible (is h <= g?)");
  std::vector<double> prop(n);

  // tune the step to 20-40% acceptance on short pilot runs
  double step = cfg.proposal_step;
  for (int round = 0; round < 40; ++round) {
    int acc = 0;
    const int pilot = 200;
    for (int t = 0; t < pilot; ++t) {
      propose(w, step, rng, prop);
      if (feasible(data, h, prop)) {
        w.swap(prop);
        ++acc;
      }
    }
    const double rate = static_cast<double>(acc) / pilot;
    if (rate < 0.20)
      step *= 0.65;
    else if (rate > 0.40)
      step *= 1.4;
    else
      break;
    if (step < 1e-12)
      throw ZeroAcceptanceError(
          "posterior_sample_overlap: chain frozen, step underflow");
  }

  ChainStats stats;
  stats.step = step;
  const int n_batches = 25;
  const long measured = std::max(1, (cfg.n_sweeps - cfg.burn_in) / cfg.thin);
  const long per_batch = std::max<long>(1, measured / n_batches);
  double batch_acc = 0.0;
  long batch_count = 0;

  const double inv_n = 1.0 / n;
  for (int t = 0; t < cfg.n_sweeps; ++t) {
    propose(w, step, rng, prop);
    ++stats.proposed;
    if (feasible(data, h, prop)) {
      w.swap(prop);
      ++stats.accepted;
    }
    if (t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0) {
      double ov = 0.0;
      for (int k = 0; k < n; ++k) ov += w[k] * data.teacher.w0[k];
      stats.samples.push_back(ov * inv_n);
      batch_acc += ov * inv_n;
      if (++batch_count == per_batch) {
        stats.batch_means.push_back(batch_acc / batch_count);
        batch_acc = 0.0;
        batch_count = 0;
      }
    }
  }
  if (batch_count > 0) stats.batch_means.push_back(batch_acc / batch_count);
  return stats;
}

}  // namespace

McmcResult posterior_sample_overlap(const synthdata::Dataset& data, double h,
                                    const McmcConfig& cfg) {
  if (cfg.burn_in >= cfg.n_sweeps)
    throw std::invalid_argument("McmcConfig: burn_in < n_sweeps required");
  if (cfg.proposal_step <= 0.0)
    throw std::invalid_argument("McmcConfig: proposal_step > 0 required");
  if (data.n > 64)
    throw std::invalid_argument(
        "posterior_sample_overlap: desk-scale sampler (N <= 64)");

  std::vector<double> means;
  long accepted = 0, proposed = 0;
  double step_sum = 0.0;
  McmcResult result;
  for (int c = 0; c < cfg.n_chains; ++c) {
    auto stats = run_chain(data, h, cfg, derive_seed(cfg.seed, kChainTag, c));
    means.insert(means.end(), stats.batch_means.begin(),
                 stats.batch_means.end());
    result.samples.insert(result.samples.end(), stats.samples.begin(),
                          stats.samples.end());
    accepted += stats.accepted;
    proposed += stats.proposed;
    step_sum += stats.step;
  }
  if (accepted == 0)
    throw ZeroAcceptanceError("posterior_sample_overlap: no accepted moves");

  result.acceptance_rate = static_cast<double>(accepted) / proposed;
  result.tuned_step = step_sum / cfg.n_chains;
  double sum = 0.0;
  for (double v : means) sum += v;
  result.mean_overlap = sum / means.size();
  double var = 0.0;
  for (double v : means) var += (v - result.mean_overlap) * (v - result.mean_overlap);
  if (means.size() > 1) {
    var /= (means.size() - 1);
    result.stderr_overlap = std::sqrt(var / means.size());
  }
  return result;
}

}  // namespace semisup::oracle
