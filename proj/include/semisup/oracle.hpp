#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semisup/synthdata.hpp"

// Desk-scale ground-truth engines for tests: an exact-posterior Metropolis
// sampler on the sphere, and a trapezoid integrator against the normalized
// Gaussian measure. Production code never calls into this library.

namespace semisup::oracle {

struct McmcConfig {
  int n_sweeps = 200000;
  int burn_in = 50000;
  double proposal_step = 0.1;  // starting step; tuned to 20-40% acceptance
  std::uint64_t seed = 1;
  int n_chains = 4;
  int thin = 5;
};

struct McmcResult {
  double mean_overlap = 0.0;    // posterior mean of w.w0/N
  double stderr_overlap = 0.0;  // batch-means error, corrected between chains
  double acceptance_rate = 0.0;
  double tuned_step = 0.0;
  std::vector<double> samples;  // thinned per-sweep overlaps, all chains
};

class ZeroAcceptanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Random-walk Metropolis on |w|^2 = N with the hard-constraint likelihood
// (margin h on every datum); chains start at the teacher, which satisfies
// the constraints whenever h <= g.
McmcResult posterior_sample_overlap(const synthdata::Dataset& data, double h,
                                    const McmcConfig& cfg);

// Trapezoid rule over [z_lo, z_hi] against dz exp(-z^2/2)/sqrt(2 pi).
template <typename F>
double brute_force_integral(F&& integrand, double z_lo, double z_hi,
                            int n_points) {
  if (n_points < 100000)
    throw std::invalid_argument("brute_force_integral: n_points >= 1e5");
  const double dz = (z_hi - z_lo) / (n_points - 1);
  const double inv_sqrt_2pi = 0.39894228040143267794;
  double acc = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const double z = z_lo + dz * i;
    const double v = integrand(z) * std::exp(-0.5 * z * z) * inv_sqrt_2pi;
    if (!std::isfinite(v))
      throw std::runtime_error("brute_force_integral: non-finite integrand");
    acc += (i == 0 || i == n_points - 1) ? 0.5 * v : v;
  }
  return acc * dz;
}

}  // namespace semisup::oracle
