#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "semisup/specfun.hpp"
#include "semisup/synthdata.hpp"

using namespace semisup;
using synthdata::Dataset;
using synthdata::Teacher;

TEST_CASE("teacher sampling") {
  const auto t = synthdata::sample_teacher(100, 42);
  double norm2 = 0.0;
  for (double v : t.w0) norm2 += v * v;
  CHECK(norm2 == doctest::Approx(100.0).epsilon(1e-9));

  const auto t2 = synthdata::sample_teacher(100, 42);
  CHECK(t.w0 == t2.w0);  // determinism, bit-exact

  const auto t3 = synthdata::sample_teacher(100, 43);
  double ov = 0.0;
  for (int j = 0; j < 100; ++j) ov += t.w0[j] * t3.w0[j];
  CHECK(std::fabs(ov / 100.0) < 0.5);  // O(1/sqrt(N)) overlap

  CHECK_THROWS_AS(synthdata::sample_teacher(1, 1), std::invalid_argument);
}

TEST_CASE("margin feasibility is exact") {
  const auto d = synthdata::make_dataset(120, 400, 400, 0.3, 7);
  for (int mu = 0; mu < d.rows(); ++mu) {
    const double f = d.teacher_field(mu);
    if (mu < d.l_count)
      CHECK(d.labels[mu] * f > d.margin_g);
    else
      CHECK(std::fabs(f) > d.margin_g);
  }
}

TEST_CASE("reproducibility is bit-exact") {
  const auto a = synthdata::make_dataset(60, 100, 200, 0.1, 12345);
  const auto b = synthdata::make_dataset(60, 100, 200, 0.1, 12345);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.teacher.w0 == b.teacher.w0);
  // the labeled prefix property used by the fine-tune protocol:
  // the first rows of a larger labeled block coincide with a smaller one
  std::vector<double> f_small, f_large;
  std::vector<std::int8_t> y_small, y_large;
  synthdata::sample_labeled(a.teacher, 0.1, 50, 999, f_small, y_small);
  synthdata::sample_labeled(a.teacher, 0.1, 80, 999, f_large, y_large);
  CHECK(std::equal(f_small.begin(), f_small.end(), f_large.begin()));
  CHECK(std::equal(y_small.begin(), y_small.end(), y_large.begin()));
}

TEST_CASE("labeled field mean against the truncated-normal value") {
  const double g = 0.5;
  const int n = 100, count = 100000;
  const auto teacher = synthdata::sample_teacher(n, 5);
  std::vector<double> feat;
  std::vector<std::int8_t> lab;
  synthdata::sample_labeled(teacher, g, count, 321, feat, lab);

  double mean = 0.0, sq = 0.0;
  const double inv_sqrt_n = 1.0 / std::sqrt((double)n);
  for (int i = 0; i < count; ++i) {
    double f = 0.0;
    for (int j = 0; j < n; ++j)
      f += feat[(std::size_t)i * n + j] * teacher.w0[j];
    const double yu = lab[i] * f * inv_sqrt_n;
    mean += yu;
    sq += yu * yu;
  }
  mean /= count;
  const double var = sq / count - mean * mean;
  const double se = std::sqrt(var / count);

  const double analytic =
      std::exp(-0.5 * g * g) / (specfun::kSqrt2Pi * specfun::h_tail(g));
  CHECK(std::fabs(mean - analytic) < 3.0 * se);

  // rejection-sampling oracle for the same quantity (independent RNG path)
  std::mt19937_64 eng(17);
  std::normal_distribution<double> nd;
  double rej_mean = 0.0;
  int accepted = 0;
  while (accepted < 100000) {
    const double z = nd(eng);
    if (z > g) {
      rej_mean += z;
      ++accepted;
    }
  }
  rej_mean /= accepted;
  CHECK(std::fabs(mean - rej_mean) < 4.0 * se);
}

TEST_CASE("per-component variance stays unit") {
  const int n = 100, count = 50000;
  const auto teacher = synthdata::sample_teacher(n, 9);
  std::vector<double> feat;
  std::vector<std::int8_t> lab;
  synthdata::sample_labeled(teacher, 0.5, count, 77, feat, lab);
  for (int j : {0, 17, 63}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < count; ++i) {
      const double x = feat[(std::size_t)i * n + j];
      s += x;
      s2 += x * x;
    }
    const double var = s2 / count - (s / count) * (s / count);
    const double se_var = std::sqrt(2.0 / (count - 1));
    // the rank-one margin construction perturbs one direction by O(1/N)
    CHECK(std::fabs(var - 1.0) < 5.0 * se_var + 0.02);
  }
}

TEST_CASE("unlabeled field symmetry and tails") {
  const double g = 0.4;
  const int n = 80, count = 100000;
  const auto teacher = synthdata::sample_teacher(n, 11);
  std::vector<double> feat;
  synthdata::sample_unlabeled(teacher, g, count, 13, feat);
  const double inv_sqrt_n = 1.0 / std::sqrt((double)n);
  double mean = 0.0, var = 0.0;
  int above = 0;
  for (int i = 0; i < count; ++i) {
    double f = 0.0;
    for (int j = 0; j < n; ++j)
      f += feat[(std::size_t)i * n + j] * teacher.w0[j];
    const double u = f * inv_sqrt_n;
    REQUIRE(std::fabs(u) > g);  // no density inside the margin band
    mean += u;
    var += u * u;
    if (u > g) ++above;
  }
  mean /= count;
  var = var / count - mean * mean;
  const double se = std::sqrt(var / count);
  CHECK(std::fabs(mean) < 3.0 * se);  // symmetric mixture
  const double frac = (double)above / count;
  CHECK(std::fabs(frac - 0.5) < 3.0 * std::sqrt(0.25 / count));
}

TEST_CASE("zero margin gives an unconstrained normal field") {
  const int n = 50, count = 10000;
  const auto teacher = synthdata::sample_teacher(n, 21);
  std::vector<double> feat;
  synthdata::sample_unlabeled(teacher, 0.0, count, 31, feat);
  const double inv_sqrt_n = 1.0 / std::sqrt((double)n);
  std::vector<double> u(count);
  for (int i = 0; i < count; ++i) {
    double f = 0.0;
    for (int j = 0; j < n; ++j)
      f += feat[(std::size_t)i * n + j] * teacher.w0[j];
    u[i] = f * inv_sqrt_n;
  }
  // two-sample Kolmogorov-Smirnov against a fresh standard normal sample
  std::mt19937_64 eng(99);
  std::normal_distribution<double> nd;
  std::vector<double> v(count);
  for (auto& x : v) x = nd(eng);
  std::sort(u.begin(), u.end());
  std::sort(v.begin(), v.end());
  double dmax = 0.0;
  std::size_t i = 0, j = 0;
  while (i < u.size() && j < v.size()) {
    if (u[i] <= v[j])
      ++i;
    else
      ++j;
    dmax = std::max(dmax,
                    std::fabs((double)i / u.size() - (double)j / v.size()));
  }
  const double crit = 1.628 * std::sqrt(2.0 / count);  // p = 0.01
  CHECK(dmax < crit);
}

TEST_CASE("dataset file round trip is bit-exact") {
  const auto d = synthdata::make_dataset(40, 30, 50, 0.2, 777);
  const std::string path = "test_dataset_roundtrip.bin";
  synthdata::save_dataset(d, path);
  const auto loaded = synthdata::load_dataset(path);
  CHECK(loaded.n == d.n);
  CHECK(loaded.l_count == d.l_count);
  CHECK(loaded.u_count == d.u_count);
  CHECK(loaded.margin_g == d.margin_g);
  CHECK(loaded.seed == d.seed);
  CHECK(loaded.features == d.features);
  CHECK(loaded.labels == d.labels);
  CHECK(loaded.teacher.w0 == d.teacher.w0);

  // regenerate-and-save produces identical bytes
  const std::string path2 = "test_dataset_roundtrip2.bin";
  synthdata::save_dataset(synthdata::make_dataset(40, 30, 50, 0.2, 777), path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  std::remove(path.c_str());
  std::remove(path2.c_str());

  // a dataset whose teacher does not match its seed cannot be saved
  Dataset tampered = d;
  tampered.teacher.w0[0] += 1.0;
  CHECK_THROWS_AS(synthdata::save_dataset(tampered, "nope.bin"),
                  std::invalid_argument);
}
