#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Teacher vectors and margin-conditioned datasets. Feature rows are the raw
// x vectors (unit-variance components); learners consume x/sqrt(N) so that
// fields live on the same scale as the margins. Generation is pure per
// (seed, datum index): every datum draws from its own derived stream, so
// datasets are reproducible bit-exactly and generation order is irrelevant.

namespace semisup::synthdata {

struct Teacher {
  std::vector<double> w0;  // |w0|^2 = n exactly (up to one rescale rounding)
  int n = 0;
};

struct Dataset {
  int n = 0;
  int l_count = 0;
  int u_count = 0;
  double margin_g = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> features;     // row-major (l_count+u_count) x n
  std::vector<std::int8_t> labels;  // l_count entries, +-1
  Teacher teacher;                  // evaluation only; never shown to learners

  int rows() const { return l_count + u_count; }
  const double* row(int mu) const { return features.data() + static_cast<std::size_t>(mu) * n; }
  // x_mu . w0 / sqrt(N)
  double teacher_field(int mu) const;
};

Teacher sample_teacher(int n, std::uint64_t seed);

// Labeled data: y uniform on +-1, teacher field u with y*u > g (truncated
// normal via the tail quantile), orthogonal components i.i.d. N(0,1).
void sample_labeled(const Teacher& teacher, double g, int count,
                    std::uint64_t seed, std::vector<double>& features,
                    std::vector<std::int8_t>& labels);

// Unlabeled data: same construction, the drawn label is discarded.
void sample_unlabeled(const Teacher& teacher, double g, int count,
                      std::uint64_t seed, std::vector<double>& features);

// Teacher from (seed), then labeled and unlabeled blocks from derived seeds.
Dataset make_dataset(int n, int l_count, int u_count, double g,
                     std::uint64_t seed);

// Binary file: magic, header (N, L, U, g, seed), labels, row-major features.
// Round-trips bit-exactly; the teacher is re-derived from the header seed,
// so only datasets produced by make_dataset may be saved.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace semisup::synthdata
