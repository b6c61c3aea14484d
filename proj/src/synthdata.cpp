#include "semisup/synthdata.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "semisup/rng.hpp"
#include "semisup/specfun.hpp"

namespace semisup::synthdata {

namespace {

constexpr std::uint64_t kTeacherTag = 0x7e0c4e52ULL;
constexpr std::uint64_t kLabeledTag = 0x1ab31edaULL;
constexpr std::uint64_t kUnlabeledTag = 0x331ab31eULL;

// One datum: teacher-aligned field u (caller supplies), rest i.i.d. normal.
// Sets row = x with x.w0/sqrt(N) = u exactly (|w0|^2 = N).
void fill_row(const Teacher& teacher, double u, Rng& rng, double* row) {
  const int n = teacher.n;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double f0 = 0.0;
  for (int j = 0; j < n; ++j) {
    row[j] = rng.normal();
    f0 += row[j] * teacher.w0[j];
  }
  f0 *= inv_sqrt_n;
  const double shift = (u - f0) * inv_sqrt_n;
  for (int j = 0; j < n; ++j) row[j] += shift * teacher.w0[j];
}

// field magnitude |u| > g: inverse-CDF in the tail parameterization,
// stable for any margin (rejection would stall as g grows)
double truncated_field(double g, Rng& rng) {
  const double p = rng.uniform() * specfun::h_tail(g);
  return specfun::upper_tail_quantile(p);
}

}  // namespace

double Dataset::teacher_field(int mu) const {
  const double* x = row(mu);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += x[j] * teacher.w0[j];
  return acc / std::sqrt(static_cast<double>(n));
}

Teacher sample_teacher(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_teacher: n must be >= 2");
  Teacher t;
  t.n = n;
  t.w0.resize(n);
  Rng rng(derive_seed(seed, kTeacherTag, 0));
  double norm2 = 0.0;
  for (int j = 0; j < n; ++j) {
    t.w0[j] = rng.normal();
    norm2 += t.w0[j] * t.w0[j];
  }
  const double scale = std::sqrt(static_cast<double>(n) / norm2);
  for (auto& v : t.w0) v *= scale;
  return t;
}

void sample_labeled(const Teacher& teacher, double g, int count,
                    std::uint64_t seed, std::vector<double>& features,
                    std::vector<std::int8_t>& labels) {
  if (g < 0.0) throw std::invalid_argument("sample_labeled: g must be >= 0");
  features.resize(static_cast<std::size_t>(count) * teacher.n);
  labels.resize(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kLabeledTag, static_cast<std::uint64_t>(i)));
    const std::int8_t y = rng.coin() ? 1 : -1;
    const double u = y * truncated_field(g, rng);
    labels[i] = y;
    fill_row(teacher, u, rng, features.data() + static_cast<std::size_t>(i) * teacher.n);
  }
}

void sample_unlabeled(const Teacher& teacher, double g, int count,
                      std::uint64_t seed, std::vector<double>& features) {
  if (g < 0.0) throw std::invalid_argument("sample_unlabeled: g must be >= 0");
  features.resize(static_cast<std::size_t>(count) * teacher.n);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kUnlabeledTag, static_cast<std::uint64_t>(i)));
    const double s = rng.coin() ? 1.0 : -1.0;  // hidden label, discarded
    const double u = s * truncated_field(g, rng);
    fill_row(teacher, u, rng, features.data() + static_cast<std::size_t>(i) * teacher.n);
  }
}

Dataset make_dataset(int n, int l_count, int u_count, double g,
                     std::uint64_t seed) {
  Dataset d;
  d.n = n;
  d.l_count = l_count;
  d.u_count = u_count;
  d.margin_g = g;
  d.seed = seed;
  d.teacher = sample_teacher(n, seed);

  std::vector<double> lab_feat;
  sample_labeled(d.teacher, g, l_count, seed, lab_feat, d.labels);
  std::vector<double> unl_feat;
  sample_unlabeled(d.teacher, g, u_count, seed, unl_feat);

  d.features.resize(static_cast<std::size_t>(d.rows()) * n);
  std::memcpy(d.features.data(), lab_feat.data(),
              lab_feat.size() * sizeof(double));
  std::memcpy(d.features.data() + lab_feat.size(), unl_feat.data(),
              unl_feat.size() * sizeof(double));
  return d;
}

namespace {
constexpr char kMagic[8] = {'S', 'S', 'U', 'P', 'D', 'S', '0', '1'};
}

void save_dataset(const Dataset& data, const std::string& path) {
  // the loader re-derives the teacher from the seed; refuse to write a file
  // whose teacher would not round-trip
  const Teacher check = sample_teacher(data.n, data.seed);
  if (check.w0 != data.teacher.w0)
    throw std::invalid_argument(
        "save_dataset: teacher does not match the dataset seed");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t n = data.n, l = data.l_count, u = data.u_count,
                      seed = data.seed;
  const double g = data.margin_g;
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&l), sizeof(l));
  out.write(reinterpret_cast<const char*>(&u), sizeof(u));
  out.write(reinterpret_cast<const char*>(&g), sizeof(g));
  out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
  out.write(reinterpret_cast<const char*>(data.labels.data()),
            static_cast<std::streamsize>(data.labels.size()));
  out.write(reinterpret_cast<const char*>(data.features.data()),
            static_cast<std::streamsize>(data.features.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_dataset: write failed on " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_dataset: bad magic in " + path);
  std::uint64_t n = 0, l = 0, u = 0, seed = 0;
  double g = 0.0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&l), sizeof(l));
  in.read(reinterpret_cast<char*>(&u), sizeof(u));
  in.read(reinterpret_cast<char*>(&g), sizeof(g));
  in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
  if (!in) throw std::runtime_error("load_dataset: truncated header");

  Dataset d;
  d.n = static_cast<int>(n);
  d.l_count = static_cast<int>(l);
  d.u_count = static_cast<int>(u);
  d.margin_g = g;
  d.seed = seed;
  d.labels.resize(l);
  d.features.resize(static_cast<std::size_t>(d.rows()) * d.n);
  in.read(reinterpret_cast<char*>(d.labels.data()),
          static_cast<std::streamsize>(d.labels.size()));
  in.read(reinterpret_cast<char*>(d.features.data()),
          static_cast<std::streamsize>(d.features.size() * sizeof(double)));
  if (!in) throw std::runtime_error("load_dataset: truncated body");
  d.teacher = sample_teacher(d.n, d.seed);
  return d;
}

}  // namespace semisup::synthdata
