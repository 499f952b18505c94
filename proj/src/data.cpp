#include "edl/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "edl/csv.hpp"

namespace edl {

MixtureGenerator MixtureGenerator::toy(double noise_rate) {
  MixtureGenerator gen;
  gen.means = {{-2.0, 3.0}, {0.0, 0.0}, {2.0, 3.0}};
  gen.variance = 0.25;
  gen.priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  gen.noise_rate = noise_rate;
  return gen;
}

LabeledSet::LabeledSet(std::size_t dim, std::size_t classes, MixtureGenerator generator)
    : dim_(dim), classes_(classes), generator_(std::move(generator)) {}

void LabeledSet::add(std::span<const double> x, std::size_t y) {
  if (x.size() != dim_) throw std::invalid_argument("LabeledSet::add: dimension mismatch");
  if (y >= classes_) throw std::invalid_argument("LabeledSet::add: label out of range");
  xs_.insert(xs_.end(), x.begin(), x.end());
  ys_.push_back(y);
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> indices) const {
  LabeledSet out(dim_, classes_);
  out.generator_ = generator_;
  out.xs_.reserve(indices.size() * dim_);
  out.ys_.reserve(indices.size());
  for (std::size_t i : indices) out.add(x(i), y(i));
  return out;
}

std::vector<std::size_t> LabeledSet::class_counts() const {
  std::vector<std::size_t> counts(classes_, 0);
  for (std::size_t y : ys_) ++counts[y];
  return counts;
}

LabeledSet make_mixture(const MixtureGenerator& gen, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("make_mixture: n must be at least 1");
  if (!(gen.noise_rate >= 0.0 && gen.noise_rate < 1.0)) {
    throw std::invalid_argument("make_mixture: noise rate must lie in [0,1)");
  }
  Rng rng(seed);
  const std::size_t c = gen.classes();
  const double sd = std::sqrt(gen.variance);
  std::discrete_distribution<std::size_t> pick(gen.priors.begin(), gen.priors.end());
  LabeledSet set(gen.dim(), c, gen);
  std::vector<double> x(gen.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng.engine());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = gen.means[k][j] + sd * rng.normal();
    std::size_t y = k;
    if (gen.noise_rate > 0.0 && rng.bernoulli(gen.noise_rate)) {
      const std::size_t other = rng.index(c - 1);
      y = other < k ? other : other + 1;
    }
    set.add(x, y);
  }
  return set;
}

LabeledSet make_gaussian_mixture(std::size_t n, double noise_rate, std::uint64_t seed) {
  return make_mixture(MixtureGenerator::toy(noise_rate), n, seed);
}

ProbVector eta_oracle(const MixtureGenerator& gen, std::span<const double> x) {
  const std::size_t c = gen.classes();
  if (x.size() != gen.dim()) throw std::invalid_argument("eta_oracle: dimension mismatch");
  // Log joint per component; shared variance cancels the normalizer.
  std::vector<double> logp(c);
  for (std::size_t k = 0; k < c; ++k) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - gen.means[k][j];
      d2 += d * d;
    }
    logp[k] = std::log(gen.priors[k]) - 0.5 * d2 / gen.variance;
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  std::vector<double> clean(c);
  for (std::size_t k = 0; k < c; ++k) clean[k] = std::exp(logp[k] - top);
  const double total = std::accumulate(clean.begin(), clean.end(), 0.0);
  const double r = gen.noise_rate;
  std::vector<double> eta(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double pk = clean[k] / total;
    eta[k] = (1.0 - r) * pk + r * (1.0 - pk) / static_cast<double>(c - 1);
  }
  return ProbVector::normalized(std::move(eta));
}

OodSource OodSource::uniform_box(double half_width, double exclusion) {
  OodSource s;
  s.kind = OodKind::UniformBox;
  s.extent = half_width;
  s.exclusion = exclusion;
  return s;
}

OodSource OodSource::ring(double radius, double width) {
  OodSource s;
  s.kind = OodKind::Ring;
  s.extent = radius;
  s.spread = width;
  return s;
}

OodSource OodSource::shifted_gaussian(std::array<double, 2> offset, double stddev) {
  OodSource s;
  s.kind = OodKind::ShiftedGaussian;
  s.offset = offset;
  s.spread = stddev;
  return s;
}

std::string to_string(OodKind kind) {
  switch (kind) {
    case OodKind::UniformBox: return "uniform-box";
    case OodKind::Ring: return "ring";
    case OodKind::ShiftedGaussian: return "shifted-gaussian";
  }
  return "unknown";
}

OodKind parse_ood_kind(const std::string& name) {
  if (name == "uniform-box") return OodKind::UniformBox;
  if (name == "ring") return OodKind::Ring;
  if (name == "shifted-gaussian") return OodKind::ShiftedGaussian;
  throw std::invalid_argument("unknown OOD kind '" + name +
                              "' (expected uniform-box, ring, shifted-gaussian)");
}

std::string OodSource::name() const { return to_string(kind); }

FeatureSet sample_ood(const OodSource& src, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_ood: n must be at least 1");
  Rng rng(seed);
  FeatureSet out;
  out.dim = 2;
  out.xs.reserve(2 * n);
  const auto means = MixtureGenerator::toy().means;
  constexpr double kTwoPi = 6.283185307179586;
  while (out.size() < n) {
    double a = 0.0;
    double b = 0.0;
    switch (src.kind) {
      case OodKind::UniformBox: {
        a = rng.uniform(-src.extent, src.extent);
        b = rng.uniform(-src.extent, src.extent);
        const bool near = std::any_of(means.begin(), means.end(), [&](const auto& m) {
          return std::hypot(a - m[0], b - m[1]) < src.exclusion;
        });
        if (near) continue;
        break;
      }
      case OodKind::Ring: {
        const double theta = rng.uniform(0.0, kTwoPi);
        const double r = src.extent + rng.uniform(-0.5, 0.5) * src.spread;
        a = r * std::cos(theta);
        b = r * std::sin(theta);
        break;
      }
      case OodKind::ShiftedGaussian:
        a = src.offset[0] + src.spread * rng.normal();
        b = src.offset[1] + src.spread * rng.normal();
        break;
    }
    out.xs.push_back(a);
    out.xs.push_back(b);
  }
  return out;
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t m,
                                                        double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("bootstrap_split: ratio must lie in (0,1]");
  }
  if (m == 0) throw std::invalid_argument("bootstrap_split: need at least one subset");
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (k == 0) throw std::invalid_argument("bootstrap_split: subset would be empty");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(m);
  std::vector<std::size_t> pool(n);
  for (std::size_t j = 0; j < m; ++j) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t pick = i + rng.index(n - i);
      std::swap(pool[i], pool[pick]);
    }
    out.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

std::vector<LabeledSet> bootstrap_split(const LabeledSet& set, std::size_t m, double ratio,
                                        std::uint64_t seed) {
  std::vector<LabeledSet> out;
  for (const auto& idx : bootstrap_indices(set.size(), m, ratio, seed)) {
    out.push_back(set.subset(idx));
  }
  return out;
}

void write_csv(std::ostream& out, const LabeledSet& set) {
  for (std::size_t j = 0; j < set.dim(); ++j) out << 'x' << j << ',';
  out << "y\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (double v : set.x(i)) out << csv::format(v) << ',';
    out << set.y(i) << '\n';
  }
}

void write_csv(std::ostream& out, const FeatureSet& set) {
  for (std::size_t j = 0; j < set.dim; ++j) out << (j ? "," : "") << 'x' << j;
  out << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = set.x(i);
    for (std::size_t j = 0; j < x.size(); ++j) out << (j ? "," : "") << csv::format(x[j]);
    out << '\n';
  }
}

LabeledSet read_labeled_csv(std::istream& in, std::size_t classes) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("read_labeled_csv: empty input");
  const auto header = csv::split(line);
  if (header.size() < 2 || header.back() != "y") {
    throw std::invalid_argument("read_labeled_csv: header must end with 'y'");
  }
  const std::size_t dim = header.size() - 1;
  LabeledSet set(dim, classes);
  std::vector<double> x(dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != dim + 1) throw std::invalid_argument("read_labeled_csv: ragged row");
    for (std::size_t j = 0; j < dim; ++j) x[j] = csv::parse_double(fields[j]);
    set.add(x, static_cast<std::size_t>(std::stoul(fields[dim])));
  }
  return set;
}

}  // namespace edl
