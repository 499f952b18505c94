#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edl/dirichlet.hpp"

namespace edl {

/// Generating mixture of a synthetic set: isotropic Gaussian classes with a
/// shared variance plus symmetric label noise.
struct MixtureGenerator {
  std::vector<std::vector<double>> means;
  double variance = 0.25;
  std::vector<double> priors;
  /// Probability that a label is resampled uniformly over the other classes.
  double noise_rate = 0.0;

  /// Three equiprobable 2-D classes at (-2,3), (0,0), (2,3), variance 0.25.
  static MixtureGenerator toy(double noise_rate = 0.0);

  std::size_t classes() const { return means.size(); }
  std::size_t dim() const { return means.front().size(); }
};

/// Row-major feature matrix with labels.
class LabeledSet {
 public:
  LabeledSet(std::size_t dim, std::size_t classes) : dim_(dim), classes_(classes) {}
  LabeledSet(std::size_t dim, std::size_t classes, MixtureGenerator generator);

  void add(std::span<const double> x, std::size_t y);

  std::size_t size() const { return ys_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t classes() const { return classes_; }
  std::span<const double> x(std::size_t i) const { return {xs_.data() + i * dim_, dim_}; }
  std::size_t y(std::size_t i) const { return ys_[i]; }
  std::span<const std::size_t> labels() const { return ys_; }
  const std::optional<MixtureGenerator>& generator() const { return generator_; }

  /// Rows at the given indices, in order; keeps the generator.
  LabeledSet subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;

 private:
  std::size_t dim_;
  std::size_t classes_;
  std::vector<double> xs_;
  std::vector<std::size_t> ys_;
  std::optional<MixtureGenerator> generator_;
};

/// Unlabeled feature rows.
struct FeatureSet {
  std::size_t dim = 0;
  std::vector<double> xs;

  std::size_t size() const { return dim == 0 ? 0 : xs.size() / dim; }
  std::span<const double> x(std::size_t i) const { return {xs.data() + i * dim, dim}; }
};

enum class OodKind { UniformBox, Ring, ShiftedGaussian };

/// Out-of-distribution generator in the 2-D toy feature space.
struct OodSource {
  OodKind kind = OodKind::UniformBox;
  /// Box half-width (uniform-box), ring radius (ring).
  double extent = 8.0;
  /// Radius around each ID mean that the uniform box excludes.
  double exclusion = 3.0;
  /// Shell width (ring) or standard deviation (shifted-gaussian).
  double spread = 0.2;
  std::array<double, 2> offset{20.0, 20.0};

  static OodSource uniform_box(double half_width = 8.0, double exclusion = 3.0);
  static OodSource ring(double radius = 10.0, double width = 0.2);
  static OodSource shifted_gaussian(std::array<double, 2> offset = {20.0, 20.0},
                                    double stddev = 0.5);

  std::string name() const;
};

std::string to_string(OodKind kind);
OodKind parse_ood_kind(const std::string& name);

/// n draws from the toy mixture; labels flipped at the generator's noise rate.
LabeledSet make_gaussian_mixture(std::size_t n, double noise_rate, std::uint64_t seed);
LabeledSet make_mixture(const MixtureGenerator& gen, std::size_t n, std::uint64_t seed);

/// Exact p(y | x) of the generating mixture including label noise.
ProbVector eta_oracle(const MixtureGenerator& gen, std::span<const double> x);

/// n i.i.d. OOD draws. Uniform-box draws are rejected inside the exclusion
/// radius of any toy ID mean.
FeatureSet sample_ood(const OodSource& src, std::size_t n, std::uint64_t seed);

/// m subsets of floor(ratio N) rows, each drawn without replacement.
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t m,
                                                        double ratio, std::uint64_t seed);
std::vector<LabeledSet> bootstrap_split(const LabeledSet& set, std::size_t m, double ratio,
                                        std::uint64_t seed);

/// CSV with header `x0,...,x{d-1},y`.
void write_csv(std::ostream& out, const LabeledSet& set);
/// CSV with header `x0,...,x{d-1}`.
void write_csv(std::ostream& out, const FeatureSet& set);
LabeledSet read_labeled_csv(std::istream& in, std::size_t classes);

}  // namespace edl
