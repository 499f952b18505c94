#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/model.hpp"
#include "edl/objectives.hpp"
#include "edl/teachers.hpp"
#include "edl/train.hpp"
#include "edl/uncertainty.hpp"

namespace edl {

/// Seed streams of one experiment, derived from its base seed. The CLI
/// uses the same streams so its datasets match run_experiment's.
namespace streams {
inline constexpr std::uint64_t kTrainDataStream = 10;
inline constexpr std::uint64_t kTestDataStream = 11;
inline constexpr std::uint64_t kOodDataStream = 12;
inline constexpr std::uint64_t kInitStream = 13;
inline constexpr std::uint64_t kFitStream = 14;
inline constexpr std::uint64_t kTeacherStream = 15;
/// Seed of the k-th configured OOD source.
inline std::uint64_t ood_seed(std::uint64_t seed, std::size_t k) {
  return derive_seed(seed, kOodDataStream + 100 * k);
}
}  // namespace streams

/// Scores of a binary ranking task; positives are OOD or misclassified.
struct ScoredBinary {
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
};

/// P(pos > neg) + P(pos = neg) / 2 over all pairs.
double auroc(const ScoredBinary& s);
/// Average precision; tied scores form a single threshold.
double aupr(const ScoredBinary& s);

enum class Metric { MI, DEnt, Energy, Ent, MaxP, Aleatoric };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);
/// Orientation: larger means more uncertain (maxp is negated).
double uncertainty_score(const UQReport& r, Metric metric);

struct Prediction {
  std::size_t label = 0;
  UQReport uq;
};

/// Maps an input to its predicted label and uncertainty report.
using Predictor = std::function<Prediction(std::span<const double>)>;

Predictor model_predictor(const MetaModel& model);
Predictor bank_predictor(const TeacherBank& bank);

/// One tidy result row.
struct MetricRow {
  std::string task;
  std::string metric;
  double value = 0.0;
};

struct ExperimentResult {
  std::string method;
  double lambda = 0.0;
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  double runtime_s = 0.0;

  /// Value of the first row with this metric name (NaN if absent).
  double value(const std::string& metric) const;
};

/// AUROC/AUPR of OOD (positive) vs ID test inputs under an epistemic metric.
std::vector<MetricRow> ood_experiment(const Predictor& predictor, const LabeledSet& id_test,
                                      const FeatureSet& ood, const std::string& ood_name,
                                      Metric metric);

/// Misclassified (positive) vs correct test points ranked by total
/// uncertainty or negated confidence. Without both classes present, the
/// AUROC/AUPR rows carry NaN.
std::vector<MetricRow> selective_experiment(const Predictor& predictor, const LabeledSet& id_test,
                                            Metric metric);

/// How a grid point's predictor is produced.
enum class Method { Evidential, BootstrapDistill, EnsembleDistill, DropoutDistill };

std::string method_name(Method method, LossKind loss);
/// Accepts an evidential loss name or bootstrap-distill / ensemble-distill /
/// dropout-distill.
std::pair<Method, LossKind> parse_method(const std::string& name);

struct ExperimentConfig {
  Method method = Method::Evidential;
  LossSpec loss;
  Architecture arch;
  Schedule schedule;
  std::size_t n_train = 1000;
  double noise_rate = 0.0;
  std::size_t n_test = 1000;
  std::size_t n_ood = 1000;
  std::vector<OodSource> ood_sources{OodSource::uniform_box(), OodSource::ring(),
                                     OodSource::shifted_gaussian()};
  Metric ood_metric = Metric::MI;
  Metric selective_metric = Metric::Ent;
  std::size_t teachers = 100;
  Schedule teacher_schedule;
  AnnealSchedule anneal;
  double dropout_rate = 0.2;
  std::size_t workers = 1;
  bool record_runtime = false;
};

/// Trains one predictor for (config, seed) and evaluates fit statistics,
/// OOD detection on every configured source, and selective classification.
ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t seed);

enum class SweepKind { Lambda, SampleSize };

std::string to_string(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& name);

/// One experiment per (grid value, seed), ordered by grid then seed.
std::vector<ExperimentResult> sweep(SweepKind kind, std::span<const double> grid,
                                    const ExperimentConfig& base,
                                    std::span<const std::uint64_t> seeds);

/// Tidy CSV `task,loss,lambda,n_train,seed,metric,value,runtime_s`.
void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results);

/// Per-grid-value mean of `metric` over seeds, in grid order.
std::vector<std::pair<double, double>> sweep_means(std::span<const ExperimentResult> results,
                                                   SweepKind kind, const std::string& metric);

}  // namespace edl
