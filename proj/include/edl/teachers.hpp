#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/model.hpp"
#include "edl/train.hpp"
#include "edl/uncertainty.hpp"

namespace edl {

enum class TeacherKind { Ensemble, Bootstrap, Dropout };

std::string to_string(TeacherKind kind);
TeacherKind parse_teacher_kind(const std::string& name);

/// Uniform smoothing applied to teacher probabilities so that every vector
/// stays in the interior of the simplex.
inline constexpr double kTeacherSmoothing = 1e-4;
inline constexpr double kBootstrapRatio = 0.8;

/// Linear temperature decay T(e) = max(1, T0 - (T0 - 1) e / decay_epochs).
struct AnnealSchedule {
  double initial_temperature = 5.0;
  std::size_t decay_epochs = 30;

  double temperature(std::size_t epoch) const;
};

/// Samples from a model-uncertainty source p(psi | D).
struct TeacherBank {
  TeacherKind kind = TeacherKind::Bootstrap;
  /// One classifier per member; a dropout bank holds a single model.
  std::vector<MetaModel> members;
  std::vector<std::uint64_t> seeds;
  /// Dropout bank: number of stochastic forward passes.
  std::size_t passes = 0;
  std::uint64_t mask_seed = 0;

  std::size_t size() const { return kind == TeacherKind::Dropout ? passes : members.size(); }
  std::size_t classes() const { return members.front().classes(); }

  void save(const std::filesystem::path& dir) const;
  static TeacherBank load(const std::filesystem::path& dir);
};

struct TeacherConfig {
  Architecture arch;
  Schedule schedule;
  /// Dropout bank: hidden-unit drop rate.
  double dropout_rate = 0.2;
  std::size_t workers = 1;
};

/// Trains m cross-entropy classifiers (or one dropout model used for m
/// passes). Members train independently with seeds derived from `seed`.
TeacherBank train_teachers(TeacherKind kind, const LabeledSet& base_set, std::size_t m,
                           std::uint64_t seed, const TeacherConfig& config = {});

/// Raw logits of every member at x (row-major M x C).
std::vector<double> teacher_logits(const TeacherBank& bank, std::span<const double> x);

/// Smoothed softmax(logits / T) per member.
std::vector<ProbVector> teacher_probs(const TeacherBank& bank, std::span<const double> x,
                                      double temperature = 1.0);

/// Converts raw member logits to smoothed tempered probabilities in place.
void tempered_probs(std::span<const double> logits, std::size_t classes, double temperature,
                    std::span<double> out);

/// Monte-Carlo reference uncertainty of the bank at x (dent/energy NaN).
UQReport bank_meta_report(const TeacherBank& bank, std::span<const double> x);

/// Fits a direct-head student to the bank's annealed predictions with the
/// Dirichlet negative log-likelihood objective.
TrainResult distill(const TeacherBank& bank, MetaModel student, const LabeledSet& set,
                    const AnnealSchedule& anneal, const Schedule& schedule, std::uint64_t seed);

}  // namespace edl
