#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "edl/data.hpp"
#include "edl/model.hpp"
#include "edl/objectives.hpp"

namespace edl {

/// Raised when a loss or gradient becomes non-finite during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Schedule {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  double learning_rate = 1e-3;
  /// Trailing fraction of the shuffled set held out for validation.
  double validation_fraction = 0.2;
  /// Lower bound on optimizer steps; extends the epoch count for small sets.
  std::size_t min_steps = 0;
  /// Early stopping is not considered before this epoch.
  std::size_t min_epochs = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  MetaModel model;
  std::vector<EpochRecord> history;
  /// Epoch whose parameters were returned (0 = initial model).
  std::size_t best_epoch = 0;
};

/// Supplies per-row teacher targets for distillation, given the 1-based
/// epoch (0 requests the validation targets).
using TargetProvider = std::function<const TeacherTargets&(std::size_t epoch)>;

/// Mini-batch Adam on a seeded 80/20 split with early stopping on
/// validation loss; returns the best-validation parameters.
TrainResult train(MetaModel model, const LabeledSet& set, const LossSpec& spec,
                  const Schedule& schedule, std::uint64_t seed,
                  const TargetProvider& targets = {});

/// Indices (train, validation) of the seeded split used by train.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(
    std::size_t n, double validation_fraction, std::uint64_t seed);

/// Fraction of rows whose argmax of alpha equals the label.
double accuracy(const MetaModel& model, const LabeledSet& set);

}  // namespace edl
