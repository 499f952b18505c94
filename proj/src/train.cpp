#include "edl/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace edl {
namespace {

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kOodStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

double mean_loss(const LossSpec& spec, const MetaModel& model, const LabeledSet& set,
                 std::span<const std::size_t> rows, const TeacherTargets* targets) {
  const std::vector<double> alpha0 = spec.prior(model.classes());
  Tape tape;
  double acc = 0.0;
  for (std::size_t row : rows) {
    const Dirichlet a = model.forward(set.x(row), tape);
    if (spec.kind == LossKind::CrossEntropy) {
      const auto& z = tape.output;
      const double top = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (double v : z) total += std::exp(v - top);
      acc += std::log(total) + top - z[set.y(row)];
      continue;
    }
    std::span<const double> teacher_row;
    if (targets != nullptr) teacher_row = targets->row(row);
    acc += sample_loss(spec, a, set.y(row), alpha0, teacher_row).value;
  }
  return acc / static_cast<double>(rows.size());
}

double accuracy_on(const MetaModel& model, const LabeledSet& set,
                   std::span<const std::size_t> rows) {
  Tape tape;
  std::size_t hits = 0;
  for (std::size_t row : rows) {
    model.forward(set.x(row), tape);
    const auto& z = tape.output;
    std::size_t pred = 0;
    if (model.architecture().head == HeadKind::Direct) {
      pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    } else {
      pred = static_cast<std::size_t>(std::max_element(tape.alpha.begin(), tape.alpha.end()) -
                                      tape.alpha.begin());
    }
    hits += pred == set.y(row) ? 1 : 0;
  }
  return rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rows.size());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Data-dependent start for the density head: each class Gaussian takes the
// moments of its training rows' latent codes. From a random start the codes
// sit far out in the tails, evidence underflows and its gradient with it.
void init_class_densities(MetaModel& model, const LabeledSet& set,
                          std::span<const std::size_t> rows) {
  const std::size_t dim = model.architecture().latent_dim;
  const std::size_t c = model.classes();
  std::vector<double> sum(c * dim, 0.0), sq(c * dim, 0.0);
  std::vector<double> n(c, 0.0);
  for (std::size_t row : rows) {
    const auto z = model.logits(set.x(row));
    const std::size_t y = set.y(row);
    n[y] += 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      sum[y * dim + j] += z[j];
      sq[y * dim + j] += z[j] * z[j];
    }
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (n[k] < 2.0) continue;
    std::vector<double> mean(dim), logvar(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] = sum[k * dim + j] / n[k];
      const double var = sq[k * dim + j] / n[k] - mean[j] * mean[j];
      logvar[j] = std::log(std::max(var, 1e-4));
    }
    model.set_class_density(k, mean, logvar);
  }
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(
    std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  if (validation_fraction > 0.0 && n >= 2) n_val = std::max<std::size_t>(n_val, 1);
  n_val = std::min(n_val, n - 1);
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return {std::move(train), std::move(val)};
}

double accuracy(const MetaModel& model, const LabeledSet& set) {
  std::vector<std::size_t> rows(set.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return accuracy_on(model, set, rows);
}

TrainResult train(MetaModel model, const LabeledSet& set, const LossSpec& spec,
                  const Schedule& schedule, std::uint64_t seed, const TargetProvider& targets) {
  spec.validate(model.classes());
  if (set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (spec.kind == LossKind::DISTILL && !targets) {
    throw std::invalid_argument("train: DISTILL requires teacher targets");
  }
  if (schedule.batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");

  auto [train_rows, val_rows] =
      train_validation_split(set.size(), schedule.validation_fraction, derive_seed(seed, kSplitStream));

  const std::size_t batches_per_epoch =
      (train_rows.size() + schedule.batch_size - 1) / schedule.batch_size;
  std::size_t epochs = schedule.epochs;
  if (schedule.epochs > 0 && schedule.min_steps > 0) {
    epochs = std::max(epochs, (schedule.min_steps + batches_per_epoch - 1) / batches_per_epoch);
  }
  if (epochs == 0) return TrainResult{std::move(model), {}, 0};

  if (model.architecture().head == HeadKind::Density) {
    std::vector<double> counts(model.classes(), 0.0);
    for (std::size_t row : train_rows) counts[set.y(row)] += 1.0;
    model.set_class_counts(std::move(counts));
    init_class_densities(model, set, train_rows);
  }
  TrainResult result{model, {}, 0};

  // A non-finite concentration surfaces as a DomainError from Dirichlet.
  try {
    const TeacherTargets* val_targets = targets ? &targets(0) : nullptr;
    double best = mean_loss(spec, model, set, val_rows, val_targets);
    std::size_t since_best = 0;

    AdamState opt(model.param_count(), schedule.learning_rate);
    Rng shuffle_rng(derive_seed(seed, kShuffleStream));
    std::vector<std::size_t> order = train_rows;
    std::uint64_t ood_draw = 0;
    Rng dropout_rng(derive_seed(seed, kDropoutStream));
    Rng* dropout = model.architecture().dropout > 0.0 ? &dropout_rng : nullptr;

    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
      const TeacherTargets* epoch_targets = targets ? &targets(epoch) : nullptr;
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
      double train_loss = 0.0;
      for (std::size_t b = 0; b < batches_per_epoch; ++b) {
        const std::size_t lo = b * schedule.batch_size;
        const std::size_t hi = std::min(order.size(), lo + schedule.batch_size);
        const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
        FeatureSet ood;
        if (spec.gamma_ood > 0.0) {
          ood = sample_ood(*spec.ood, rows.size(), derive_seed(derive_seed(seed, kOodStream), ood_draw++));
        }
        BatchLoss bl = batch_loss(spec, model, IdBatch{set, rows, epoch_targets, dropout},
                                  spec.gamma_ood > 0.0 ? &ood : nullptr);
        if (!std::isfinite(bl.value) || !all_finite(bl.grad)) {
          std::ostringstream msg;
          msg << "train: non-finite loss at epoch " << epoch << ", batch " << b << " ("
              << to_string(spec.kind) << ", lambda=" << spec.lambda << ", value=" << bl.value << ")";
          throw NumericError(msg.str());
        }
        train_loss += bl.value * static_cast<double>(rows.size());
        opt.step(model.mutable_params(), bl.grad);
      }
      train_loss /= static_cast<double>(order.size());

      const double val_loss = mean_loss(spec, model, set, val_rows, val_targets);
      const double val_acc = accuracy_on(model, set, val_rows);
      if (!std::isfinite(val_loss)) {
        throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
      }
      result.history.push_back({epoch, train_loss, val_loss, val_acc});
      if (val_loss < best) {
        best = val_loss;
        since_best = 0;
        result.model = model;
        result.best_epoch = epoch;
      } else if (++since_best >= schedule.patience && epoch >= schedule.min_epochs) {
        break;
      }
    }
  } catch (const DomainError& e) {
    throw NumericError(std::string("train: ") + e.what());
  }
  return result;
}

}  // namespace edl
