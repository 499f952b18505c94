#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edl/data.hpp"
#include "edl/dirichlet.hpp"
#include "edl/model.hpp"

namespace edl {

/// Objective families. CrossEntropy is the plain classifier loss used to
/// train teacher members; the rest are the evidential objectives.
enum class LossKind { FKL, RKL, MSE, VI, UCE, LOGMSE, DISTILL, CrossEntropy };

std::string to_string(LossKind kind);
/// Throws std::invalid_argument listing the valid names.
LossKind parse_loss_kind(const std::string& name);
/// The evidential objectives, in taxonomy order.
std::vector<LossKind> evidential_loss_kinds();

struct LossSpec {
  LossKind kind = LossKind::RKL;
  /// Prior concentration; empty means all ones.
  std::vector<double> alpha0;
  /// Regularization weight; the tempering exponent is nu = 1 / lambda.
  double lambda = 1e-4;
  double gamma_ood = 0.0;
  std::optional<OodSource> ood;
  /// Weight of the -log p(y|x) auxiliary term of the forward-KL objective.
  double fkl_aux_weight = 1.0;

  double nu() const { return 1.0 / lambda; }
  /// alpha0, expanded to `classes` ones when empty.
  std::vector<double> prior(std::size_t classes) const;
  /// Throws std::invalid_argument on an inconsistent spec.
  void validate(std::size_t classes) const;
};

/// A per-sample loss and its gradient with respect to alpha.
struct LossValue {
  double value = 0.0;
  std::vector<double> grad;
};

/// E[log 1/pi_y] + lambda KL(Dir(alpha) || Dir(alpha0)).
LossValue loss_vi(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                  double lambda);
/// E[log 1/pi_y] - lambda H(Dir(alpha)).
LossValue loss_uce(const Dirichlet& a, std::size_t y, double lambda);
/// E||pi - e_y||^2 + lambda KL(Dir(alpha) || Dir(alpha0)).
LossValue loss_mse(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                   double lambda);
/// KL(Dir(alpha0 + nu e_y) || Dir(alpha)) - aux_weight log mean(alpha)_y.
LossValue loss_fkl(const Dirichlet& a, std::size_t y, std::span<const double> alpha0, double nu,
                   double aux_weight);
/// KL(Dir(alpha) || Dir(alpha0 + nu e_y)).
LossValue loss_rkl(const Dirichlet& a, std::size_t y, std::span<const double> alpha0, double nu);
/// ||log alpha - log(alpha0 + e_y / lambda)||^2.
LossValue loss_logmse(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                      double lambda);
/// -(1/M) sum_j log Dir(pi_j; alpha); teacher vectors are rows of length C.
LossValue loss_distill(const Dirichlet& a, std::span<const double> teacher_probs);
/// -log mean(alpha)_y, i.e. softmax cross-entropy when alpha = exp(logits).
LossValue loss_nll(const Dirichlet& a, std::size_t y);

/// KL(p || Dir(alpha)) and KL(Dir(alpha) || q) with gradients in alpha.
LossValue kl_to_model(const Dirichlet& p, const Dirichlet& a);
LossValue kl_from_model(const Dirichlet& a, const Dirichlet& q);

/// Row-major teacher probability vectors for every row of a training set.
struct TeacherTargets {
  std::size_t members = 0;
  std::size_t classes = 0;
  std::vector<double> probs;  // rows x members x classes

  std::span<const double> row(std::size_t i) const {
    return {probs.data() + i * members * classes, members * classes};
  }
};

/// Per-sample ID loss for a spec (everything but the OOD term).
LossValue sample_loss(const LossSpec& spec, const Dirichlet& a, std::size_t y,
                      std::span<const double> alpha0, std::span<const double> teacher_row);

/// Divergence between the model and the prior used for OOD inputs: forward
/// KL for FKL, reverse KL otherwise.
LossValue ood_loss(const LossSpec& spec, const Dirichlet& a, std::span<const double> alpha0);

struct IdBatch {
  const LabeledSet& set;
  std::span<const std::size_t> rows;
  const TeacherTargets* targets = nullptr;
  /// Enables dropout masks in the forward passes when set.
  Rng* dropout_rng = nullptr;
};

struct BatchLoss {
  double value = 0.0;
  double id_term = 0.0;
  double ood_term = 0.0;
  std::vector<double> grad;  // d value / d params
};

/// Mean ID loss + gamma_ood * mean OOD divergence to the prior, with the
/// exact parameter gradient.
BatchLoss batch_loss(const LossSpec& spec, const MetaModel& model, const IdBatch& batch,
                     const FeatureSet* ood_batch = nullptr);

}  // namespace edl
