#include "edl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edl {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::FKL: return "FKL";
    case LossKind::RKL: return "RKL";
    case LossKind::MSE: return "MSE";
    case LossKind::VI: return "VI";
    case LossKind::UCE: return "UCE";
    case LossKind::LOGMSE: return "LOGMSE";
    case LossKind::DISTILL: return "DISTILL";
    case LossKind::CrossEntropy: return "CE";
  }
  return "unknown";
}

LossKind parse_loss_kind(const std::string& name) {
  for (LossKind k : evidential_loss_kinds()) {
    if (to_string(k) == name) return k;
  }
  if (name == "CE") return LossKind::CrossEntropy;
  throw std::invalid_argument("unknown loss kind '" + name +
                              "' (valid: FKL, RKL, MSE, VI, UCE, LOGMSE, DISTILL, CE)");
}

std::vector<LossKind> evidential_loss_kinds() {
  return {LossKind::FKL, LossKind::RKL,    LossKind::MSE,    LossKind::VI,
          LossKind::UCE, LossKind::LOGMSE, LossKind::DISTILL};
}

std::vector<double> LossSpec::prior(std::size_t classes) const {
  if (alpha0.empty()) return std::vector<double>(classes, 1.0);
  return alpha0;
}

void LossSpec::validate(std::size_t classes) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("LossSpec: lambda must be positive");
  }
  if (!(gamma_ood >= 0.0)) throw std::invalid_argument("LossSpec: gamma_ood must be >= 0");
  if (gamma_ood > 0.0 && !ood) {
    throw std::invalid_argument("LossSpec: gamma_ood > 0 requires an OOD source");
  }
  if (!(fkl_aux_weight >= 0.0)) {
    throw std::invalid_argument("LossSpec: fkl_aux_weight must be >= 0");
  }
  if (!alpha0.empty()) {
    if (alpha0.size() != classes) throw std::invalid_argument("LossSpec: alpha0 length");
    for (double a : alpha0) {
      if (!(a > 0.0)) throw std::invalid_argument("LossSpec: alpha0 must be positive");
    }
  }
}

namespace {

// d/dalpha of E[log 1/pi_y] = psi(S) - psi(alpha_y).
void add_expected_neg_log(const Dirichlet& a, std::size_t y, LossValue& out) {
  out.value += a.expected_neg_log(y);
  const double t = trigamma(a.precision());
  for (double& g : out.grad) g += t;
  out.grad[y] -= trigamma(a.alpha(y));
}

void check_class(const Dirichlet& a, std::size_t y) {
  if (y >= a.classes()) throw std::invalid_argument("loss: class index out of range");
}

}  // namespace

LossValue kl_from_model(const Dirichlet& a, const Dirichlet& q) {
  if (a.classes() != q.classes()) throw std::invalid_argument("kl_from_model: length mismatch");
  LossValue out{kl(a, q), std::vector<double>(a.classes())};
  const double t_total = trigamma(a.precision());
  const double excess = a.precision() - q.precision();
  for (std::size_t j = 0; j < a.classes(); ++j) {
    out.grad[j] = (a.alpha(j) - q.alpha(j)) * trigamma(a.alpha(j)) - excess * t_total;
  }
  return out;
}

LossValue kl_to_model(const Dirichlet& p, const Dirichlet& a) {
  if (a.classes() != p.classes()) throw std::invalid_argument("kl_to_model: length mismatch");
  LossValue out{kl(p, a), std::vector<double>(a.classes())};
  const double psi_model = digamma(a.precision());
  const double psi_target = digamma(p.precision());
  for (std::size_t j = 0; j < a.classes(); ++j) {
    out.grad[j] = digamma(a.alpha(j)) - psi_model - (digamma(p.alpha(j)) - psi_target);
  }
  return out;
}

LossValue loss_vi(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                  double lambda) {
  check_class(a, y);
  LossValue out = kl_from_model(a, Dirichlet({alpha0.begin(), alpha0.end()}));
  out.value *= lambda;
  for (double& g : out.grad) g *= lambda;
  add_expected_neg_log(a, y, out);
  return out;
}

LossValue loss_uce(const Dirichlet& a, std::size_t y, double lambda) {
  check_class(a, y);
  const std::size_t c = a.classes();
  LossValue out{-lambda * a.diff_entropy(), std::vector<double>(c)};
  // dH/dalpha_j = (S - C) psi'(S) - (alpha_j - 1) psi'(alpha_j)
  const double shared = (a.precision() - static_cast<double>(c)) * trigamma(a.precision());
  for (std::size_t j = 0; j < c; ++j) {
    out.grad[j] = -lambda * (shared - (a.alpha(j) - 1.0) * trigamma(a.alpha(j)));
  }
  add_expected_neg_log(a, y, out);
  return out;
}

LossValue loss_mse(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                   double lambda) {
  check_class(a, y);
  LossValue out = kl_from_model(a, Dirichlet({alpha0.begin(), alpha0.end()}));
  out.value *= lambda;
  for (double& g : out.grad) g *= lambda;
  const double s = a.precision();
  const double denom = s * (s + 1.0);
  double second = 0.0;
  for (double v : a.alpha()) second += v * (v + 1.0);
  out.value += a.expected_sq_error(y);
  const double d_denom = second * (2.0 * s + 1.0) / (denom * denom);
  const double d_mean = 2.0 * a.alpha(y) / (s * s);
  for (std::size_t j = 0; j < a.classes(); ++j) {
    out.grad[j] += (2.0 * a.alpha(j) + 1.0) / denom - d_denom + d_mean;
  }
  out.grad[y] -= 2.0 / s;
  return out;
}

LossValue loss_nll(const Dirichlet& a, std::size_t y) {
  check_class(a, y);
  LossValue out{std::log(a.precision()) - std::log(a.alpha(y)),
                std::vector<double>(a.classes(), 1.0 / a.precision())};
  out.grad[y] -= 1.0 / a.alpha(y);
  return out;
}

LossValue loss_fkl(const Dirichlet& a, std::size_t y, std::span<const double> alpha0, double nu,
                   double aux_weight) {
  check_class(a, y);
  LossValue out = kl_to_model(tempered_posterior(alpha0, nu, y), a);
  if (aux_weight > 0.0) {
    const LossValue aux = loss_nll(a, y);
    out.value += aux_weight * aux.value;
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += aux_weight * aux.grad[j];
  }
  return out;
}

LossValue loss_rkl(const Dirichlet& a, std::size_t y, std::span<const double> alpha0, double nu) {
  check_class(a, y);
  return kl_from_model(a, tempered_posterior(alpha0, nu, y));
}

LossValue loss_logmse(const Dirichlet& a, std::size_t y, std::span<const double> alpha0,
                      double lambda) {
  check_class(a, y);
  if (alpha0.size() != a.classes()) throw std::invalid_argument("loss_logmse: alpha0 length");
  LossValue out{0.0, std::vector<double>(a.classes())};
  for (std::size_t j = 0; j < a.classes(); ++j) {
    const double target = alpha0[j] + (j == y ? 1.0 / lambda : 0.0);
    const double diff = std::log(a.alpha(j)) - std::log(target);
    out.value += diff * diff;
    out.grad[j] = 2.0 * diff / a.alpha(j);
  }
  return out;
}

LossValue loss_distill(const Dirichlet& a, std::span<const double> teacher_probs) {
  const std::size_t c = a.classes();
  if (teacher_probs.empty() || teacher_probs.size() % c != 0) {
    throw std::invalid_argument("loss_distill: teacher rows must have length C");
  }
  const std::size_t m = teacher_probs.size() / c;
  std::vector<double> mean_log(c, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < c; ++k) {
      const double p = teacher_probs[j * c + k];
      if (!(p > 0.0)) throw DomainError("loss_distill: teacher vector not interior");
      mean_log[k] += std::log(p);
    }
  }
  for (double& v : mean_log) v /= static_cast<double>(m);
  // -(1/M) sum_j log Dir(pi_j; alpha) = log B(alpha) - sum_k (alpha_k - 1) mean_log_k
  LossValue out{log_beta(a.alpha()), std::vector<double>(c)};
  const double psi_total = digamma(a.precision());
  for (std::size_t k = 0; k < c; ++k) {
    out.value -= (a.alpha(k) - 1.0) * mean_log[k];
    out.grad[k] = digamma(a.alpha(k)) - psi_total - mean_log[k];
  }
  return out;
}

LossValue sample_loss(const LossSpec& spec, const Dirichlet& a, std::size_t y,
                      std::span<const double> alpha0, std::span<const double> teacher_row) {
  switch (spec.kind) {
    case LossKind::FKL: return loss_fkl(a, y, alpha0, spec.nu(), spec.fkl_aux_weight);
    case LossKind::RKL: return loss_rkl(a, y, alpha0, spec.nu());
    case LossKind::MSE: return loss_mse(a, y, alpha0, spec.lambda);
    case LossKind::VI: return loss_vi(a, y, alpha0, spec.lambda);
    case LossKind::UCE: return loss_uce(a, y, spec.lambda);
    case LossKind::LOGMSE: return loss_logmse(a, y, alpha0, spec.lambda);
    case LossKind::DISTILL: return loss_distill(a, teacher_row);
    case LossKind::CrossEntropy: return loss_nll(a, y);
  }
  throw std::logic_error("sample_loss: unhandled loss kind");
}

LossValue ood_loss(const LossSpec& spec, const Dirichlet& a, std::span<const double> alpha0) {
  const Dirichlet prior({alpha0.begin(), alpha0.end()});
  return spec.kind == LossKind::FKL ? kl_to_model(prior, a) : kl_from_model(a, prior);
}

namespace {

// Softmax cross-entropy on raw logits; writes dL/dlogits into grad.
double cross_entropy_logits(std::span<const double> logits, std::size_t y,
                            std::vector<double>& grad) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  grad.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    grad[k] = std::exp(logits[k] - top);
    total += grad[k];
  }
  for (double& g : grad) g /= total;
  grad[y] -= 1.0;
  return std::log(total) + top - logits[y];
}

}  // namespace

BatchLoss batch_loss(const LossSpec& spec, const MetaModel& model, const IdBatch& batch,
                     const FeatureSet* ood_batch) {
  if (batch.rows.empty()) throw std::invalid_argument("batch_loss: empty batch");
  if (spec.gamma_ood > 0.0 && (ood_batch == nullptr || ood_batch->size() == 0)) {
    throw std::invalid_argument("batch_loss: gamma_ood > 0 requires an OOD batch");
  }
  if (spec.kind == LossKind::DISTILL && batch.targets == nullptr) {
    throw std::invalid_argument("batch_loss: DISTILL requires teacher targets");
  }
  const std::vector<double> alpha0 = spec.prior(model.classes());
  BatchLoss out;
  out.grad.assign(model.param_count(), 0.0);
  std::vector<double> scaled;
  Tape tape;

  const double id_weight = 1.0 / static_cast<double>(batch.rows.size());
  for (std::size_t row : batch.rows) {
    const std::size_t y = batch.set.y(row);
    if (spec.kind == LossKind::CrossEntropy) {
      model.forward(batch.set.x(row), tape, batch.dropout_rng);
      std::vector<double> g;
      out.id_term += cross_entropy_logits(tape.output, y, g);
      for (double& v : g) v *= id_weight;
      model.backward_output(tape, g, out.grad);
      continue;
    }
    const Dirichlet a = model.forward(batch.set.x(row), tape, batch.dropout_rng);
    std::span<const double> teacher_row;
    if (batch.targets != nullptr) teacher_row = batch.targets->row(row);
    LossValue l = sample_loss(spec, a, y, alpha0, teacher_row);
    out.id_term += l.value;
    for (double& v : l.grad) v *= id_weight;
    model.backward(tape, l.grad, out.grad);
  }
  out.id_term *= id_weight;

  if (spec.gamma_ood > 0.0) {
    const double w = spec.gamma_ood / static_cast<double>(ood_batch->size());
    for (std::size_t i = 0; i < ood_batch->size(); ++i) {
      const Dirichlet a = model.forward(ood_batch->x(i), tape);
      LossValue l = ood_loss(spec, a, alpha0);
      out.ood_term += l.value;
      for (double& v : l.grad) v *= w;
      model.backward(tape, l.grad, out.grad);
    }
    out.ood_term /= static_cast<double>(ood_batch->size());
  }
  out.value = out.id_term + spec.gamma_ood * out.ood_term;
  return out;
}

}  // namespace edl
