#include "edl/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace edl {

ProbVector::ProbVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw DomainError("ProbVector: empty");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0 + kSimplexTolerance)) {
      throw DomainError("ProbVector: component outside [0,1]: " + std::to_string(v));
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw DomainError("ProbVector: components sum to " + std::to_string(total));
  }
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("ProbVector::normalized: negative weight");
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DomainError("ProbVector::normalized: weights must have positive finite sum");
  }
  for (double& w : weights) w /= total;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t classes) {
  return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

ProbVector ProbVector::one_hot(std::size_t classes, std::size_t index) {
  if (index >= classes) throw DomainError("ProbVector::one_hot: index out of range");
  std::vector<double> p(classes, 0.0);
  p[index] = 1.0;
  return ProbVector(std::move(p));
}

std::size_t ProbVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(p_.begin(), p_.end()) - p_.begin());
}

double ProbVector::max() const { return *std::max_element(p_.begin(), p_.end()); }

double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

Dirichlet::Dirichlet(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2) throw DomainError("Dirichlet: need at least two classes");
  for (double a : alpha_) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("Dirichlet: concentration must be positive and finite, got " +
                        std::to_string(a));
    }
  }
  precision_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
}

ProbVector Dirichlet::mean() const {
  std::vector<double> m(alpha_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = alpha_[i] / precision_;
  return ProbVector(std::move(m));
}

double Dirichlet::log_pdf(const ProbVector& pi) const {
  if (pi.size() != alpha_.size()) throw DomainError("Dirichlet::log_pdf: length mismatch");
  double acc = -log_beta(alpha_);
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (alpha_[i] == 1.0) continue;
    if (pi[i] <= 0.0) {
      throw DomainError("Dirichlet::log_pdf: zero component where alpha != 1");
    }
    acc += (alpha_[i] - 1.0) * std::log(pi[i]);
  }
  return acc;
}

double Dirichlet::diff_entropy() const {
  const double c = static_cast<double>(alpha_.size());
  double acc = log_beta(alpha_) + (precision_ - c) * digamma(precision_);
  for (double a : alpha_) acc -= (a - 1.0) * digamma(a);
  return acc;
}

double Dirichlet::expected_cat_entropy() const {
  const double psi_total = digamma(precision_ + 1.0);
  double acc = 0.0;
  for (double a : alpha_) acc += (a / precision_) * (psi_total - digamma(a + 1.0));
  return acc;
}

double Dirichlet::mutual_info() const {
  const ProbVector m = mean();
  return std::max(0.0, shannon_entropy(m.values()) - expected_cat_entropy());
}

double Dirichlet::energy() const { return -std::log(precision_); }

double Dirichlet::expected_neg_log(std::size_t y) const {
  if (y >= alpha_.size()) throw DomainError("Dirichlet::expected_neg_log: class out of range");
  return digamma(precision_) - digamma(alpha_[y]);
}

double Dirichlet::expected_sq_error(std::size_t y) const {
  if (y >= alpha_.size()) throw DomainError("Dirichlet::expected_sq_error: class out of range");
  const double s = precision_;
  double second = 0.0;
  for (double a : alpha_) second += a * (a + 1.0);
  return second / (s * (s + 1.0)) - 2.0 * alpha_[y] / s + 1.0;
}

ProbVector Dirichlet::sample(Rng& rng) const {
  std::vector<double> g(alpha_.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.gamma(alpha_[i]);
  // All-zero draws only happen when every shape is tiny; retry keeps the
  // sample on the simplex.
  while (std::accumulate(g.begin(), g.end(), 0.0) <= 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.gamma(alpha_[i]);
  }
  return ProbVector::normalized(std::move(g));
}

double kl(const Dirichlet& p, const Dirichlet& q) {
  if (p.classes() != q.classes()) throw DomainError("kl: length mismatch");
  const double psi_total = digamma(p.precision());
  double acc = log_beta(q.alpha()) - log_beta(p.alpha());
  for (std::size_t i = 0; i < p.classes(); ++i) {
    acc += (p.alpha(i) - q.alpha(i)) * (digamma(p.alpha(i)) - psi_total);
  }
  return std::max(0.0, acc);
}

Dirichlet tempered_posterior(std::span<const double> alpha0, double nu, std::size_t y) {
  if (y >= alpha0.size()) throw DomainError("tempered_posterior: class out of range");
  if (!(nu > 0.0)) throw DomainError("tempered_posterior: nu must be positive");
  std::vector<double> a(alpha0.begin(), alpha0.end());
  a[y] += nu;
  return Dirichlet(std::move(a));
}

Dirichlet optimal_target(std::span<const double> alpha0, double nu, const ProbVector& eta) {
  if (eta.size() != alpha0.size()) throw DomainError("optimal_target: length mismatch");
  if (!(nu > 0.0)) throw DomainError("optimal_target: nu must be positive");
  std::vector<double> a(alpha0.begin(), alpha0.end());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += nu * eta[i];
  return Dirichlet(std::move(a));
}

}  // namespace edl
