#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edl/random.hpp"
#include "edl/specialfn.hpp"

namespace edl {

/// Tolerance on the simplex constraint of a probability vector.
inline constexpr double kSimplexTolerance = 1e-9;

/// A probability vector over C >= 1 classes: nonnegative, sums to one.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> p);

  /// Normalizes a nonnegative vector with positive sum.
  static ProbVector normalized(std::vector<double> weights);
  static ProbVector uniform(std::size_t classes);
  static ProbVector one_hot(std::size_t classes, std::size_t index);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  std::size_t argmax() const;
  double max() const;

 private:
  std::vector<double> p_;
};

/// Shannon entropy in nats; 0 log 0 := 0.
double shannon_entropy(std::span<const double> p);

/// Dirichlet distribution Dir(pi; alpha) over the (C-1)-simplex.
class Dirichlet {
 public:
  /// Throws DomainError unless C >= 2 and every alpha_i is positive and finite.
  explicit Dirichlet(std::vector<double> alpha);

  std::size_t classes() const { return alpha_.size(); }
  std::span<const double> alpha() const { return alpha_; }
  double alpha(std::size_t i) const { return alpha_[i]; }
  /// Total concentration S = sum alpha.
  double precision() const { return precision_; }

  ProbVector mean() const;
  double log_pdf(const ProbVector& pi) const;
  /// Differential entropy (nats); may be negative.
  double diff_entropy() const;
  /// E_{pi ~ Dir}[H(Cat(pi))].
  double expected_cat_entropy() const;
  /// H(mean) - E[H(Cat(pi))], clipped at zero.
  double mutual_info() const;
  /// Free energy -log sum alpha.
  double energy() const;
  /// E[log 1/pi_y] = psi(S) - psi(alpha_y).
  double expected_neg_log(std::size_t y) const;
  /// E ||pi - e_y||^2.
  double expected_sq_error(std::size_t y) const;

  ProbVector sample(Rng& rng) const;

 private:
  std::vector<double> alpha_;
  double precision_ = 0.0;
};

/// KL(p || q) in nats.
double kl(const Dirichlet& p, const Dirichlet& q);

/// Dir(alpha0 + nu e_y): posterior of the prior under a nu-tempered
/// categorical likelihood.
Dirichlet tempered_posterior(std::span<const double> alpha0, double nu, std::size_t y);

/// Dir(alpha0 + nu eta): the fixed target that reverse-KL style objectives
/// fit when labels are drawn from eta.
Dirichlet optimal_target(std::span<const double> alpha0, double nu, const ProbVector& eta);

}  // namespace edl
