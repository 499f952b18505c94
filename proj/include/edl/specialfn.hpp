#pragma once

#include <span>
#include <stdexcept>

namespace edl {

/// Raised when an argument lies outside a function's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// log Gamma(x) for x > 0.
double lgamma(double x);

/// Digamma psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);

/// Trigamma psi'(x) for x > 0.
double trigamma(double x);

/// log B(alpha) = sum_i lgamma(alpha_i) - lgamma(sum_i alpha_i).
double log_beta(std::span<const double> alpha);

}  // namespace edl
