#include "edl/specialfn.hpp"

#include <cmath>
#include <string>

namespace edl {
namespace {

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Shift point for the asymptotic expansions; beyond it the truncated series
// below is accurate to double precision.
constexpr double kAsymptoticFrom = 10.0;

}  // namespace

double lgamma(double x) {
  require_positive(x, "lgamma");
  return std::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kAsymptoticFrom) {
    shift += 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ log x - 1/(2x) - sum B_2k / (2k x^2k)
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double tail =
      r2 * (1.0 / 12 -
            r2 * (1.0 / 120 -
                  r2 * (1.0 / 252 -
                        r2 * (1.0 / 240 - r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 / 12.0))))));
  return std::log(x) - 0.5 * r - tail - shift;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < kAsymptoticFrom) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r * (1.0 + r * (0.5 +
                      r * (1.0 / 6 -
                           r2 * (1.0 / 30 -
                                 r2 * (1.0 / 42 -
                                       r2 * (1.0 / 30 - r2 * (5.0 / 66 - r2 * (691.0 / 2730))))))));
  return series + shift;
}

double log_beta(std::span<const double> alpha) {
  if (alpha.size() < 2) throw DomainError("log_beta: need at least two components");
  double total = 0.0;
  double acc = 0.0;
  for (double a : alpha) {
    acc += lgamma(a);
    total += a;
  }
  return acc - lgamma(total);
}

}  // namespace edl
