#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <vector>

#include "edl/specialfn.hpp"

using edl::digamma;
using edl::trigamma;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
  return xs;
}

}  // namespace

TEST_CASE("lgamma known values") {
  CHECK(edl::lgamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(edl::lgamma(5.0) - std::log(24.0)) <= 1e-12);
  CHECK(std::abs(edl::lgamma(0.5) - 0.5 * std::log(kPi)) <= 1e-12);
  CHECK_THROWS_AS(edl::lgamma(0.0), edl::DomainError);
  CHECK_THROWS_AS(edl::lgamma(-1.5), edl::DomainError);
}

TEST_CASE("digamma known values") {
  CHECK(std::abs(digamma(1.0) + edl::kEulerGamma) <= 1e-12);
  CHECK(std::abs(digamma(2.0) - (1.0 - edl::kEulerGamma)) <= 1e-12);
  CHECK(std::abs(digamma(0.5) - (-edl::kEulerGamma - 2.0 * std::log(2.0))) <= 1e-12);
  CHECK_THROWS_AS(digamma(0.0), edl::DomainError);
  CHECK_THROWS_AS(digamma(std::nan("")), edl::DomainError);
}

TEST_CASE("trigamma known values") {
  CHECK(std::abs(trigamma(1.0) - kPi * kPi / 6.0) <= 1e-12);
  CHECK(std::abs(trigamma(2.0) - (kPi * kPi / 6.0 - 1.0)) <= 1e-12);
  CHECK(std::abs(trigamma(0.5) - kPi * kPi / 2.0) <= 1e-12);
  CHECK_THROWS_AS(trigamma(-2.0), edl::DomainError);
}

TEST_CASE("log_beta known values") {
  CHECK(std::abs(edl::log_beta(std::vector{1.0, 1.0})) <= 1e-14);
  CHECK(std::abs(edl::log_beta(std::vector{1.0, 1.0, 1.0}) + std::log(2.0)) <= 1e-14);
  CHECK(std::abs(edl::log_beta(std::vector{2.0, 2.0}) - std::log(1.0 / 6.0)) <= 1e-14);
  CHECK_THROWS_AS(edl::log_beta(std::vector{1.0, 0.0}), edl::DomainError);
  CHECK_THROWS_AS(edl::log_beta(std::vector{1.0}), edl::DomainError);
}

TEST_CASE("accuracy against an independent implementation on [1e-3, 1e6]") {
  for (double x : log_grid(1e-3, 1e6, 400)) {
    CAPTURE(x);
    CHECK(std::abs(digamma(x) - boost::math::digamma(x)) <= 1e-10);
    CHECK(std::abs(edl::lgamma(x) - std::lgamma(x)) <= 1e-12);
    // Near x = 1e-3 trigamma is ~1e6, where one ulp is ~1.2e-10, so the
    // bound scales with the magnitude.
    const double ref = boost::math::trigamma(x);
    CHECK(std::abs(trigamma(x) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("digamma recurrence and monotonicity") {
  double prev = -INFINITY;
  for (int i = 1; i <= 1000; ++i) {
    const double x = 0.1 * i;
    CAPTURE(x);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-10);
    const double v = digamma(x);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("derivatives match central differences") {
  for (double x : log_grid(0.05, 500.0, 60)) {
    CAPTURE(x);
    const double h = 1e-5 * std::max(1.0, x);
    const double d_lgamma = (edl::lgamma(x + h) - edl::lgamma(x - h)) / (2 * h);
    const double d_digamma = (digamma(x + h) - digamma(x - h)) / (2 * h);
    CHECK(std::abs(d_lgamma - digamma(x)) <= 1e-6 * std::max(1.0, std::abs(digamma(x))));
    CHECK(std::abs(d_digamma - trigamma(x)) <= 1e-6 * std::max(1.0, std::abs(trigamma(x))));
  }
}
