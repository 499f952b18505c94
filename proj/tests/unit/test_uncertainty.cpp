#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "edl/uncertainty.hpp"
#include "oracles.hpp"

using namespace edl;

namespace {

constexpr double kLn2 = 0.69314718055994531;

// MC estimate of E[H(Cat(pi))] for pi ~ Dir(alpha).
oracle::Estimate mc_aleatoric(const std::vector<double>& a, std::uint64_t seed) {
  return oracle::mc(a, 200'000, seed, [](const auto& p) { return oracle::entropy(p); });
}

}  // namespace

TEST_CASE("report of the flat Dirichlet") {
  const auto r = report(Dirichlet({1, 1}));
  CHECK(r.mi == doctest::Approx(kLn2 - 0.5).epsilon(1e-13));
  CHECK(r.dent == doctest::Approx(0.0));
  CHECK(r.ent == doctest::Approx(kLn2).epsilon(1e-14));
  CHECK(r.maxp == 0.5);
  CHECK(r.aleatoric == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(r.energy == doctest::Approx(-kLn2).epsilon(1e-14));
}

TEST_CASE("concentrated Dirichlets") {
  SUBCASE("balanced") {
    const std::vector<double> a{1000, 1000};
    const auto r = report(Dirichlet(a));
    CHECK(r.mi <= 1e-3);
    CHECK(r.ent == doctest::Approx(kLn2));
    const auto est = mc_aleatoric(a, 1);
    CHECK(std::abs(r.aleatoric - est.mean) <= 4 * est.se);
  }
  SUBCASE("one-sided") {
    const std::vector<double> a{1000, 1};
    const auto r = report(Dirichlet(a));
    CHECK(r.maxp == doctest::Approx(1000.0 / 1001.0));
    CHECK(r.ent < 0.01);
    CHECK(r.mi < 1e-3);
    const auto est = mc_aleatoric(a, 2);
    CHECK(std::abs(r.aleatoric - est.mean) <= 4 * est.se);
  }
}

TEST_CASE("decomposition and ranges hold on random Dirichlets") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(std::log(1e-3), std::log(1e5));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + rng() % 8;
    std::vector<double> a(c);
    for (double& v : a) v = std::exp(u(rng));
    const auto r = report(Dirichlet(a));
    CHECK(std::abs(r.ent - (r.mi + r.aleatoric)) <= 1e-10);
    CHECK(r.mi >= 0.0);
    CHECK(r.maxp >= 1.0 / c - 1e-15);
    CHECK(r.maxp <= 1.0);
  }
}

TEST_CASE("epistemic part vanishes on the fixed target as nu grows") {
  const ProbVector eta({0.6, 0.3, 0.1});
  const double h = oracle::entropy({0.6, 0.3, 0.1});
  double prev_mi = INFINITY;
  double prev_gap = INFINITY;
  for (double nu : {10.0, 100.0, 1000.0, 10000.0}) {
    const auto r = report(optimal_target(std::vector{1.0, 1.0, 1.0}, nu, eta));
    CHECK(r.mi < prev_mi);
    const double gap = std::abs(r.aleatoric - h);
    CHECK(gap < prev_gap);
    prev_mi = r.mi;
    prev_gap = gap;
  }
  CHECK(prev_mi < 1e-3);
  CHECK(prev_gap < 1e-2);
}

TEST_CASE("ensemble report") {
  const std::vector<double> same{0.2, 0.8, 0.2, 0.8, 0.2, 0.8};
  const auto r = ensemble_report(same, 2);
  CHECK(r.mi == doctest::Approx(0.0));
  CHECK(std::isnan(r.dent));
  CHECK(std::isnan(r.energy));
  const auto split = ensemble_report(std::vector{1.0, 0.0, 0.0, 1.0}, 2);
  CHECK(split.mi == doctest::Approx(kLn2));
  CHECK(split.aleatoric == 0.0);
  CHECK(split.maxp == 0.5);
  CHECK_THROWS_AS(ensemble_report(std::vector{0.5, 0.5, 1.0}, 2), std::invalid_argument);
}

TEST_CASE("report CSV") {
  const std::vector<UQReport> rows{report(Dirichlet({1, 1})), ensemble_report(std::vector{0.5, 0.5, 0.5, 0.5}, 2)};
  std::ostringstream out;
  write_report_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "sample_id,mi,dent,ent,maxp,aleatoric,energy");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("1,", 0) == 0);
  CHECK(line.find("nan") != std::string::npos);
}
