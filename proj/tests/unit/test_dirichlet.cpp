#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "edl/dirichlet.hpp"
#include "oracles.hpp"

using edl::Dirichlet;
using edl::ProbVector;

namespace {

constexpr std::size_t kDraws = 1'000'000;

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("construction rejects invalid parameters") {
  CHECK_THROWS_AS(Dirichlet({1.0}), edl::DomainError);
  CHECK_THROWS_AS(Dirichlet({1.0, 0.0}), edl::DomainError);
  CHECK_THROWS_AS(Dirichlet({1.0, -2.0}), edl::DomainError);
  CHECK_THROWS_AS(Dirichlet({1.0, INFINITY}), edl::DomainError);
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), edl::DomainError);
  CHECK_NOTHROW(ProbVector({0.5, 0.5 + 5e-10}));
}

TEST_CASE("log_pdf") {
  CHECK(Dirichlet({1, 1, 1}).log_pdf(ProbVector({0.2, 0.3, 0.5})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(Dirichlet({2, 1}).log_pdf(ProbVector({0.5, 0.5}))) <= 1e-14);

  const Dirichlet d({3, 2});
  const std::vector<double> a{3, 2};
  CHECK(d.log_pdf(ProbVector({0.7, 0.3})) ==
        doctest::Approx(oracle::log_density(a, std::vector{0.7, 0.3})).epsilon(1e-13));
  // The density on the 1-simplex integrates to one.
  const double mass = oracle::simpson(
      [&](double t) { return t <= 0.0 || t >= 1.0 ? 0.0 : std::exp(d.log_pdf(ProbVector({t, 1 - t}))); },
      0.0, 1.0, 2000);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(Dirichlet({2, 1}).log_pdf(ProbVector({0.0, 1.0})), edl::DomainError);
  CHECK_NOTHROW(Dirichlet({1, 2}).log_pdf(ProbVector({0.0, 1.0})));
}

TEST_CASE("kl closed form") {
  CHECK(edl::kl(Dirichlet({1, 1}), Dirichlet({1, 1})) == 0.0);
  CHECK(edl::kl(Dirichlet({2, 2}), Dirichlet({1, 1})) == doctest::Approx(0.1250925).epsilon(1e-6));
  CHECK_THROWS(edl::kl(Dirichlet({1, 1}), Dirichlet({1, 1, 1})));

  for (const auto& [p, q] : std::vector<std::pair<std::vector<double>, std::vector<double>>>{
           {{2, 2}, {1, 1}}, {{5, 1, 1}, {1, 1, 1}}}) {
    const auto est = oracle::mc(p, kDraws, 11, [&](const std::vector<double>& pi) {
      return oracle::log_density(p, pi) - oracle::log_density(q, pi);
    });
    const double closed = edl::kl(Dirichlet(p), Dirichlet(q));
    CAPTURE(closed);
    CAPTURE(est.mean);
    CHECK(closed > 0.0);
    CHECK(std::abs(closed - est.mean) <= 4.0 * est.se);
  }
}

TEST_CASE("differential entropy") {
  CHECK(std::abs(Dirichlet({1, 1}).diff_entropy()) <= 1e-14);
  CHECK(Dirichlet({1, 1, 1}).diff_entropy() == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  const std::vector<double> a{10, 10};
  const auto est = oracle::mc(a, kDraws, 12,
                              [&](const std::vector<double>& pi) { return -oracle::log_density(a, pi); });
  CHECK(std::abs(Dirichlet(a).diff_entropy() - est.mean) <= 4.0 * est.se);
}

TEST_CASE("mean") {
  CHECK(to_vec(Dirichlet({1, 3}).mean().values()) == std::vector{0.25, 0.75});
  const auto m = Dirichlet({1, 1, 1}).mean();
  for (std::size_t i = 0; i < 3; ++i) CHECK(m[i] == doctest::Approx(1.0 / 3));
  const auto m2 = Dirichlet({2, 3, 5}).mean();
  CHECK(m2[0] == doctest::Approx(0.2));
  CHECK(m2[1] == doctest::Approx(0.3));
  CHECK(m2[2] == doctest::Approx(0.5));
}

TEST_CASE("expected categorical entropy") {
  CHECK(Dirichlet({1, 1}).expected_cat_entropy() == doctest::Approx(0.5).epsilon(1e-14));
  for (const std::vector<double>& a : {std::vector<double>{1000, 1000}, std::vector<double>{100, 1}}) {
    const auto est = oracle::mc(a, kDraws, 13, oracle::entropy);
    CHECK(std::abs(Dirichlet(a).expected_cat_entropy() - est.mean) <= 4.0 * est.se);
  }
  CHECK(std::abs(Dirichlet({1000, 1000}).expected_cat_entropy() - std::log(2.0)) <= 1e-3);
  CHECK(Dirichlet({100, 1}).expected_cat_entropy() < 0.06);
}

TEST_CASE("mutual information") {
  CHECK(Dirichlet({1, 1}).mutual_info() == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-13));
  CHECK(Dirichlet({1, 1, 1}).mutual_info() ==
        doctest::Approx(std::log(3.0) - 5.0 / 6.0).epsilon(1e-13));
  const double mi = Dirichlet({1000, 1000}).mutual_info();
  CHECK(mi >= 0.0);
  CHECK(mi <= 1e-3);
}

TEST_CASE("energy") {
  CHECK(Dirichlet(std::vector<double>(10, 1.0)).energy() == doctest::Approx(-std::log(10.0)));
  const auto eta = ProbVector({0.2, 0.5, 0.3});
  CHECK(edl::optimal_target(std::vector{1.0, 1.0, 1.0}, 100.0, eta).energy() ==
        doctest::Approx(-std::log(103.0)).epsilon(1e-14));
  CHECK(std::abs(Dirichlet({0.5, 0.5}).energy()) <= 1e-15);
}

TEST_CASE("sampling") {
  SUBCASE("deterministic under a seed") {
    edl::Rng a(42), b(42);
    const Dirichlet d({1, 1});
    CHECK(to_vec(d.sample(a).values()) == to_vec(d.sample(b).values()));
  }
  SUBCASE("mean and covariance match moments") {
    const std::vector<double> alpha{1, 1, 1};
    const Dirichlet d(alpha);
    const double s = 3.0;
    edl::Rng rng(5);
    const std::size_t n = kDraws;
    std::vector<double> sum(3, 0.0), sum2(9, 0.0), sum4(9, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = d.sample(rng);
      for (std::size_t a = 0; a < 3; ++a) {
        sum[a] += p[a];
        for (std::size_t b = 0; b < 3; ++b) {
          // centred at the true mean 1/3 so the product is unbiased for the covariance
          const double v = (p[a] - 1.0 / 3) * (p[b] - 1.0 / 3);
          sum2[a * 3 + b] += v;
          sum4[a * 3 + b] += v * v;
        }
      }
    }
    for (std::size_t a = 0; a < 3; ++a) {
      const double m = sum[a] / n;
      const double var = alpha[a] * (s - alpha[a]) / (s * s * (s + 1));
      CHECK(std::abs(m - alpha[a] / s) <= 4.0 * std::sqrt(var / n));
      for (std::size_t b = 0; b < 3; ++b) {
        const double expected = ((a == b ? s * alpha[a] : 0.0) - alpha[a] * alpha[b]) / (s * s * (s + 1));
        const double m2 = sum2[a * 3 + b] / n;
        const double se = std::sqrt(std::max(0.0, sum4[a * 3 + b] / n - m2 * m2) / n);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(std::abs(m2 - expected) <= 4.0 * se);
      }
    }
  }
  SUBCASE("Dir(5,5) mean") {
    const Dirichlet d({5, 5});
    edl::Rng rng(9);
    double sum = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) sum += d.sample(rng)[0];
    const double se = std::sqrt(25.0 / (100.0 * 11.0) / kDraws);
    CHECK(std::abs(sum / kDraws - 0.5) <= 4.0 * se);
  }
  SUBCASE("small shapes stay on the simplex") {
    const Dirichlet d({0.05, 0.05, 0.05});
    edl::Rng rng(3);
    for (int i = 0; i < 10000; ++i) CHECK_NOTHROW(d.sample(rng));
  }
}

TEST_CASE("tempered posterior and optimal target") {
  const std::vector<double> ones3{1, 1, 1};
  CHECK(to_vec(edl::tempered_posterior(ones3, 100, 1).alpha()) == std::vector<double>{1, 101, 1});
  const auto weak = edl::tempered_posterior(std::vector{1.0, 1.0}, 1e-9, 0);
  CHECK(weak.alpha(0) == doctest::Approx(1.0));
  CHECK(to_vec(edl::tempered_posterior(std::vector{2.0, 3.0}, 10, 0).alpha()) ==
        std::vector<double>{12, 3});
  CHECK_THROWS(edl::tempered_posterior(ones3, 1.0, 3));

  CHECK(to_vec(edl::optimal_target(std::vector{1.0, 1.0}, 10, ProbVector({0.3, 0.7})).alpha()) ==
        std::vector<double>{4, 8});
  CHECK(to_vec(edl::optimal_target(ones3, 7.0, ProbVector::one_hot(3, 2)).alpha()) ==
        to_vec(edl::tempered_posterior(ones3, 7.0, 2).alpha()));
  CHECK(to_vec(edl::optimal_target(std::vector{1.0, 1.0}, 100, ProbVector({0.5, 0.5})).alpha()) ==
        std::vector<double>{51, 51});
  CHECK_THROWS(edl::optimal_target(ones3, 1.0, ProbVector({0.5, 0.5})));
}

TEST_CASE("invariants over random Dirichlets") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> conc(0.1, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + trial % 4;
    std::vector<double> a(c), b(c);
    for (std::size_t i = 0; i < c; ++i) {
      a[i] = conc(rng);
      b[i] = conc(rng);
    }
    const Dirichlet p(a), q(b);
    CHECK(edl::kl(p, q) >= 0.0);
    CHECK(std::abs(edl::kl(p, p)) <= 1e-12);
    const double h = edl::shannon_entropy(p.mean().values());
    CHECK(std::abs(h - p.mutual_info() - p.expected_cat_entropy()) <= 1e-12);
  }
}

TEST_CASE("energy of the optimal target tracks -log nu") {
  std::mt19937_64 rng(7);
  for (std::size_t c : {2u, 3u, 10u}) {
    for (double nu : {1.0, 10.0, 1e2, 1e4}) {
      std::vector<double> w(c);
      for (double& v : w) v = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      const auto eta = ProbVector::normalized(w);
      const double e = edl::optimal_target(std::vector<double>(c, 1.0), nu, eta).energy();
      CHECK(e == doctest::Approx(-std::log(c + nu)).epsilon(1e-13));
      CHECK(std::abs(e + std::log(nu)) <= std::log(1.0 + c / nu) + 1e-12);
    }
  }
}
