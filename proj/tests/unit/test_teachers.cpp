#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "edl/teachers.hpp"

using namespace edl;

namespace {

TeacherConfig small_config(std::size_t epochs = 20) {
  TeacherConfig c;
  c.arch.hidden = {16, 16};
  c.schedule.epochs = epochs;
  return c;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double mean_bank_mi(const TeacherBank& bank, const LabeledSet& test) {
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) acc += bank_meta_report(bank, test.x(i)).mi;
  return acc / test.size();
}

}  // namespace

TEST_CASE("anneal schedule") {
  AnnealSchedule a;
  CHECK(a.temperature(0) == 5.0);
  CHECK(a.temperature(15) == doctest::Approx(3.0));
  CHECK(a.temperature(30) == 1.0);
  CHECK(a.temperature(100) == 1.0);
  AnnealSchedule flat{1.0, 30};
  for (std::size_t e = 0; e < 40; ++e) CHECK(flat.temperature(e) == 1.0);
}

TEST_CASE("tempered probabilities") {
  const std::vector<double> logits{3.0, -1.0, 0.5, 3.0, -1.0, 0.5};
  std::vector<double> p(6);
  tempered_probs(logits, 3, 1.0, p);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    CHECK(p[k] == p[k + 3]);
    CHECK(p[k] > 0.0);
    sum += p[k];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  // softmax then smoothing by 1e-4 toward uniform
  const double z = std::exp(3.0) + std::exp(-1.0) + std::exp(0.5);
  CHECK(p[0] == doctest::Approx((1 - 1e-4) * std::exp(3.0) / z + 1e-4 / 3).epsilon(1e-14));

  tempered_probs(logits, 3, 1e9, p);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
  CHECK_THROWS_AS(tempered_probs(logits, 3, 0.5, p), std::invalid_argument);

  const std::vector<double> huge{800.0, -800.0};
  std::vector<double> q(2);
  tempered_probs(huge, 2, 1.0, q);
  CHECK(q[1] == doctest::Approx(0.5e-4));
}

TEST_CASE("train_teachers") {
  const auto set = make_gaussian_mixture(600, 0.0, 21);
  const auto test = make_gaussian_mixture(500, 0.0, 22);

  SUBCASE("ensemble members classify the toy set") {
    const auto bank = train_teachers(TeacherKind::Ensemble, set, 5, 3, small_config());
    REQUIRE(bank.size() == 5);
    CHECK(std::set<std::uint64_t>(bank.seeds.begin(), bank.seeds.end()).size() == 5);
    for (const auto& m : bank.members) CHECK(accuracy(m, test) >= 0.9);
    // A point deep inside class 1.
    for (const auto& p : teacher_probs(bank, std::vector{0.0, -0.5})) CHECK(p.argmax() == 1);
  }
  SUBCASE("bootstrap subsets are distinct") {
    const auto subsets = bootstrap_indices(set.size(), 5, kBootstrapRatio, 9);
    for (std::size_t a = 0; a < subsets.size(); ++a)
      for (std::size_t b = a + 1; b < subsets.size(); ++b) CHECK(subsets[a] != subsets[b]);
  }
  SUBCASE("same seed, same bank") {
    const auto a = train_teachers(TeacherKind::Bootstrap, set, 3, 8, small_config(4));
    const auto b = train_teachers(TeacherKind::Bootstrap, set, 3, 8, small_config(4));
    CHECK(a.members == b.members);
    CHECK(a.seeds == b.seeds);
    auto parallel = small_config(4);
    parallel.workers = 3;
    CHECK(train_teachers(TeacherKind::Bootstrap, set, 3, 8, parallel).members == a.members);
  }
  SUBCASE("dropout bank") {
    const auto bank = train_teachers(TeacherKind::Dropout, set, 10, 4, small_config(5));
    CHECK(bank.members.size() == 1);
    CHECK(bank.size() == 10);
    const auto p = teacher_probs(bank, std::vector{1.0, 1.5});
    CHECK(p.size() == 10);
    bool differ = false;
    for (const auto& v : p) differ |= v[0] != p[0][0];
    CHECK(differ);
    // Masks are fixed per pass, so repeated queries agree.
    const auto again = teacher_probs(bank, std::vector{1.0, 1.5});
    for (std::size_t j = 0; j < p.size(); ++j) CHECK(p[j][0] == again[j][0]);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train_teachers(TeacherKind::Ensemble, set, 1, 1, small_config()),
                    std::invalid_argument);
    auto bad = small_config();
    bad.dropout_rate = 1.0;
    CHECK_THROWS_AS(train_teachers(TeacherKind::Dropout, set, 5, 1, bad), std::invalid_argument);
    CHECK_THROWS_AS(train_teachers(TeacherKind::Bootstrap, make_gaussian_mixture(2, 0.0, 1), 3, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("bank meta report") {
  TeacherBank same;
  same.kind = TeacherKind::Ensemble;
  const MetaModel m(small_config().arch, {}, 5);
  same.members = {m, m, m};
  const auto r = bank_meta_report(same, std::vector{0.3, 0.1});
  CHECK(r.mi == doctest::Approx(0.0).scale(1e-12));
  CHECK(std::isnan(r.dent));
  CHECK(std::isnan(r.energy));
}

TEST_CASE("bank persistence") {
  const auto set = make_gaussian_mixture(200, 0.0, 2);
  const auto bank = train_teachers(TeacherKind::Bootstrap, set, 3, 6, small_config(2));
  const auto dir = std::filesystem::temp_directory_path() / "edl_test_bank";
  std::filesystem::remove_all(dir);
  bank.save(dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const auto back = TeacherBank::load(dir);
  CHECK(back.kind == bank.kind);
  CHECK(back.seeds == bank.seeds);
  CHECK(back.members == bank.members);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(TeacherBank::load(dir));
}

TEST_CASE("distillation") {
  const auto set = make_gaussian_mixture(600, 0.0, 31);
  const auto test = make_gaussian_mixture(300, 0.0, 32);
  Architecture arch;
  arch.hidden = {16, 16};
  Schedule schedule;
  schedule.epochs = 40;

  SUBCASE("identical teachers drive concentration up") {
    TeacherBank bank;
    bank.kind = TeacherKind::Ensemble;
    const auto teacher = train_teachers(TeacherKind::Ensemble, set, 2, 1, small_config()).members[0];
    bank.members = {teacher, teacher, teacher, teacher};
    Schedule one = schedule;
    one.epochs = 1;
    const auto early = distill(bank, MetaModel(arch, {}, 2), set, {}, one, 3).model;
    const auto late = distill(bank, MetaModel(arch, {}, 2), set, {}, schedule, 3).model;
    std::size_t grew = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
      grew += late.forward(test.x(i)).precision() > early.forward(test.x(i)).precision();
    CHECK(grew == test.size());
  }
  SUBCASE("initial temperature 1 is no annealing") {
    const auto bank = train_teachers(TeacherKind::Bootstrap, set, 3, 4, small_config(3));
    Schedule s = schedule;
    s.epochs = 5;
    s.min_epochs = 30;
    const auto a = distill(bank, MetaModel(arch, {}, 2), set, {1.0, 30}, s, 3);
    const auto b = distill(bank, MetaModel(arch, {}, 2), set, {1.0, 0}, s, 3);
    CHECK(a.model == b.model);
  }
  SUBCASE("fidelity improves over training") {
    const auto bank = train_teachers(TeacherKind::Bootstrap, set, 10, 5, small_config());
    std::vector<double> bank_mi;
    for (std::size_t i = 0; i < test.size(); ++i) bank_mi.push_back(bank_meta_report(bank, test.x(i)).mi);
    std::vector<double> gaps;
    for (std::size_t epochs : {1, 5, 15, 40}) {
      Schedule s = schedule;
      s.epochs = epochs;
      s.patience = 1000;
      const auto student = distill(bank, MetaModel(arch, {}, 2), set, {}, s, 3).model;
      double gap = 0.0;
      for (std::size_t i = 0; i < test.size(); ++i)
        gap += std::abs(report(student.forward(test.x(i))).mi - bank_mi[i]);
      gaps.push_back(gap / test.size());
    }
    int inversions = 0;
    for (std::size_t k = 1; k < gaps.size(); ++k) inversions += gaps[k] > gaps[k - 1];
    CAPTURE(gaps[0]);
    CAPTURE(gaps.back());
    CHECK(inversions <= 1);
    CHECK(gaps.back() < gaps.front());
  }
  SUBCASE("density students are rejected") {
    TeacherBank bank;
    bank.members = {MetaModel(arch, {}, 1), MetaModel(arch, {}, 2)};
    Architecture dens = arch;
    dens.head = HeadKind::Density;
    CHECK_THROWS_AS(distill(bank, MetaModel(dens, {}, 1), set, {}, schedule, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("bootstrap bank epistemic uncertainty shrinks with data") {
  const auto test = make_gaussian_mixture(500, 0.0, 41);
  auto config = small_config(10);
  config.schedule.min_steps = 400;
  double prev = INFINITY;
  for (std::size_t n : {300, 3000, 30000}) {
    const auto bank = train_teachers(TeacherKind::Bootstrap, make_gaussian_mixture(n, 0.0, 40), 5, 7, config);
    const double mi = mean_bank_mi(bank, test);
    CAPTURE(n);
    CHECK(mi < prev);
    prev = mi;
  }
}

TEST_CASE("bootstrap student is more uncertain off support") {
  const auto set = make_gaussian_mixture(600, 0.0, 31);
  Architecture arch;
  arch.hidden = {16, 16};
  Schedule schedule;
  schedule.epochs = 40;
  const auto bank = train_teachers(TeacherKind::Bootstrap, set, 10, 4, small_config());
  const auto student = distill(bank, MetaModel(arch, {}, 2), set, {}, schedule, 3).model;
  const auto ood = sample_ood(OodSource::uniform_box(), 500, 9);
  const auto id = make_gaussian_mixture(500, 0.0, 33);
  std::vector<double> mi_id, mi_ood;
  for (std::size_t i = 0; i < 500; ++i) {
    mi_id.push_back(report(student.forward(id.x(i))).mi);
    mi_ood.push_back(report(student.forward(ood.x(i))).mi);
  }
  CHECK(median(mi_ood) > median(mi_id));
}
