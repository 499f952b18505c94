#include "edl/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "edl/csv.hpp"
#include "edl/parallel.hpp"

namespace edl {
namespace {

using namespace streams;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TieGroup {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

// Groups of equal scores, in descending score order.
std::vector<TieGroup> tie_groups(const ScoredBinary& s) {
  if (s.pos_scores.empty() || s.neg_scores.empty()) {
    throw std::invalid_argument("ranking metric: both classes must be non-empty");
  }
  std::vector<std::pair<double, bool>> all;
  all.reserve(s.pos_scores.size() + s.neg_scores.size());
  for (double v : s.pos_scores) all.emplace_back(v, true);
  for (double v : s.neg_scores) all.emplace_back(v, false);
  for (const auto& [v, _] : all) {
    if (std::isnan(v)) throw std::invalid_argument("ranking metric: NaN score");
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<TieGroup> groups;
  for (std::size_t i = 0; i < all.size();) {
    TieGroup g;
    std::size_t j = i;
    for (; j < all.size() && all[j].first == all[i].first; ++j) {
      (all[j].second ? g.pos : g.neg) += 1;
    }
    groups.push_back(g);
    i = j;
  }
  return groups;
}

}  // namespace

double auroc(const ScoredBinary& s) {
  const auto groups = tie_groups(s);
  // Walk from the lowest score up, counting negatives strictly below.
  std::uint64_t twice_wins = 0;
  std::uint64_t neg_below = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    twice_wins += 2 * it->pos * neg_below + it->pos * it->neg;
    neg_below += it->neg;
  }
  const double pairs = 2.0 * static_cast<double>(s.pos_scores.size()) *
                       static_cast<double>(s.neg_scores.size());
  return static_cast<double>(twice_wins) / pairs;
}

double aupr(const ScoredBinary& s) {
  const auto groups = tie_groups(s);
  const double total_pos = static_cast<double>(s.pos_scores.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  double ap = 0.0;
  for (const TieGroup& g : groups) {
    tp += g.pos;
    fp += g.neg;
    if (g.pos == 0) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += static_cast<double>(g.pos) / total_pos * precision;
  }
  return ap;
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::MI: return "mi";
    case Metric::DEnt: return "dent";
    case Metric::Energy: return "energy";
    case Metric::Ent: return "ent";
    case Metric::MaxP: return "maxp";
    case Metric::Aleatoric: return "aleatoric";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  for (Metric m : {Metric::MI, Metric::DEnt, Metric::Energy, Metric::Ent, Metric::MaxP,
                   Metric::Aleatoric}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown metric '" + name +
                              "' (expected mi, dent, energy, ent, maxp, aleatoric)");
}

double uncertainty_score(const UQReport& r, Metric metric) {
  switch (metric) {
    case Metric::MI: return r.mi;
    case Metric::DEnt: return r.dent;
    case Metric::Energy: return r.energy;
    case Metric::Ent: return r.ent;
    case Metric::MaxP: return -r.maxp;
    case Metric::Aleatoric: return r.aleatoric;
  }
  return kNaN;
}

Predictor model_predictor(const MetaModel& model) {
  return [&model](std::span<const double> x) {
    const Dirichlet d = model.forward(x);
    const auto alpha = d.alpha();
    const auto label = static_cast<std::size_t>(std::max_element(alpha.begin(), alpha.end()) -
                                                alpha.begin());
    return Prediction{label, report(d)};
  };
}

Predictor bank_predictor(const TeacherBank& bank) {
  return [&bank](std::span<const double> x) {
    const std::size_t c = bank.classes();
    const auto z = teacher_logits(bank, x);
    std::vector<double> p(z.size());
    tempered_probs(z, c, 1.0, p);
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) mean[i % c] += p[i];
    const auto label =
        static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    return Prediction{label, ensemble_report(p, c)};
  };
}

double ExperimentResult::value(const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.metric == metric) return r.value;
  }
  return kNaN;
}

std::vector<MetricRow> ood_experiment(const Predictor& predictor, const LabeledSet& id_test,
                                      const FeatureSet& ood, const std::string& ood_name,
                                      Metric metric) {
  ScoredBinary s;
  for (std::size_t i = 0; i < id_test.size(); ++i) {
    s.neg_scores.push_back(uncertainty_score(predictor(id_test.x(i)).uq, metric));
  }
  for (std::size_t i = 0; i < ood.size(); ++i) {
    s.pos_scores.push_back(uncertainty_score(predictor(ood.x(i)).uq, metric));
  }
  const std::string suffix = "_" + to_string(metric) + "_" + ood_name;
  return {{"ood", "auroc" + suffix, auroc(s)}, {"ood", "aupr" + suffix, aupr(s)}};
}

std::vector<MetricRow> selective_experiment(const Predictor& predictor, const LabeledSet& id_test,
                                            Metric metric) {
  if (metric != Metric::Ent && metric != Metric::MaxP) {
    throw std::invalid_argument("selective_experiment: metric must be ent or maxp");
  }
  ScoredBinary s;
  for (std::size_t i = 0; i < id_test.size(); ++i) {
    const Prediction p = predictor(id_test.x(i));
    const double score = uncertainty_score(p.uq, metric);
    (p.label == id_test.y(i) ? s.neg_scores : s.pos_scores).push_back(score);
  }
  const double acc = static_cast<double>(s.neg_scores.size()) / static_cast<double>(id_test.size());
  const bool defined = !s.pos_scores.empty() && !s.neg_scores.empty();
  const std::string suffix = "_" + to_string(metric);
  return {{"selective", "accuracy", acc},
          {"selective", "auroc" + suffix, defined ? auroc(s) : kNaN},
          {"selective", "aupr" + suffix, defined ? aupr(s) : kNaN}};
}

std::string method_name(Method method, LossKind loss) {
  switch (method) {
    case Method::Evidential: return to_string(loss);
    case Method::BootstrapDistill: return "bootstrap-distill";
    case Method::EnsembleDistill: return "ensemble-distill";
    case Method::DropoutDistill: return "dropout-distill";
  }
  return "unknown";
}

std::pair<Method, LossKind> parse_method(const std::string& name) {
  if (name == "bootstrap-distill") return {Method::BootstrapDistill, LossKind::DISTILL};
  if (name == "ensemble-distill") return {Method::EnsembleDistill, LossKind::DISTILL};
  if (name == "dropout-distill") return {Method::DropoutDistill, LossKind::DISTILL};
  const LossKind kind = parse_loss_kind(name);
  if (kind == LossKind::DISTILL) {
    throw std::invalid_argument(
        "method DISTILL needs a teacher source: use bootstrap-distill, ensemble-distill or "
        "dropout-distill");
  }
  return {Method::Evidential, kind};
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  MixtureGenerator gen = MixtureGenerator::toy(config.noise_rate);
  const LabeledSet train_set = make_mixture(gen, config.n_train, derive_seed(seed, kTrainDataStream));
  const LabeledSet test_set = make_mixture(gen, config.n_test, derive_seed(seed, kTestDataStream));
  Architecture arch = config.arch;
  arch.classes = gen.classes();
  arch.input_dim = gen.dim();

  ExperimentResult result;
  result.method = method_name(config.method, config.loss.kind);
  result.lambda = config.loss.lambda;
  result.n_train = config.n_train;
  result.seed = seed;

  MetaModel init(arch, config.loss.prior(arch.classes), derive_seed(seed, kInitStream));
  std::optional<MetaModel> model;
  if (config.method == Method::Evidential) {
    model = train(std::move(init), train_set, config.loss, config.schedule,
                  derive_seed(seed, kFitStream)).model;
  } else {
    const TeacherKind kind = config.method == Method::BootstrapDistill ? TeacherKind::Bootstrap
                             : config.method == Method::EnsembleDistill ? TeacherKind::Ensemble
                                                                        : TeacherKind::Dropout;
    TeacherConfig tc;
    tc.arch = arch;
    tc.arch.head = HeadKind::Direct;
    tc.schedule = config.teacher_schedule;
    tc.dropout_rate = config.dropout_rate;
    tc.workers = config.workers;
    const TeacherBank bank =
        train_teachers(kind, train_set, config.teachers, derive_seed(seed, kTeacherStream), tc);
    model = distill(bank, std::move(init), train_set, config.anneal, config.schedule,
                    derive_seed(seed, kFitStream)).model;
  }

  const Predictor predictor = model_predictor(*model);
  double mi = 0.0;
  double aleatoric = 0.0;
  double ent = 0.0;
  double precision = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Dirichlet d = model->forward(test_set.x(i));
    const UQReport r = report(d);
    mi += r.mi;
    aleatoric += r.aleatoric;
    ent += r.ent;
    precision += d.precision();
    const auto a = d.alpha();
    hits += static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin()) ==
            test_set.y(i);
  }
  const double n = static_cast<double>(test_set.size());
  result.rows.push_back({"fit", "accuracy", static_cast<double>(hits) / n});
  result.rows.push_back({"fit", "mean_mi", mi / n});
  result.rows.push_back({"fit", "mean_aleatoric", aleatoric / n});
  result.rows.push_back({"fit", "mean_ent", ent / n});
  result.rows.push_back({"fit", "mean_precision", precision / n});

  for (std::size_t k = 0; k < config.ood_sources.size(); ++k) {
    const OodSource& src = config.ood_sources[k];
    const FeatureSet ood = sample_ood(src, config.n_ood, ood_seed(seed, k));
    for (auto& row : ood_experiment(predictor, test_set, ood, src.name(), config.ood_metric)) {
      result.rows.push_back(std::move(row));
    }
  }
  for (auto& row : selective_experiment(predictor, test_set, config.selective_metric)) {
    if (row.metric == "accuracy") continue;
    result.rows.push_back(std::move(row));
  }
  if (config.record_runtime) {
    result.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return result;
}

std::string to_string(SweepKind kind) {
  return kind == SweepKind::Lambda ? "lambda" : "samplesize";
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "lambda") return SweepKind::Lambda;
  if (name == "samplesize") return SweepKind::SampleSize;
  throw std::invalid_argument("unknown sweep kind '" + name + "' (expected lambda, samplesize)");
}

std::vector<ExperimentResult> sweep(SweepKind kind, std::span<const double> grid,
                                    const ExperimentConfig& base,
                                    std::span<const std::uint64_t> seeds) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  if (seeds.empty()) throw std::invalid_argument("sweep: no seeds");
  std::vector<ExperimentConfig> configs;
  for (double g : grid) {
    ExperimentConfig c = base;
    if (kind == SweepKind::Lambda) {
      c.loss.lambda = g;
    } else {
      if (!(g >= 1.0)) throw std::invalid_argument("sweep: sample sizes must be >= 1");
      c.n_train = static_cast<std::size_t>(g);
    }
    // Grid points already run in parallel; members train sequentially.
    c.workers = 1;
    configs.push_back(std::move(c));
  }
  const std::size_t jobs = configs.size() * seeds.size();
  std::vector<ExperimentResult> results(jobs);
  parallel_for(jobs, base.workers, [&](std::size_t j) {
    results[j] = run_experiment(configs[j / seeds.size()], seeds[j % seeds.size()]);
  });
  return results;
}

void write_results_csv(std::ostream& out, std::span<const ExperimentResult> results) {
  out << "task,loss,lambda,n_train,seed,metric,value,runtime_s\n";
  for (const ExperimentResult& r : results) {
    for (const MetricRow& row : r.rows) {
      out << row.task << ',' << r.method << ',' << csv::format(r.lambda) << ',' << r.n_train << ','
          << r.seed << ',' << row.metric << ',' << csv::format(row.value) << ','
          << csv::format(r.runtime_s) << '\n';
    }
  }
}

std::vector<std::pair<double, double>> sweep_means(std::span<const ExperimentResult> results,
                                                   SweepKind kind, const std::string& metric) {
  std::vector<std::pair<double, double>> out;
  std::vector<std::size_t> counts;
  for (const ExperimentResult& r : results) {
    const double key = kind == SweepKind::Lambda ? r.lambda : static_cast<double>(r.n_train);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == key; });
    if (it == out.end()) {
      out.emplace_back(key, 0.0);
      counts.push_back(0);
      it = out.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - out.begin());
    it->second += r.value(metric);
    ++counts[idx];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].second /= static_cast<double>(counts[i]);
  return out;
}

}  // namespace edl
