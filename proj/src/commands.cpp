#include "edl/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <optional>
#include <fstream>
#include <iostream>
#include <sstream>

#include "edl/csv.hpp"
#include "edl/svg.hpp"

namespace edl::cli {
namespace {

namespace fs = std::filesystem;
using namespace streams;

class Outputs {
 public:
  Outputs(const RunConfig& config, std::string command)
      : dir_(config.out), command_(std::move(command)) {
    fs::create_directories(dir_);
    write("config.json", to_json(config).dump(2) + "\n");
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << bytes;
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    add(name);
  }

  /// Registers a file written elsewhere under the output directory.
  void add(const std::string& name) {
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) {
      artifacts_.push_back(name);
    }
  }

  void finish() {
    nlohmann::ordered_json manifest;
    manifest["version"] = 1;
    manifest["command"] = command_;
    nlohmann::ordered_json hashes = nlohmann::ordered_json::object();
    for (const auto& name : artifacts_) hashes[name] = sha256_file(dir_ / name);
    manifest["artifacts"] = hashes;
    std::ofstream out(dir_ / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<std::string> artifacts_;
};

template <typename T>
std::string to_csv(const T& data) {
  std::ostringstream out;
  write_csv(out, data);
  return out.str();
}

LabeledSet train_set_of(const RunConfig& c) {
  return make_mixture(MixtureGenerator::toy(c.data.noise_rate), c.data.n,
                      derive_seed(c.seed, kTrainDataStream));
}

LabeledSet test_set_of(const RunConfig& c) {
  return make_mixture(MixtureGenerator::toy(c.data.noise_rate), c.data.n_test,
                      derive_seed(c.seed, kTestDataStream));
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << csv::format(h.train_loss) << ',' << csv::format(h.val_loss) << ','
        << csv::format(h.val_accuracy) << '\n';
  }
  return out.str();
}

std::string checkpoint_bytes(const MetaModel& m) {
  std::ostringstream out;
  m.save(out);
  return out.str();
}

MetaModel load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  try {
    return MetaModel::load(in);
  } catch (const std::runtime_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentResult result_header(const RunConfig& c, std::string method) {
  ExperimentResult r;
  r.method = std::move(method);
  r.lambda = c.loss.lambda;
  r.n_train = c.data.n;
  r.seed = c.seed;
  return r;
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream out;
  write_results_csv(out, std::span(&r, 1));
  return out.str();
}

std::vector<MetricRow> fit_rows(const MetaModel& model, const LabeledSet& test) {
  double mi = 0.0, aleatoric = 0.0, precision = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Dirichlet d = model.forward(test.x(i));
    const UQReport r = report(d);
    mi += r.mi;
    aleatoric += r.aleatoric;
    precision += d.precision();
  }
  const double n = static_cast<double>(test.size());
  return {{"fit", "accuracy", accuracy(model, test)},
          {"fit", "mean_mi", mi / n},
          {"fit", "mean_aleatoric", aleatoric / n},
          {"fit", "mean_precision", precision / n}};
}

/// Reuses a saved bank when it was trained with the same kind, size and
/// seed; otherwise trains and saves a fresh one.
TeacherBank obtain_bank(const RunConfig& c, const LabeledSet& train_set, const fs::path& dir) {
  const TeacherKind kind = parse_teacher_kind(c.teachers.kind);
  const std::uint64_t seed = derive_seed(c.seed, kTeacherStream);
  if (fs::exists(dir / "manifest.json")) {
    TeacherBank saved = TeacherBank::load(dir);
    const bool same_size = saved.size() == c.teachers.m;
    // The first member seed identifies the bank's base seed.
    const bool same_seed = !saved.seeds.empty() && saved.seeds.front() == derive_seed(seed, 100);
    if (saved.kind == kind && same_size && same_seed) {
      std::cerr << "edl: reusing teacher bank in " << dir.string() << '\n';
      return saved;
    }
    std::cerr << "edl: existing bank in " << dir.string() << " does not match; retraining\n";
  }
  TeacherConfig tc;
  tc.arch = architecture_of(c);
  tc.arch.head = HeadKind::Direct;
  tc.schedule = c.teachers.schedule;
  tc.dropout_rate = c.teachers.dropout_rate;
  tc.workers = c.workers;
  TeacherBank bank = train_teachers(kind, train_set, c.teachers.m, seed, tc);
  fs::remove_all(dir);
  bank.save(dir);
  return bank;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

void gen_data(const RunConfig& c) {
  Outputs out(c, "gen-data");
  out.write("train.csv", to_csv(train_set_of(c)));
  out.write("test.csv", to_csv(test_set_of(c)));
  for (std::size_t k = 0; k < c.data.ood_sources.size(); ++k) {
    const auto& name = c.data.ood_sources[k];
    out.write("ood_" + name + ".csv",
              to_csv(sample_ood(ood_source_of(name), c.data.n_ood, ood_seed(c.seed, k))));
  }
  out.finish();
}

void train_model(const RunConfig& c) {
  const LossSpec spec = loss_spec_of(c);
  Outputs out(c, "train");
  Architecture arch = architecture_of(c);
  MetaModel init(arch, spec.prior(arch.classes), derive_seed(c.seed, kInitStream));
  const auto result = train(std::move(init), train_set_of(c), spec, c.schedule,
                            derive_seed(c.seed, kFitStream));
  out.write("model.ckpt", checkpoint_bytes(result.model));
  out.write("history.csv", history_csv(result.history));
  out.finish();
}

void distill_model(const RunConfig& c) {
  Architecture arch = architecture_of(c);
  if (arch.head != HeadKind::Direct) throw ConfigError("distill: student must use model.head = direct");
  Outputs out(c, "distill");
  const LabeledSet train_set = train_set_of(c);
  const TeacherBank bank = obtain_bank(c, train_set, out.path("bank"));
  out.add("bank/manifest.json");
  for (std::size_t j = 0; j < bank.members.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "bank/member_%03zu.ckpt", j);
    out.add(name);
  }
  MetaModel init(arch, {}, derive_seed(c.seed, kInitStream));
  const auto result = distill(bank, std::move(init), train_set,
                              {c.teachers.initial_temperature, c.teachers.decay_epochs},
                              c.schedule, derive_seed(c.seed, kFitStream));
  out.write("student.ckpt", checkpoint_bytes(result.model));
  out.write("history.csv", history_csv(result.history));
  ExperimentResult r = result_header(c, c.teachers.kind + "-distill");
  r.rows = fit_rows(result.model, test_set_of(c));
  out.write("metrics.csv", results_csv(r));
  out.finish();
}

void evaluate(const RunConfig& c, bool plot) {
  std::optional<MetaModel> model;
  std::optional<TeacherBank> bank;
  std::string method = c.loss.kind;
  if (!c.eval.bank.empty()) {
    try {
      bank = TeacherBank::load(c.eval.bank);
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
    method = to_string(bank->kind) + "-bank";
  } else {
    fs::path ckpt = c.eval.checkpoint;
    if (ckpt.empty()) {
      ckpt = fs::path(c.out) / "model.ckpt";
      if (!fs::exists(ckpt) && fs::exists(fs::path(c.out) / "student.ckpt")) {
        ckpt = fs::path(c.out) / "student.ckpt";
        method = c.teachers.kind + "-distill";
      }
    }
    model = load_checkpoint(ckpt);
  }
  const Predictor predictor = bank ? bank_predictor(*bank) : model_predictor(*model);
  const LabeledSet test = test_set_of(c);

  ExperimentResult r = result_header(c, method);
  if (c.eval.task == "ood") {
    for (const auto& metric_name : c.eval.ood_metrics) {
      const Metric metric = parse_metric(metric_name);
      if (bank && (metric == Metric::DEnt || metric == Metric::Energy)) {
        throw ConfigError("metric " + metric_name + " is not defined for a teacher bank");
      }
      for (std::size_t k = 0; k < c.data.ood_sources.size(); ++k) {
        const auto& name = c.data.ood_sources[k];
        const FeatureSet ood = sample_ood(ood_source_of(name), c.data.n_ood, ood_seed(c.seed, k));
        for (auto& row : ood_experiment(predictor, test, ood, name, metric)) r.rows.push_back(row);
      }
    }
  } else {
    r.rows = selective_experiment(predictor, test, parse_metric(c.eval.selective_metric));
  }

  Outputs out(c, "eval");
  out.write("results.csv", results_csv(r));
  if (plot) {
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& row : r.rows) {
      if (row.metric.rfind("auroc", 0) == 0 || row.metric == "accuracy") bars.emplace_back(row.metric, row.value);
    }
    out.write("results.svg", svg::bar_chart(bars, {c.eval.task + " evaluation (" + method + ")", "", "value", false}));
  }
  out.finish();
}

void run_sweep(const RunConfig& c) {
  const SweepKind kind = parse_sweep_kind(c.sweep.kind);
  const auto [method, loss] = parse_method(c.sweep.method);
  ExperimentConfig base = experiment_of(c, method, loss);
  const auto grid = sweep_grid_of(c);
  Outputs out(c, "sweep");
  const auto results = sweep(kind, grid, base, c.sweep.seeds);
  std::ostringstream csv_out;
  write_results_csv(csv_out, results);
  out.write("sweep.csv", csv_out.str());

  svg::Series series{c.sweep.method, sweep_means(results, kind, c.sweep.plot_metric)};
  const std::string x = kind == SweepKind::Lambda ? "lambda" : "training set size";
  out.write("sweep.svg", svg::line_chart({series}, {c.sweep.plot_metric + " vs " + x, x,
                                                    c.sweep.plot_metric, true}));
  out.finish();
}

}  // namespace edl::cli
