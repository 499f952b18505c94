#include "edl/teachers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "edl/parallel.hpp"

namespace edl {
namespace {

constexpr std::uint64_t kMemberStream = 100;
constexpr std::uint64_t kSubsetStream = 200;
constexpr std::uint64_t kMaskStream = 300;
constexpr int kManifestVersion = 1;

std::string member_file(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%03zu.ckpt", j);
  return buf;
}

}  // namespace

std::string to_string(TeacherKind kind) {
  switch (kind) {
    case TeacherKind::Ensemble: return "ensemble";
    case TeacherKind::Bootstrap: return "bootstrap";
    case TeacherKind::Dropout: return "dropout";
  }
  return "unknown";
}

TeacherKind parse_teacher_kind(const std::string& name) {
  if (name == "ensemble") return TeacherKind::Ensemble;
  if (name == "bootstrap") return TeacherKind::Bootstrap;
  if (name == "dropout") return TeacherKind::Dropout;
  throw std::invalid_argument("unknown teacher kind '" + name +
                              "' (expected ensemble, bootstrap, dropout)");
}

double AnnealSchedule::temperature(std::size_t epoch) const {
  if (decay_epochs == 0) return 1.0;
  const double t = initial_temperature - (initial_temperature - 1.0) *
                                             static_cast<double>(epoch) /
                                             static_cast<double>(decay_epochs);
  return std::max(1.0, t);
}

TeacherBank train_teachers(TeacherKind kind, const LabeledSet& base_set, std::size_t m,
                           std::uint64_t seed, const TeacherConfig& config) {
  if (m < 2) throw std::invalid_argument("train_teachers: need at least two members");
  if (config.arch.head != HeadKind::Direct) {
    throw std::invalid_argument("train_teachers: teachers use a direct (softmax) head");
  }
  LossSpec ce;
  ce.kind = LossKind::CrossEntropy;
  TeacherBank bank;
  bank.kind = kind;

  if (kind == TeacherKind::Dropout) {
    if (!(config.dropout_rate > 0.0 && config.dropout_rate < 1.0)) {
      throw std::invalid_argument("train_teachers: dropout rate must lie in (0,1)");
    }
    Architecture arch = config.arch;
    arch.dropout = config.dropout_rate;
    const std::uint64_t s = derive_seed(seed, kMemberStream);
    bank.members.push_back(train(MetaModel(arch, {}, s), base_set, ce, config.schedule, s).model);
    bank.seeds.push_back(s);
    bank.passes = m;
    bank.mask_seed = derive_seed(seed, kMaskStream);
    return bank;
  }

  std::vector<std::vector<std::size_t>> subsets;
  if (kind == TeacherKind::Bootstrap) {
    subsets = bootstrap_indices(base_set.size(), m, kBootstrapRatio,
                                derive_seed(seed, kSubsetStream));
    if (subsets.front().size() < 2) {
      throw std::invalid_argument("train_teachers: not enough data for a bootstrap split");
    }
  }
  bank.seeds.resize(m);
  std::vector<std::optional<MetaModel>> trained(m);
  parallel_for(m, config.workers, [&](std::size_t j) {
    const std::uint64_t s = derive_seed(seed, kMemberStream + j);
    bank.seeds[j] = s;
    MetaModel init(config.arch, {}, s);
    if (kind == TeacherKind::Bootstrap) {
      trained[j] = train(std::move(init), base_set.subset(subsets[j]), ce, config.schedule, s).model;
    } else {
      trained[j] = train(std::move(init), base_set, ce, config.schedule, s).model;
    }
  });
  for (auto& t : trained) bank.members.push_back(std::move(*t));
  return bank;
}

std::vector<double> teacher_logits(const TeacherBank& bank, std::span<const double> x) {
  const std::size_t c = bank.classes();
  std::vector<double> out;
  out.reserve(bank.size() * c);
  if (bank.kind == TeacherKind::Dropout) {
    for (std::size_t j = 0; j < bank.passes; ++j) {
      // Fixed mask stream per pass: pass j is the same subnetwork for every x.
      Rng masks(derive_seed(bank.mask_seed, j));
      const auto z = bank.members.front().logits(x, &masks);
      out.insert(out.end(), z.begin(), z.end());
    }
    return out;
  }
  for (const MetaModel& m : bank.members) {
    const auto z = m.logits(x);
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

void tempered_probs(std::span<const double> logits, std::size_t classes, double temperature,
                    std::span<double> out) {
  if (!(temperature >= 1.0)) throw std::invalid_argument("tempered_probs: temperature must be >= 1");
  const double floor = kTeacherSmoothing / static_cast<double>(classes);
  for (std::size_t off = 0; off < logits.size(); off += classes) {
    const auto z = logits.subspan(off, classes);
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      out[off + k] = std::exp((z[k] - top) / temperature);
      total += out[off + k];
    }
    for (std::size_t k = 0; k < classes; ++k) {
      out[off + k] = (1.0 - kTeacherSmoothing) * out[off + k] / total + floor;
    }
  }
}

std::vector<ProbVector> teacher_probs(const TeacherBank& bank, std::span<const double> x,
                                      double temperature) {
  const std::size_t c = bank.classes();
  const auto z = teacher_logits(bank, x);
  std::vector<double> p(z.size());
  tempered_probs(z, c, temperature, p);
  std::vector<ProbVector> out;
  for (std::size_t off = 0; off < p.size(); off += c) {
    out.push_back(ProbVector::normalized({p.begin() + off, p.begin() + off + c}));
  }
  return out;
}

UQReport bank_meta_report(const TeacherBank& bank, std::span<const double> x) {
  const std::size_t c = bank.classes();
  const auto z = teacher_logits(bank, x);
  std::vector<double> p(z.size());
  tempered_probs(z, c, 1.0, p);
  return ensemble_report(p, c);
}

namespace {

/// Caches member logits for every training row and re-tempers them once
/// per epoch. Validation targets stay at T = 1 in their own buffer.
class AnnealedTargets {
 public:
  AnnealedTargets(const TeacherBank& bank, const LabeledSet& set, AnnealSchedule anneal)
      : anneal_(anneal) {
    const std::size_t c = bank.classes();
    const std::size_t m = bank.size();
    logits_.reserve(set.size() * m * c);
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto z = teacher_logits(bank, set.x(i));
      logits_.insert(logits_.end(), z.begin(), z.end());
    }
    for (TeacherTargets* t : {&train_, &validation_}) {
      t->members = m;
      t->classes = c;
      t->probs.resize(logits_.size());
    }
    tempered_probs(logits_, c, 1.0, validation_.probs);
  }

  const TeacherTargets& operator()(std::size_t epoch) {
    if (epoch == 0) return validation_;
    const double t = anneal_.temperature(epoch - 1);
    if (t != current_) {
      tempered_probs(logits_, train_.classes, t, train_.probs);
      current_ = t;
    }
    return train_;
  }

 private:
  AnnealSchedule anneal_;
  std::vector<double> logits_;
  TeacherTargets train_;
  TeacherTargets validation_;
  double current_ = 0.0;
};

}  // namespace

TrainResult distill(const TeacherBank& bank, MetaModel student, const LabeledSet& set,
                    const AnnealSchedule& anneal, const Schedule& schedule, std::uint64_t seed) {
  if (student.architecture().head != HeadKind::Direct) {
    throw std::invalid_argument("distill: student must use a direct head");
  }
  if (student.classes() != bank.classes()) throw std::invalid_argument("distill: class mismatch");
  if (!(anneal.initial_temperature >= 1.0)) {
    throw std::invalid_argument("distill: initial temperature must be >= 1");
  }
  auto targets = std::make_shared<AnnealedTargets>(bank, set, anneal);
  LossSpec spec;
  spec.kind = LossKind::DISTILL;
  Schedule s = schedule;
  s.min_epochs = std::max(s.min_epochs, anneal.decay_epochs);
  return train(std::move(student), set, spec, s, seed,
               [targets](std::size_t epoch) -> const TeacherTargets& { return (*targets)(epoch); });
}

void TeacherBank::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["version"] = kManifestVersion;
  manifest["kind"] = to_string(kind);
  manifest["M"] = size();
  manifest["seeds"] = seeds;
  manifest["passes"] = passes;
  manifest["mask_seed"] = mask_seed;
  std::vector<std::string> files;
  for (std::size_t j = 0; j < members.size(); ++j) {
    files.push_back(member_file(j));
    std::ofstream out(dir / files.back());
    members[j].save(out);
    if (!out) throw std::runtime_error("TeacherBank::save: cannot write " + files.back());
  }
  manifest["members"] = files;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

TeacherBank TeacherBank::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("TeacherBank::load: no manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  if (manifest.at("version").get<int>() != kManifestVersion) {
    throw std::runtime_error("TeacherBank::load: unsupported manifest version");
  }
  TeacherBank bank;
  bank.kind = parse_teacher_kind(manifest.at("kind").get<std::string>());
  bank.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
  bank.passes = manifest.at("passes").get<std::size_t>();
  bank.mask_seed = manifest.at("mask_seed").get<std::uint64_t>();
  for (const auto& f : manifest.at("members")) {
    std::ifstream member(dir / f.get<std::string>());
    if (!member) throw std::runtime_error("TeacherBank::load: missing member " + f.get<std::string>());
    bank.members.push_back(MetaModel::load(member));
  }
  if (bank.members.empty()) throw std::runtime_error("TeacherBank::load: empty bank");
  return bank;
}

}  // namespace edl
