#include "edl/config.hpp"

#include <fstream>
#include <set>

namespace edl {
namespace {

using nlohmann::json;

/// Reads keys from one JSON object and rejects whatever it did not read.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + "expected an object");
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;
  /// Call once every key has been read.
  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path_ + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + path_ + key + "' has the wrong type");
    }
  }

  void get(const char* key, std::optional<std::string>& out) {
    seen_.insert(key);
    if (!obj_.contains(key) || obj_.at(key).is_null()) return;
    std::string s;
    get(key, s);
    out = s;
  }

  /// Nested object; absent means all defaults.
  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return std::nullopt;
    return std::optional<Section>(std::in_place, obj_.at(key), path_ + key + ".");
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : "config '" + path_ + "': "; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_schedule(Section&& s, Schedule& out) {
  s.get("epochs", out.epochs);
  s.get("batch_size", out.batch_size);
  s.get("patience", out.patience);
  s.get("learning_rate", out.learning_rate);
  s.get("validation_fraction", out.validation_fraction);
  s.get("min_steps", out.min_steps);
  s.get("min_epochs", out.min_epochs);
  s.finish();
}

nlohmann::ordered_json schedule_json(const Schedule& s) {
  return {{"epochs", s.epochs},
          {"batch_size", s.batch_size},
          {"patience", s.patience},
          {"learning_rate", s.learning_rate},
          {"validation_fraction", s.validation_fraction},
          {"min_steps", s.min_steps},
          {"min_epochs", s.min_epochs}};
}

void check_schedule(const Schedule& s, const std::string& name) {
  if (s.batch_size == 0) throw ConfigError(name + ".batch_size must be at least 1");
  if (!(s.learning_rate > 0.0)) throw ConfigError(name + ".learning_rate must be positive");
  if (!(s.validation_fraction > 0.0 && s.validation_fraction < 1.0)) {
    throw ConfigError(name + ".validation_fraction must lie in (0,1)");
  }
}

// Runs a library parser and reports its message as a config error.
template <typename F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void validate(const RunConfig& c) {
  if (c.data.n == 0) throw ConfigError("data.n must be at least 1");
  if (c.data.n_test == 0 || c.data.n_ood == 0) throw ConfigError("data.n_test and data.n_ood must be at least 1");
  if (!(c.data.noise_rate >= 0.0 && c.data.noise_rate <= 1.0)) {
    throw ConfigError("data.noise_rate must lie in [0,1]");
  }
  for (const auto& s : c.data.ood_sources) ood_source_of(s);
  if (c.workers == 0) throw ConfigError("workers must be at least 1");
  if (c.model.latent_dim == 0) throw ConfigError("model.latent_dim must be at least 1");
  if (!(c.model.clamp > 0.0)) throw ConfigError("model.clamp must be positive");
  architecture_of(c);
  loss_spec_of(c);
  check_schedule(c.schedule, "schedule");
  check_schedule(c.teachers.schedule, "teachers.schedule");
  checked([&] { return parse_teacher_kind(c.teachers.kind); });
  if (c.teachers.m < 2) throw ConfigError("teachers.m must be at least 2");
  if (!(c.teachers.dropout_rate > 0.0 && c.teachers.dropout_rate < 1.0)) {
    throw ConfigError("teachers.dropout_rate must lie in (0,1)");
  }
  if (!(c.teachers.initial_temperature >= 1.0)) {
    throw ConfigError("teachers.initial_temperature must be >= 1");
  }
  if (c.eval.task != "ood" && c.eval.task != "selective") {
    throw ConfigError("eval.task must be ood or selective");
  }
  for (const auto& m : c.eval.ood_metrics) checked([&] { return parse_metric(m); });
  if (c.eval.selective_metric != "ent" && c.eval.selective_metric != "maxp") {
    throw ConfigError("eval.selective_metric must be ent or maxp");
  }
  checked([&] { return parse_sweep_kind(c.sweep.kind); });
  checked([&] { return parse_method(c.sweep.method); });
  if (c.sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  {
    Section root(doc, "");
    int version = kConfigVersion;
    root.get("version", version);
    if (version != kConfigVersion) {
      throw ConfigError("unsupported config version " + std::to_string(version) + " (expected " +
                        std::to_string(kConfigVersion) + ")");
    }
    root.get("seed", c.seed);
    root.get("out", c.out);
    root.get("workers", c.workers);
    if (auto s = root.child("data")) {
      s->get("n", c.data.n);
      s->get("noise_rate", c.data.noise_rate);
      s->get("n_test", c.data.n_test);
      s->get("n_ood", c.data.n_ood);
      s->get("ood_sources", c.data.ood_sources);
      s->finish();
    }
    if (auto s = root.child("model")) {
      s->get("hidden", c.model.hidden);
      s->get("head", c.model.head);
      s->get("clamp", c.model.clamp);
      s->get("latent_dim", c.model.latent_dim);
      s->finish();
    }
    if (auto s = root.child("loss")) {
      s->get("kind", c.loss.kind);
      s->get("lambda", c.loss.lambda);
      s->get("alpha0", c.loss.alpha0);
      s->get("gamma_ood", c.loss.gamma_ood);
      s->get("ood", c.loss.ood);
      s->get("fkl_aux_weight", c.loss.fkl_aux_weight);
      s->finish();
    }
    if (auto s = root.child("schedule")) read_schedule(std::move(*s), c.schedule);
    if (auto s = root.child("teachers")) {
      s->get("kind", c.teachers.kind);
      s->get("m", c.teachers.m);
      s->get("dropout_rate", c.teachers.dropout_rate);
      s->get("initial_temperature", c.teachers.initial_temperature);
      s->get("decay_epochs", c.teachers.decay_epochs);
      if (auto t = s->child("schedule")) read_schedule(std::move(*t), c.teachers.schedule);
      s->finish();
    }
    if (auto s = root.child("eval")) {
      s->get("task", c.eval.task);
      s->get("ood_metrics", c.eval.ood_metrics);
      s->get("selective_metric", c.eval.selective_metric);
      s->get("checkpoint", c.eval.checkpoint);
      s->get("bank", c.eval.bank);
      s->finish();
    }
    if (auto s = root.child("sweep")) {
      s->get("kind", c.sweep.kind);
      s->get("grid", c.sweep.grid);
      s->get("seeds", c.sweep.seeds);
      s->get("method", c.sweep.method);
      s->get("plot_metric", c.sweep.plot_metric);
      s->finish();
    }
    root.finish();
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["version"] = kConfigVersion;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["data"] = {{"n", c.data.n},
               {"noise_rate", c.data.noise_rate},
               {"n_test", c.data.n_test},
               {"n_ood", c.data.n_ood},
               {"ood_sources", c.data.ood_sources}};
  j["model"] = {{"hidden", c.model.hidden},
                {"head", c.model.head},
                {"clamp", c.model.clamp},
                {"latent_dim", c.model.latent_dim}};
  j["loss"] = {{"kind", c.loss.kind},
               {"lambda", c.loss.lambda},
               {"alpha0", c.loss.alpha0},
               {"gamma_ood", c.loss.gamma_ood},
               {"ood", c.loss.ood ? nlohmann::ordered_json(*c.loss.ood) : nullptr},
               {"fkl_aux_weight", c.loss.fkl_aux_weight}};
  j["schedule"] = schedule_json(c.schedule);
  j["teachers"] = {{"kind", c.teachers.kind},
                   {"m", c.teachers.m},
                   {"dropout_rate", c.teachers.dropout_rate},
                   {"initial_temperature", c.teachers.initial_temperature},
                   {"decay_epochs", c.teachers.decay_epochs},
                   {"schedule", schedule_json(c.teachers.schedule)}};
  j["eval"] = {{"task", c.eval.task},
               {"ood_metrics", c.eval.ood_metrics},
               {"selective_metric", c.eval.selective_metric},
               {"checkpoint", c.eval.checkpoint},
               {"bank", c.eval.bank}};
  j["sweep"] = {{"kind", c.sweep.kind},
                {"grid", sweep_grid_of(c)},
                {"seeds", c.sweep.seeds},
                {"method", c.sweep.method},
                {"plot_metric", c.sweep.plot_metric}};
  return j;
}

Architecture architecture_of(const RunConfig& c) {
  Architecture a;
  a.hidden = c.model.hidden;
  a.head = checked([&] { return parse_head_kind(c.model.head); });
  a.clamp = c.model.clamp;
  a.latent_dim = c.model.latent_dim;
  return a;
}

LossSpec loss_spec_of(const RunConfig& c) {
  LossSpec s;
  s.kind = checked([&] { return parse_loss_kind(c.loss.kind); });
  s.lambda = c.loss.lambda;
  s.alpha0 = c.loss.alpha0;
  s.gamma_ood = c.loss.gamma_ood;
  if (c.loss.ood) s.ood = ood_source_of(*c.loss.ood);
  s.fkl_aux_weight = c.loss.fkl_aux_weight;
  checked([&] {
    s.validate(3);
    return 0;
  });
  return s;
}

OodSource ood_source_of(const std::string& name) {
  switch (checked([&] { return parse_ood_kind(name); })) {
    case OodKind::UniformBox: return OodSource::uniform_box();
    case OodKind::Ring: return OodSource::ring();
    case OodKind::ShiftedGaussian: return OodSource::shifted_gaussian();
  }
  throw ConfigError("unknown OOD source " + name);
}

ExperimentConfig experiment_of(const RunConfig& c, Method method, LossKind loss) {
  ExperimentConfig e;
  e.method = method;
  e.loss = loss_spec_of(c);
  e.loss.kind = loss;
  e.arch = architecture_of(c);
  if (method != Method::Evidential) e.arch.head = HeadKind::Direct;
  e.schedule = c.schedule;
  e.n_train = c.data.n;
  e.noise_rate = c.data.noise_rate;
  e.n_test = c.data.n_test;
  e.n_ood = c.data.n_ood;
  e.ood_sources.clear();
  for (const auto& s : c.data.ood_sources) e.ood_sources.push_back(ood_source_of(s));
  e.ood_metric = checked([&] { return parse_metric(c.eval.ood_metrics.empty() ? "mi" : c.eval.ood_metrics.front()); });
  e.selective_metric = checked([&] { return parse_metric(c.eval.selective_metric); });
  e.teachers = c.teachers.m;
  e.teacher_schedule = c.teachers.schedule;
  e.anneal = {c.teachers.initial_temperature, c.teachers.decay_epochs};
  e.dropout_rate = c.teachers.dropout_rate;
  e.workers = c.workers;
  return e;
}

std::vector<double> sweep_grid_of(const RunConfig& c) {
  if (!c.sweep.grid.empty()) return c.sweep.grid;
  if (c.sweep.kind == "samplesize") return {300, 3000, 30000};
  return {1e-4, 1e-3, 1e-2, 1e-1};
}

}  // namespace edl
