#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edl/eval.hpp"

namespace edl {

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

/// Everything a CLI run needs. Serialized as nested JSON; see README for
/// the key reference.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::size_t workers = 1;

  struct Data {
    std::size_t n = 1000;
    double noise_rate = 0.0;
    std::size_t n_test = 1000;
    std::size_t n_ood = 1000;
    std::vector<std::string> ood_sources{"uniform-box", "ring", "shifted-gaussian"};
  } data;

  struct Model {
    std::vector<std::size_t> hidden{64, 64, 64};
    std::string head = "direct";
    double clamp = 15.0;
    std::size_t latent_dim = 6;
  } model;

  struct Loss {
    std::string kind = "RKL";
    double lambda = 1e-4;
    std::vector<double> alpha0;
    double gamma_ood = 0.0;
    std::optional<std::string> ood;
    double fkl_aux_weight = 1.0;
  } loss;

  Schedule schedule;

  struct Teachers {
    std::string kind = "bootstrap";
    std::size_t m = 100;
    double dropout_rate = 0.2;
    Schedule schedule;
    double initial_temperature = 5.0;
    std::size_t decay_epochs = 30;
  } teachers;

  struct Eval {
    std::string task = "ood";  // ood | selective
    std::vector<std::string> ood_metrics{"mi"};
    std::string selective_metric = "ent";
    /// Checkpoint or bank directory to evaluate; defaults to the outputs of
    /// `train` / `distill` in the output directory.
    std::string checkpoint;
    std::string bank;
  } eval;

  struct Sweep {
    std::string kind = "lambda";
    std::vector<double> grid;  // empty: default grid of the kind
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string method = "RKL";
    std::string plot_metric = "auroc_mi_uniform-box";
  } sweep;
};

/// Parses and validates a config document. Missing keys keep their
/// defaults; unknown keys and bad values raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved document (every key present).
nlohmann::ordered_json to_json(const RunConfig& config);

// Conversions into library types; each raises ConfigError on bad names.
Architecture architecture_of(const RunConfig& config);
LossSpec loss_spec_of(const RunConfig& config);
OodSource ood_source_of(const std::string& name);
ExperimentConfig experiment_of(const RunConfig& config, Method method, LossKind loss);
std::vector<double> sweep_grid_of(const RunConfig& config);

}  // namespace edl
