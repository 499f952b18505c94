#pragma once

#include <filesystem>
#include <string>

#include "edl/config.hpp"

// The `edl` subcommands. Each writes its artifacts, the resolved config
// (config.json) and a manifest of SHA-256 artifact hashes into config.out.
namespace edl::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericError = 3 };

/// train.csv, test.csv and ood_<source>.csv.
void gen_data(const RunConfig& config);
/// model.ckpt and history.csv.
void train_model(const RunConfig& config);
/// bank/ (reused when a matching bank exists), student.ckpt, history.csv,
/// metrics.csv.
void distill_model(const RunConfig& config);
/// results.csv, plus results.svg when `plot` is set.
void evaluate(const RunConfig& config, bool plot);
/// sweep.csv and sweep.svg.
void run_sweep(const RunConfig& config);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace edl::cli
