// edl: command-line front end for the evidential deep learning lab.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "edl/commands.hpp"

namespace {

using namespace edl;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  bool plot = false;
};

RunConfig resolve(const GlobalFlags& flags) {
  RunConfig c = flags.config.empty() ? parse_config(nlohmann::json::object()) : load_config(flags.config);
  if (flags.seed) c.seed = *flags.seed;
  if (flags.out) c.out = *flags.out;
  if (flags.workers) {
    if (*flags.workers == 0) throw ConfigError("--workers must be at least 1");
    c.workers = *flags.workers;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential deep learning lab: data, training, distillation, evaluation, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Base seed (overrides the config)");
  app.add_option("--out", flags.out, "Output directory (overrides the config)");
  app.add_option("--workers", flags.workers, "Parallel jobs for teachers and sweeps");
  app.add_flag("--plot", flags.plot, "Also write an SVG chart (eval)");

  std::function<void(const RunConfig&)> command;
  auto add = [&](const char* name, const char* help, std::function<void(const RunConfig&)> fn) {
    app.add_subcommand(name, help)->callback([&command, fn] { command = fn; });
  };
  add("gen-data", "Write train/test/OOD datasets as CSV", cli::gen_data);
  add("train", "Train an evidential model", cli::train_model);
  add("distill", "Train a teacher bank and distill it into a student", cli::distill_model);
  add("eval", "Evaluate a checkpoint or bank on OOD detection or selective classification",
      [&flags](const RunConfig& c) { cli::evaluate(c, flags.plot); });
  add("sweep", "Run a lambda or sample-size sweep", cli::run_sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  try {
    command(resolve(flags));
  } catch (const ConfigError& e) {
    std::cerr << "edl: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "edl: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "edl: numeric failure: " << e.what() << '\n';
    return cli::kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "edl: " << e.what() << '\n';
    return cli::kFailure;
  }
  return cli::kOk;
}
