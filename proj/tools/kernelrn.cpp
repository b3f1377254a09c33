#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kernelrn/config.hpp"
#include "kernelrn/parallel.hpp"
#include "kernelrn/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Seed (overrides the config)");
  cmd->add_option("--workers", f.workers, "Worker threads, 0 for all (falls back to KERNELRN_WORKERS)");
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
}

std::optional<unsigned> env_workers() {
  const char* v = std::getenv("KERNELRN_WORKERS");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long w = std::stoul(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return static_cast<unsigned>(w);
  } catch (const std::exception&) {
    throw kernelrn::ConfigError({std::string("KERNELRN_WORKERS: expected a non-negative integer, got \"") + v + "\""});
  }
}

kernelrn::RunConfig resolve(const Flags& f) {
  auto cfg = kernelrn::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.workers) {
    cfg.workers = *f.workers;
  } else if (auto w = env_workers()) {
    cfg.workers = *w;
  }
  if (f.out) cfg.output.directory = *f.out;
  return cfg;
}

int run(const std::string& command, const Flags& f) {
  const auto cfg = resolve(f);
  const auto start = std::chrono::steady_clock::now();
  kernelrn::RunOutcome outcome;
  if (command == "moments") {
    outcome = kernelrn::run_moments(cfg);
  } else if (command == "rn") {
    outcome = kernelrn::run_rn(cfg);
  } else {
    outcome = kernelrn::run_vn(cfg);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  kernelrn::write_outputs(outcome, cfg.output, cfg.output.directory);
  // timing lives outside report.json so reports stay byte-identical
  nlohmann::ordered_json timing = {{"wall_seconds", secs},
                                   {"samples_per_second", secs > 0 ? cfg.samples / secs : 0.0},
                                   {"workers", kernelrn::resolve_workers(cfg.workers)}};
  kernelrn::write_atomic(cfg.output.directory / "timing.json", timing.dump(2) + "\n");
  std::cerr << command << ": verdict " << outcome.report["verdict"].get<std::string>() << " ("
            << secs << " s), report in " << cfg.output.directory.string() << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment kernels, Radon-Nikodym densities and von Neumann checks for random matrix ensembles"};
  app.set_version_flag("--version", std::string(kernelrn::kToolName) + " " + kernelrn::kToolVersion);
  app.require_subcommand(1);

  Flags flags;
  auto* moments = app.add_subcommand("moments", "Moment sequences and ratio tests");
  auto* rn = app.add_subcommand("rn", "Shift density and kernel-order test");
  auto* vn = app.add_subcommand("vn", "Localized von Neumann inequality check");
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  for (auto* cmd : {moments, rn, vn}) add_run_flags(cmd, flags);
  validate->add_option("--config", flags.config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kernelrn::kExitError;
  }

  try {
    if (validate->parsed()) {
      const auto cfg = kernelrn::load_config(flags.config);
      std::cout << kernelrn::config_to_json(cfg).dump(2) << "\n";
      return kernelrn::kExitPass;
    }
    for (auto* cmd : {moments, rn, vn}) {
      if (cmd->parsed()) return run(cmd->get_name(), flags);
    }
  } catch (const kernelrn::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kernelrn::kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kernelrn::kExitError;
  }
  return kernelrn::kExitError;
}
