// orlicz_cli: run or validate an experiment config.
//
//   orlicz_cli run --config exp.cfg --out results/ [--plot] [--jobs N] [--seed S]
//   orlicz_cli validate --config exp.cfg

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "orlicz/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trace-constant and shape experiments on triangulated domains"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  bool plot = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run the experiment and write results");
  run->add_option("--config", config_path, "experiment config (key = value lines)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--plot", plot, "also write plot.svg");
  run->add_option("--jobs", jobs, "worker cap")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "overrides the config seed");

  auto* validate = app.add_subcommand("validate", "dry-run checks; prints findings as JSON");
  validate->add_option("--config", config_path, "experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : orlicz::kExitConfig;
  }

  orlicz::ExperimentConfig config;
  try {
    config = orlicz::parse_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << orlicz::error_json("config", orlicz::kExitConfig, e.what()) << '\n';
    return orlicz::kExitConfig;
  }
  if (seed) {
    config.seed = *seed;
    config.solver.seed = *seed;
  }

  if (validate->parsed()) {
    const auto findings = orlicz::validate(config);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : findings) {
      arr.push_back({{"severity", f.severity == orlicz::Finding::Severity::error ? "error" : "warning"},
                     {"message", f.message}});
    }
    std::cout << arr.dump(2) << '\n';
    return findings.empty() ? orlicz::kExitOk : orlicz::kExitFindings;
  }

  orlicz::RunOptions opts;
  opts.out_dir = out_dir;
  opts.plot = plot;
  opts.jobs = jobs;
  return orlicz::run(config, opts, std::cerr);
}
