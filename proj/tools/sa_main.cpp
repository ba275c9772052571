// sa: command-line front end for the stochastic-approximation experiments.
//
//   sa run --experiment quantile-fig --out fig1.csv
//   sa run --config study.json --gamma1 7 --format json

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isa/experiment.hpp"
#include "isa/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robbins-Monro and implicit stochastic approximation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(isa::cli::kVersion));

  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  std::string experiment;
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  double gamma1 = 0.0;
  std::vector<double> gamma1_grid;
  double gamma = 0.0;
  std::size_t horizon = 0;
  std::size_t workers = 0;
  std::string out;
  std::string format;

  run->add_option("--experiment", experiment, "quantile-fig | lms-compare | rates | normality | sim-expfam");
  run->add_option("--config", config_path, "JSON config file (flat keys)")->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Base seed");
  auto* reps_opt = run->add_option("--replications", replications, "Replications per cell");
  auto* g1_opt = run->add_option("--gamma1", gamma1, "Single learning-rate scale");
  auto* grid_opt = run->add_option("--gamma1-grid", gamma1_grid, "Comma-separated learning-rate scales")
                       ->delimiter(',');
  g1_opt->excludes(grid_opt);
  auto* gamma_opt = run->add_option("--gamma", gamma, "Learning-rate exponent in (1/2, 1]");
  auto* horizon_opt = run->add_option("--horizon", horizon, "Number of steps N");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads (default: SA_WORKERS or 1)");
  auto* out_opt = run->add_option("--out", out, "Output path (default: standard output)");
  auto* format_opt = run->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  isa::cli::ConfigOverrides flags;
  if (!experiment.empty()) flags.experiment = experiment;
  if (*seed_opt) flags.seed = seed;
  if (*reps_opt) flags.replications = replications;
  if (*g1_opt) flags.gamma1_grid = std::vector<double>{gamma1};
  if (*grid_opt) flags.gamma1_grid = gamma1_grid;
  if (*gamma_opt) flags.gamma = gamma;
  if (*horizon_opt) flags.horizon = horizon;
  flags.workers = *workers_opt ? workers : isa::default_workers();
  if (*out_opt) flags.output_path = out;
  if (*format_opt) flags.format = format;

  isa::cli::ExperimentConfig cfg;
  try {
    std::optional<std::filesystem::path> path;
    if (!config_path.empty()) path = config_path;
    cfg = isa::cli::parse_config(path, flags);
  } catch (const std::exception& e) {
    std::cerr << "sa: config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto report = isa::cli::run_experiment(cfg);
    isa::cli::emit_report(report, cfg.format, cfg.output_path);
  } catch (const std::exception& e) {
    std::cerr << "sa: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
