#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "isa/core.hpp"

namespace isa::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { quantile_fig, lms_compare, rates, normality, sim_expfam };

const char* to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view name);

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Flat experiment configuration. Field names double as JSON config keys.
struct ExperimentConfig {
  Experiment experiment = Experiment::quantile_fig;
  std::uint64_t seed = 1;
  std::size_t replications = 20;
  std::size_t horizon = 5000;
  std::vector<double> gamma1_grid{0.1, 1.0, 5.0, 20.0, 294.0};
  double gamma = 1.0;
  double alpha = 0.999;
  double theta0 = -10.0;
  double theta_star = 0.0;
  double noise_sd = 1.0;
  std::size_t K = 50;
  double a1 = 10.0;
  std::size_t k = 50;
  std::size_t m = 10;
  std::size_t data_size = 200;
  std::size_t workers = 1;
  std::string output_path;
  std::string format = "csv";

  /// Throws ConfigError naming the first violated condition.
  void validate() const;
};

/// Defaults for one experiment (the quantile study mirrors the published setup).
ExperimentConfig default_config(Experiment e);

/// Command-line values; set fields win over the config file.
struct ConfigOverrides {
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::vector<double>> gamma1_grid;
  std::optional<double> gamma;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> workers;
  std::optional<std::string> output_path;
  std::optional<std::string> format;
};

/// Builds a validated config from an optional JSON document plus overrides.
ExperimentConfig parse_config(const std::optional<nlohmann::json>& file, const ConfigOverrides& flags);
/// Reads and parses a JSON config file, then applies the overrides.
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& flags);
/// Same, from JSON text (parse errors report line and column).
ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& flags);

/// Flat JSON echo of a config; feeding it back to parse_config reproduces the run.
/// `workers` and the output settings are left out because they do not affect rows.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct ExperimentReport {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::json meta;
};

/// Runs the configured study. Replication r uses stream_id r under cfg.seed, so
/// rows do not depend on cfg.workers.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Header row plus one line per record; doubles at 17 significant digits,
/// booleans as 0/1.
std::string to_csv(const ExperimentReport& report);
/// {"meta": ..., "columns": [...], "rows": [{column: value, ...}, ...]}
std::string to_json(const ExperimentReport& report);

/// Writes the report in `format` ("csv" or "json") to `path`, or to stdout when
/// path is empty. Throws IoError on failure.
void emit_report(const ExperimentReport& report, const std::string& format, const std::string& path);

}  // namespace isa::cli
