#include "isa/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "isa/diagnostics.hpp"
#include "isa/estimators.hpp"
#include "isa/models.hpp"
#include "isa/parallel.hpp"

namespace isa::cli {

using nlohmann::json;

namespace {

struct ExperimentName {
  Experiment value;
  const char* name;
};

constexpr ExperimentName kNames[] = {
    {Experiment::quantile_fig, "quantile-fig"}, {Experiment::lms_compare, "lms-compare"},
    {Experiment::rates, "rates"},               {Experiment::normality, "normality"},
    {Experiment::sim_expfam, "sim-expfam"},
};

}  // namespace

const char* to_string(Experiment e) {
  for (const auto& n : kNames) {
    if (n.value == e) return n.name;
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.value;
  }
  return std::nullopt;
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::quantile_fig:
      break;
    case Experiment::lms_compare:
      cfg.replications = 1;
      cfg.horizon = 10000;
      cfg.gamma1_grid = {1.0};
      cfg.theta0 = 0.0;
      cfg.theta_star = 1.0;
      break;
    case Experiment::rates:
      cfg.replications = 200;
      cfg.horizon = 100000;
      cfg.gamma1_grid = {1.0};
      cfg.theta0 = 0.0;
      cfg.theta_star = 1.0;
      cfg.data_size = 1000;
      break;
    case Experiment::normality:
      cfg.replications = 2000;
      cfg.horizon = 10000;
      cfg.gamma1_grid = {1.0};
      cfg.theta0 = 0.0;
      cfg.theta_star = 1.0;
      break;
    case Experiment::sim_expfam:
      cfg.replications = 20;
      cfg.horizon = 2000;
      cfg.gamma1_grid = {1.0, 50.0};
      cfg.theta0 = 0.0;
      cfg.theta_star = 0.0;
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (gamma1_grid.empty()) throw ConfigError("gamma1_grid must not be empty");
  for (const double g1 : gamma1_grid) {
    try {
      validate_schedule(g1, gamma);
    } catch (const Error& e) {
      throw ConfigError(std::string("learning rate schedule: ") + e.what());
    }
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!std::isfinite(theta0) || !std::isfinite(theta_star)) throw ConfigError("theta0 and theta_star must be finite");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
  if (K < 1) throw ConfigError("K must be at least 1");
  if (!(a1 > 0.0)) throw ConfigError("a1 must be positive");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (m < 1) throw ConfigError("m must be at least 1");
  if (data_size < 1) throw ConfigError("data_size must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  if (experiment == Experiment::normality && replications < 100) {
    throw ConfigError("normality needs at least 100 replications");
  }
}

namespace {

double get_number(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError("field '" + key + "': expected a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError("field '" + key + "': expected a nonnegative integer");
}

std::string get_string(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_string()) throw ConfigError("field '" + key + "': expected a string");
  return v.get<std::string>();
}

Experiment parse_experiment(const std::string& name) {
  const auto e = experiment_from_string(name);
  if (!e) {
    throw ConfigError("unknown experiment '" + name +
                      "' (expected quantile-fig, lms-compare, rates, normality or sim-expfam)");
  }
  return *e;
}

void apply_file(ExperimentConfig& cfg, const json& doc) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "experiment") {
      continue;
    } else if (key == "seed") {
      cfg.seed = get_unsigned(doc, key);
    } else if (key == "replications") {
      cfg.replications = get_unsigned(doc, key);
    } else if (key == "horizon") {
      cfg.horizon = get_unsigned(doc, key);
    } else if (key == "gamma1") {
      cfg.gamma1_grid = {get_number(doc, key)};
    } else if (key == "gamma1_grid") {
      if (!value.is_array()) throw ConfigError("field 'gamma1_grid': expected an array of numbers");
      std::vector<double> grid;
      for (const auto& g : value) {
        if (!g.is_number()) throw ConfigError("field 'gamma1_grid': expected an array of numbers");
        grid.push_back(g.get<double>());
      }
      cfg.gamma1_grid = std::move(grid);
    } else if (key == "gamma") {
      cfg.gamma = get_number(doc, key);
    } else if (key == "alpha") {
      cfg.alpha = get_number(doc, key);
    } else if (key == "theta0") {
      cfg.theta0 = get_number(doc, key);
    } else if (key == "theta_star") {
      cfg.theta_star = get_number(doc, key);
    } else if (key == "noise_sd") {
      cfg.noise_sd = get_number(doc, key);
    } else if (key == "K") {
      cfg.K = get_unsigned(doc, key);
    } else if (key == "a1") {
      cfg.a1 = get_number(doc, key);
    } else if (key == "k") {
      cfg.k = get_unsigned(doc, key);
    } else if (key == "m") {
      cfg.m = get_unsigned(doc, key);
    } else if (key == "data_size") {
      cfg.data_size = get_unsigned(doc, key);
    } else if (key == "workers") {
      cfg.workers = get_unsigned(doc, key);
    } else if (key == "output_path") {
      cfg.output_path = get_string(doc, key);
    } else if (key == "format") {
      cfg.format = get_string(doc, key);
    } else {
      throw ConfigError("unknown field '" + key + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const std::optional<json>& file, const ConfigOverrides& flags) {
  if (file && !file->is_object()) throw ConfigError("config file must hold a JSON object");

  std::optional<Experiment> experiment;
  if (flags.experiment) {
    experiment = parse_experiment(*flags.experiment);
  } else if (file && file->contains("experiment")) {
    experiment = parse_experiment(get_string(*file, "experiment"));
  }
  if (!experiment) throw ConfigError("no experiment given (use --experiment or the 'experiment' field)");

  ExperimentConfig cfg = default_config(*experiment);
  if (file) apply_file(cfg, *file);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.replications) cfg.replications = *flags.replications;
  if (flags.gamma1_grid) cfg.gamma1_grid = *flags.gamma1_grid;
  if (flags.gamma) cfg.gamma = *flags.gamma;
  if (flags.horizon) cfg.horizon = *flags.horizon;
  if (flags.workers) cfg.workers = *flags.workers;
  if (flags.output_path) cfg.output_path = *flags.output_path;
  if (flags.format) cfg.format = *flags.format;
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text, const ConfigOverrides& flags) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in the message.
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return parse_config(std::optional<json>(std::move(doc)), flags);
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& flags) {
  if (!path) return parse_config(std::optional<json>{}, flags);
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot open config file '" + path->string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str(), flags);
  } catch (const ConfigError& e) {
    throw ConfigError(path->string() + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.experiment);
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  j["horizon"] = cfg.horizon;
  j["gamma1_grid"] = cfg.gamma1_grid;
  j["gamma"] = cfg.gamma;
  j["alpha"] = cfg.alpha;
  j["theta0"] = cfg.theta0;
  j["theta_star"] = cfg.theta_star;
  j["noise_sd"] = cfg.noise_sd;
  j["K"] = cfg.K;
  j["a1"] = cfg.a1;
  j["k"] = cfg.k;
  j["m"] = cfg.m;
  j["data_size"] = cfg.data_size;
  return j;
}

namespace {

using Row = std::vector<Cell>;

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

ExperimentReport quantile_fig(const ExperimentConfig& cfg) {
  const auto oracle = models::QuantileOracle::standard_normal(cfg.alpha);
  const auto methods =
      diagnostics::quantile_scan_methods(oracle, cfg.theta0, cfg.horizon, InnerRmConfig{cfg.K, cfg.a1}, cfg.gamma);
  const auto scan = diagnostics::stability_scan(methods, cfg.gamma1_grid, oracle.theta_star,
                                                {cfg.seed, cfg.replications, cfg.workers});
  ExperimentReport report;
  report.columns = {"gamma1", "method", "replication", "final_theta", "diverged", "stuck"};
  json summary = json::array();
  for (const auto& row : scan) {
    for (std::size_t r = 0; r < row.runs.size(); ++r) {
      const auto& run = row.runs[r];
      report.rows.push_back({row.gamma1, row.method, as_int(r), run.final_value, run.diverged, run.stuck});
    }
    summary.push_back({{"gamma1", row.gamma1},
                       {"method", row.method},
                       {"median_abs_error", row.median_abs_error},
                       {"diverged", row.diverged},
                       {"stuck", row.stuck}});
  }
  report.meta["theta_star"] = oracle.theta_star;
  report.meta["summary"] = summary;
  return report;
}

ExperimentReport lms_compare(const ExperimentConfig& cfg) {
  models::NormalLinearStream stream;
  stream.theta_star = cfg.theta_star;
  stream.x_dist = models::XDist::standard_normal;
  stream.noise_sd = cfg.noise_sd;
  const StochasticOracle oracle = models::normal_linear_oracle(stream);

  const std::size_t cells = cfg.gamma1_grid.size() * cfg.replications;
  const auto diffs = run_replications(cells, cfg.workers, [&](std::size_t cell) {
    const double gamma1 = cfg.gamma1_grid[cell / cfg.replications];
    const std::size_t r = cell % cfg.replications;
    const LearningRate rate(gamma1, cfg.gamma);
    const Trace trace = implicit_sgd(oracle, rate, scalar_vector(cfg.theta0), cfg.horizon, RngStream(cfg.seed, r));
    RngStream replay(cfg.seed, r);
    std::vector<double> diff(cfg.horizon, std::numeric_limits<double>::infinity());
    double theta = cfg.theta0;
    for (std::size_t n = 1; n <= cfg.horizon && n < trace.size(); ++n) {
      const models::DataPoint p = stream.draw(replay);
      theta = models::normal_linear_implicit_step(theta, rate.at(n), p.x, p.y);
      diff[n - 1] = std::abs(trace.scalar(n) - theta);
    }
    return diff;
  });

  ExperimentReport report;
  report.columns = {"step", "max_abs_diff"};
  double overall = 0.0;
  for (std::size_t n = 0; n < cfg.horizon; ++n) {
    double worst = 0.0;
    for (const auto& d : diffs) worst = std::max(worst, d[n]);
    overall = std::max(overall, worst);
    report.rows.push_back({as_int(n + 1), worst});
  }
  report.meta["max_abs_diff"] = overall;
  return report;
}

ExperimentReport rates(const ExperimentConfig& cfg) {
  const auto checkpoints = diagnostics::half_decade_checkpoints(cfg.horizon);
  if (checkpoints.size() < 5) throw ConfigError("rates: horizon too short for five checkpoints");
  const std::size_t n_min = checkpoints.front();
  const std::size_t n_max = checkpoints.back();
  const LearningRate rate(cfg.gamma1_grid.front(), cfg.gamma);
  const diagnostics::ReplicationPlan plan{cfg.seed, cfg.replications, cfg.workers};
  const Vector theta0 = scalar_vector(cfg.theta0);

  ExperimentReport report;
  report.columns = {"model", "gamma", "slope", "intercept", "r_squared", "n_min", "n_max"};
  auto add = [&](const std::string& model, const diagnostics::RateFit& fit) {
    report.rows.push_back(
        {model, cfg.gamma, fit.slope, fit.intercept, fit.r_squared, as_int(fit.n_min), as_int(fit.n_max)});
  };

  {
    models::NormalLinearStream stream;
    stream.theta_star = cfg.theta_star;
    stream.x_dist = models::XDist::standard_normal;
    stream.noise_sd = cfg.noise_sd;
    const StochasticOracle oracle = models::normal_linear_oracle(stream);
    const auto curve = diagnostics::mse_curve(
        [&](RngStream rng) { return implicit_sgd(oracle, rate, theta0, cfg.horizon, rng); },
        scalar_vector(cfg.theta_star), plan, checkpoints);
    add("normal-linear", diagnostics::fit_rate_slope(curve.points, n_min, n_max));
  }
  {
    // The data set is fixed across replications; it lives on a reserved stream.
    RngStream data_rng(cfg.seed, std::numeric_limits<std::uint64_t>::max());
    auto data = models::logistic_dataset(cfg.theta_star, cfg.data_size, data_rng);
    const double mle = models::logistic_mle(data);
    const StochasticOracle oracle = models::logistic_oracle(data);
    const auto curve = diagnostics::deviance_curve(
        [&](const Vector& theta) { return models::logistic_potential(data, theta[0]); }, scalar_vector(mle),
        [&](RngStream rng) { return implicit_sgd(oracle, rate, theta0, cfg.horizon, rng); }, plan, checkpoints);
    add("logistic-deviance", diagnostics::fit_rate_slope(curve, n_min, n_max));
  }
  json cps = checkpoints;
  report.meta["checkpoints"] = cps;
  return report;
}

ExperimentReport normality(const ExperimentConfig& cfg) {
  models::NormalLinearStream stream;
  stream.theta_star = cfg.theta_star;
  stream.x_dist = models::XDist::fixed;
  stream.x_fixed = 1.0;
  stream.noise_sd = cfg.noise_sd;
  const auto problem = diagnostics::normal_linear_normality_problem(stream, cfg.theta0);
  const LearningRate rate(cfg.gamma1_grid.front(), cfg.gamma);
  const auto rep = diagnostics::normality_check(problem, rate, cfg.horizon, {cfg.seed, cfg.replications, cfg.workers});

  ExperimentReport report;
  report.columns = {"scaling", "rel_error", "replications", "horizon"};
  report.rows.push_back({std::string("unit"), rep.rel_error_unit, as_int(cfg.replications), as_int(cfg.horizon)});
  report.rows.push_back(
      {std::string("gamma1_squared"), rep.rel_error_gamma1_squared, as_int(cfg.replications), as_int(cfg.horizon)});
  json matching = json::array();
  for (const auto s : rep.matching) matching.push_back(diagnostics::to_string(s));
  report.meta["matching_scalings"] = matching;
  report.meta["empirical_variance"] = rep.empirical_cov(0, 0);
  return report;
}

ExperimentReport sim_expfam(const ExperimentConfig& cfg) {
  struct Outcome {
    double final_theta = 0.0;
    double max_abs = 0.0;
    bool diverged = false;
  };
  const std::size_t per_method = cfg.gamma1_grid.size() * cfg.replications;
  const auto outcomes = run_replications(2 * per_method, cfg.workers, [&](std::size_t cell) {
    const bool implicit = cell >= per_method;
    const std::size_t rest = cell % per_method;
    const double gamma1 = cfg.gamma1_grid[rest / cfg.replications];
    const std::size_t r = rest % cfg.replications;
    const RngStream base(cfg.seed, r);
    RngStream data_rng = base.substream(0);
    SimulationData data;
    for (const double s : models::expfam_dataset(cfg.theta_star, cfg.data_size, data_rng)) {
      data.stats.push_back(scalar_vector(s));
    }
    data.simulator = models::expfam_simulator();
    const LearningRate rate(gamma1, cfg.gamma);
    const Vector theta0 = scalar_vector(cfg.theta0);
    const Trace t = implicit
                        ? sim_implicit(data, rate, cfg.k, cfg.m, theta0, cfg.horizon, base.substream(1))
                        : sim_explicit(data, rate, cfg.k, theta0, cfg.horizon, base.substream(1));
    Outcome o;
    o.final_theta = t.final_iterate()[0];
    o.diverged = t.diverged;
    for (std::size_t n = 0; n < t.size(); ++n) o.max_abs = std::max(o.max_abs, std::abs(t.scalar(n)));
    return o;
  });

  ExperimentReport report;
  report.columns = {"method", "gamma1", "replication", "final_theta", "max_abs_theta", "diverged"};
  for (std::size_t cell = 0; cell < outcomes.size(); ++cell) {
    const std::size_t rest = cell % per_method;
    const auto& o = outcomes[cell];
    report.rows.push_back({std::string(cell >= per_method ? "implicit" : "explicit"),
                           cfg.gamma1_grid[rest / cfg.replications], as_int(rest % cfg.replications),
                           o.final_theta, o.max_abs, o.diverged});
  }
  return report;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  switch (cfg.experiment) {
    case Experiment::quantile_fig:
      report = quantile_fig(cfg);
      break;
    case Experiment::lms_compare:
      report = lms_compare(cfg);
      break;
    case Experiment::rates:
      report = rates(cfg);
      break;
    case Experiment::normality:
      report = normality(cfg);
      break;
    case Experiment::sim_expfam:
      report = sim_expfam(cfg);
      break;
  }
  report.meta["experiment"] = to_string(cfg.experiment);
  report.meta["version"] = kVersion;
  report.meta["config"] = config_to_json(cfg);
  report.meta["seed"] = cfg.seed;
  report.meta["stream_rule"] = "replication r draws from RngStream(seed, r)";
  report.meta["row_count"] = report.rows.size();
  report.meta["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvCell {
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return format_double(v); }
  std::string operator()(const std::string& v) const { return v; }
  std::string operator()(bool v) const { return v ? "1" : "0"; }
};

json to_json_cell(const Cell& c) {
  return std::visit([](const auto& v) { return json(v); }, c);
}

}  // namespace

std::string to_csv(const ExperimentReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    if (i) out += ',';
    out += report.columns[i];
  }
  out += '\n';
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += std::visit(CsvCell{}, row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const ExperimentReport& report) {
  json doc;
  doc["meta"] = report.meta;
  doc["columns"] = report.columns;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size() && i < report.columns.size(); ++i) {
      obj[report.columns[i]] = to_json_cell(row[i]);
    }
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

void emit_report(const ExperimentReport& report, const std::string& format, const std::string& path) {
  std::string body;
  if (format == "csv") {
    body = to_csv(report);
  } else if (format == "json") {
    body = to_json(report);
  } else {
    throw IoError("unknown output format '" + format + "'");
  }
  if (path.empty()) {
    std::cout << body;
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << body;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace isa::cli
