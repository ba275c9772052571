#include "isa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isa/parallel.hpp"
#include "isa/procedure.hpp"

namespace isa::diagnostics {

namespace {

void check_checkpoints(const std::vector<std::size_t>& checkpoints) {
  if (checkpoints.empty()) throw Error("diagnostics: no checkpoints");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw Error("diagnostics: checkpoints must be sorted");
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

MseCurve mse_curve(const TraceFactory& factory, const Vector& theta_star, const ReplicationPlan& plan,
                   const std::vector<std::size_t>& checkpoints, const MseOptions& opts) {
  if (plan.replications < 2) throw Error("mse_curve: need at least two replications");
  check_checkpoints(checkpoints);

  struct PerRun {
    std::vector<double> sq;
    bool diverged = false;
  };
  const auto runs = run_replications(plan.replications, plan.workers, [&](std::size_t r) {
    const Trace t = factory(RngStream(plan.seed, r));
    PerRun out;
    out.diverged = t.diverged;
    out.sq.reserve(checkpoints.size());
    for (const std::size_t n : checkpoints) {
      if (n < t.size()) {
        out.sq.push_back((t.iterate(n) - theta_star).squaredNorm());
      } else if (t.diverged) {
        out.sq.push_back(opts.guard_bound * opts.guard_bound);
      } else {
        throw Error("mse_curve: checkpoint beyond the run horizon");
      }
    }
    return out;
  });

  MseCurve curve;
  std::vector<double> sums(checkpoints.size(), 0.0);
  for (const auto& run : runs) {
    if (run.diverged) ++curve.diverged;
    if (run.diverged && opts.exclude_diverged) continue;
    ++curve.used;
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += run.sq[i];
  }
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const double mean =
        curve.used > 0 ? sums[i] / static_cast<double>(curve.used) : std::numeric_limits<double>::quiet_NaN();
    curve.points.push_back({checkpoints[i], mean});
  }
  return curve;
}

std::vector<CurvePoint> deviance_curve(const std::function<double(const Vector&)>& potential,
                                       const Vector& theta_star, const TraceFactory& factory,
                                       const ReplicationPlan& plan, const std::vector<std::size_t>& checkpoints) {
  if (plan.replications < 1) throw Error("deviance_curve: need at least one replication");
  check_checkpoints(checkpoints);
  const double h_star = potential(theta_star);
  const auto runs = run_replications(plan.replications, plan.workers, [&](std::size_t r) {
    const Trace t = factory(RngStream(plan.seed, r));
    std::vector<double> gaps;
    gaps.reserve(checkpoints.size());
    for (const std::size_t n : checkpoints) {
      if (n >= t.size() && !t.diverged) throw Error("deviance_curve: checkpoint beyond the run horizon");
      gaps.push_back(potential(t.iterate(std::min(n, t.size() - 1))) - h_star);
    }
    return gaps;
  });
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    double sum = 0.0;
    for (const auto& gaps : runs) sum += gaps[i];
    out.push_back({checkpoints[i], sum / static_cast<double>(runs.size())});
  }
  return out;
}

RateFit fit_rate_slope(const std::vector<CurvePoint>& curve, std::size_t n_min, std::size_t n_max) {
  if (!(n_min < n_max)) throw Error("fit_rate_slope: need n_min < n_max");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : curve) {
    if (p.n < n_min || p.n > n_max || !(p.value > 0.0) || !std::isfinite(p.value)) continue;
    xs.push_back(std::log(static_cast<double>(p.n)));
    ys.push_back(std::log(p.value));
  }
  if (xs.size() < 5) throw Error("fit_rate_slope: insufficient points (need at least 5 in range)");

  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error("fit_rate_slope: all points share one n");

  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.n_min = n_min;
  fit.n_max = n_max;
  return fit;
}

std::vector<std::size_t> half_decade_checkpoints(std::size_t horizon) {
  if (horizon < 1) throw Error("half_decade_checkpoints: horizon must be positive");
  const std::size_t lo = std::max<std::size_t>(1, horizon / 100);
  std::vector<std::size_t> out;
  for (std::size_t decade = 1; decade <= horizon; decade *= 10) {
    for (const std::size_t mult : {std::size_t{1}, std::size_t{3}}) {
      const std::size_t n = mult * decade;
      if (n >= lo && n <= horizon) out.push_back(n);
    }
    if (decade > horizon / 10) break;
  }
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

std::vector<ScanRow> stability_scan(const std::vector<ScanMethod>& methods, const std::vector<double>& gamma1_grid,
                                    double theta_star, const ReplicationPlan& plan, const StuckRule& rule) {
  if (methods.empty() || gamma1_grid.empty()) throw Error("stability_scan: empty grid");
  if (plan.replications < 1) throw Error("stability_scan: need at least one replication");
  std::vector<ScanRow> rows;
  for (const double gamma1 : gamma1_grid) {
    for (const auto& method : methods) {
      ScanRow row;
      row.gamma1 = gamma1;
      row.method = method.name;
      row.runs = run_replications(plan.replications, plan.workers, [&](std::size_t r) {
        const Trace t = method.run(gamma1, RngStream(plan.seed, r));
        return ReplicationOutcome{t.final_iterate()[0], t.diverged, !t.diverged && stuck_high(t, theta_star, rule)};
      });
      std::vector<double> errors;
      for (const auto& o : row.runs) {
        errors.push_back(std::abs(o.final_value - theta_star));
        row.diverged += o.diverged ? 1 : 0;
        row.stuck += o.stuck ? 1 : 0;
      }
      row.median_abs_error = median(errors);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ScanMethod> quantile_scan_methods(const models::QuantileOracle& oracle, double theta0,
                                              std::size_t horizon, const InnerRmConfig& inner, double gamma) {
  const StochasticOracle noisy = models::quantile_stochastic_oracle(oracle);
  return {
      {"rm",
       [=](double gamma1, RngStream rng) {
         return quantile_rm(noisy, LearningRate(gamma1, gamma), theta0, horizon, rng);
       }},
      {"implicit",
       [=](double gamma1, RngStream rng) {
         return quantile_implicit(noisy, LearningRate(gamma1, gamma), theta0, horizon, inner, rng);
       }},
  };
}

std::vector<ScanMethod> normal_linear_scan_methods(const models::NormalLinearStream& stream, double theta0,
                                                   std::size_t horizon, double gamma) {
  const StochasticOracle oracle = models::normal_linear_oracle(stream);
  return {
      {"explicit",
       [=](double gamma1, RngStream rng) {
         return explicit_sgd(oracle, LearningRate(gamma1, gamma), scalar_vector(theta0), horizon, rng);
       }},
      {"implicit",
       [=](double gamma1, RngStream rng) {
         return implicit_sgd(oracle, LearningRate(gamma1, gamma), scalar_vector(theta0), horizon, rng);
       }},
  };
}

const char* to_string(RhsScaling s) { return s == RhsScaling::unit ? "unit" : "gamma1_squared"; }

namespace {

double relative_frobenius(const Matrix& empirical, const Matrix& theoretical) {
  const double denom = theoretical.norm();
  const double diff = (empirical - theoretical).norm();
  return denom > 0.0 ? diff / denom : diff;
}

}  // namespace

NormalityReport normality_check(const NormalityProblem& problem, const LearningRate& rate, std::size_t horizon,
                                const ReplicationPlan& plan, RhsScaling scaling, double match_tol) {
  if (plan.replications < 100) throw Error("normality_check: need at least 100 replications");
  if (horizon < 1) throw Error("normality_check: horizon must be positive");
  CovarianceProblem cov;
  cov.J = problem.J;
  cov.Xi = problem.Xi;
  cov.gamma1 = rate.gamma1();
  cov.validate();  // throws on an unstable configuration

  const auto p = problem.theta_star.size();
  const double scale = std::pow(static_cast<double>(horizon), rate.gamma() / 2.0);
  struct Sample {
    Vector z;
    bool diverged = false;
  };
  const auto samples = run_replications(plan.replications, plan.workers, [&](std::size_t r) {
    const Trace t = problem.run(rate, horizon, RngStream(plan.seed, r));
    return Sample{scale * (t.final_iterate() - problem.theta_star), t.diverged};
  });

  NormalityReport report;
  report.replications = plan.replications;
  Vector mean = Vector::Zero(p);
  for (const auto& s : samples) {
    mean += s.z;
    report.diverged += s.diverged ? 1 : 0;
  }
  mean /= static_cast<double>(samples.size());
  Matrix emp = Matrix::Zero(p, p);
  for (const auto& s : samples) {
    const Vector c = s.z - mean;
    emp.noalias() += c * c.transpose();
  }
  emp /= static_cast<double>(samples.size() - 1);
  report.empirical_cov = 0.5 * (emp + emp.transpose());

  const Matrix sigma_unit = lyapunov_sigma(cov, problem.Xi);
  const Matrix sigma_sq = lyapunov_sigma(cov, rate.gamma1() * rate.gamma1() * problem.Xi);
  report.rel_error_unit = relative_frobenius(report.empirical_cov, sigma_unit);
  report.rel_error_gamma1_squared = relative_frobenius(report.empirical_cov, sigma_sq);
  report.scaling = scaling;
  report.theoretical_cov = scaling == RhsScaling::unit ? sigma_unit : sigma_sq;
  report.relative_error =
      scaling == RhsScaling::unit ? report.rel_error_unit : report.rel_error_gamma1_squared;
  if (report.rel_error_unit <= match_tol) report.matching.push_back(RhsScaling::unit);
  if (report.rel_error_gamma1_squared <= match_tol) report.matching.push_back(RhsScaling::gamma1_squared);
  return report;
}

NormalityProblem normal_linear_normality_problem(const models::NormalLinearStream& stream, double theta0) {
  const StochasticOracle oracle = models::normal_linear_oracle(stream);
  const double m2 = stream.second_moment();
  NormalityProblem prob;
  prob.theta_star = scalar_vector(stream.theta_star);
  prob.J = Matrix::Constant(1, 1, m2);
  prob.Xi = Matrix::Constant(1, 1, stream.noise_sd * stream.noise_sd * m2);
  prob.run = [oracle, theta0](const LearningRate& rate, std::size_t horizon, RngStream rng) {
    return implicit_sgd(oracle, rate, scalar_vector(theta0), horizon, rng);
  };
  return prob;
}

NormalityProblem linear_gaussian_normality_problem(const Matrix& J, const Vector& theta_star,
                                                   const Vector& noise_sd, const Vector& theta0) {
  const StochasticOracle oracle = models::linear_gaussian_oracle(J, theta_star, noise_sd);
  NormalityProblem prob;
  prob.theta_star = theta_star;
  prob.J = J;
  prob.Xi = noise_sd.array().square().matrix().asDiagonal();
  prob.run = [oracle, theta0](const LearningRate& rate, std::size_t horizon, RngStream rng) {
    ProcedureConfig cfg;
    cfg.mode = Mode::implicit_ideal;
    cfg.rate = rate;
    cfg.theta0 = theta0;
    cfg.horizon = horizon;
    return run_procedure(cfg, oracle, rng);
  };
  return prob;
}

}  // namespace isa::diagnostics
