#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "isa/core.hpp"
#include "isa/estimators.hpp"
#include "isa/models.hpp"
#include "isa/solvers.hpp"

namespace isa::diagnostics {

/// Produces one run from the replication's stream.
using TraceFactory = std::function<Trace(RngStream)>;

/// Replication r runs on RngStream(seed, r); results are reduced in index order.
struct ReplicationPlan {
  std::uint64_t seed = 1;
  std::size_t replications = 100;
  std::size_t workers = 1;
};

struct CurvePoint {
  std::size_t n = 0;
  double value = 0.0;
};

struct MseOptions {
  /// Diverged replications count as guard_bound^2 from the step they diverged.
  double guard_bound = 1e8;
  bool exclude_diverged = false;
};

struct MseCurve {
  std::vector<CurvePoint> points;
  std::size_t diverged = 0;
  /// Replications entering the averages.
  std::size_t used = 0;
};

/// Monte Carlo estimate of E|theta_n - theta_star|^2 at each checkpoint.
MseCurve mse_curve(const TraceFactory& factory, const Vector& theta_star, const ReplicationPlan& plan,
                   const std::vector<std::size_t>& checkpoints, const MseOptions& opts = {});

/// Monte Carlo estimate of E[H(theta_n)] - H(theta_star). A diverged run is
/// charged H at its last recorded iterate for every later checkpoint.
std::vector<CurvePoint> deviance_curve(const std::function<double(const Vector&)>& potential,
                                       const Vector& theta_star, const TraceFactory& factory,
                                       const ReplicationPlan& plan, const std::vector<std::size_t>& checkpoints);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
};

/// Least-squares line through (log n, log value) for points with n in
/// [n_min, n_max] and value > 0. Needs at least five such points.
RateFit fit_rate_slope(const std::vector<CurvePoint>& curve, std::size_t n_min = 1000, std::size_t n_max = 100000);

/// Half-decade checkpoints {1, 3} x 10^j from horizon / 100 up to horizon,
/// always ending at horizon.
std::vector<std::size_t> half_decade_checkpoints(std::size_t horizon);

// Stability scans --------------------------------------------------------------

struct ScanMethod {
  std::string name;
  std::function<Trace(double gamma1, RngStream)> run;
};

struct ReplicationOutcome {
  /// First coordinate of the final iterate.
  double final_value = 0.0;
  bool diverged = false;
  bool stuck = false;
};

struct ScanRow {
  double gamma1 = 0.0;
  std::string method;
  double median_abs_error = 0.0;
  std::size_t diverged = 0;
  std::size_t stuck = 0;
  std::vector<ReplicationOutcome> runs;
};

/// Paired-seed scan: for every gamma1 and method, replication r runs on
/// RngStream(seed, r). Rows are ordered by gamma1, then method.
std::vector<ScanRow> stability_scan(const std::vector<ScanMethod>& methods, const std::vector<double>& gamma1_grid,
                                    double theta_star, const ReplicationPlan& plan, const StuckRule& rule = {});

/// Robbins-Monro ("rm") and inner-RM implicit ("implicit") quantile estimators.
std::vector<ScanMethod> quantile_scan_methods(const models::QuantileOracle& oracle, double theta0,
                                              std::size_t horizon, const InnerRmConfig& inner, double gamma = 1.0);

/// LMS ("explicit") and NLMS-by-lambda ("implicit") for the normal linear model.
std::vector<ScanMethod> normal_linear_scan_methods(const models::NormalLinearStream& stream, double theta0,
                                                   std::size_t horizon, double gamma = 1.0);

// Asymptotic normality -----------------------------------------------------------

struct NormalityProblem {
  std::function<Trace(const LearningRate&, std::size_t horizon, RngStream)> run;
  Vector theta_star;
  Matrix J;   // Jacobian of h at theta_star
  Matrix Xi;  // covariance of the noise at theta_star
};

enum class RhsScaling { unit, gamma1_squared };

const char* to_string(RhsScaling s);

struct NormalityReport {
  /// Covariance of n^{gamma/2} (theta_n - theta_star) across replications.
  Matrix empirical_cov;
  /// Lyapunov solution for the requested scaling.
  Matrix theoretical_cov;
  RhsScaling scaling = RhsScaling::gamma1_squared;
  double relative_error = 0.0;
  double rel_error_unit = 0.0;
  double rel_error_gamma1_squared = 0.0;
  /// Scalings whose relative error is within the match tolerance.
  std::vector<RhsScaling> matching;
  std::size_t replications = 0;
  std::size_t diverged = 0;
};

/// Runs the implicit procedure plan.replications times to `horizon` and compares
/// the empirical covariance of the scaled errors against the Lyapunov solution
/// with rhs = Xi (unit) and rhs = gamma1^2 Xi. Relative errors are Frobenius
/// norms relative to the theoretical matrix (absolute when that is zero).
NormalityReport normality_check(const NormalityProblem& problem, const LearningRate& rate, std::size_t horizon,
                                const ReplicationPlan& plan, RhsScaling scaling = RhsScaling::gamma1_squared,
                                double match_tol = 0.15);

/// Implicit SGD on the normal linear model: J = E[x^2], Xi = noise_sd^2 E[x^2].
NormalityProblem normal_linear_normality_problem(const models::NormalLinearStream& stream, double theta0);

/// Ideal implicit procedure on a linear field with independent Gaussian noise.
NormalityProblem linear_gaussian_normality_problem(const Matrix& J, const Vector& theta_star,
                                                   const Vector& noise_sd, const Vector& theta0);

}  // namespace isa::diagnostics
