#pragma once

#include <cstddef>
#include <functional>

#include "isa/core.hpp"

namespace isa {

enum class LambdaMethod { bisection, closed_form, grid };

/// Outcome of a scalar shrinkage solve.
///
/// For the fixed-point methods `residual` is |lambda s(theta_prev) - s(theta_prev -
/// gamma lambda s(theta_prev) u)|; for the grid method it is the squared
/// objective at the chosen grid point.
struct LambdaSolve {
  double lambda = 1.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  LambdaMethod method = LambdaMethod::closed_form;
};

/// Approximates the implicit point by K inner Robbins-Monro steps
///   x_k = x_{k-1} - a_k (gamma_n W_{x_{k-1}} + x_{k-1} - theta_prev),  a_k = a1 / k,
/// starting from x_0 = theta_prev with a fresh draw per inner step. Stops early
/// (returning the offending iterate) once an inner iterate leaves the guard ball.
Vector inner_rm(const Vector& theta_prev, double gamma_n, const StochasticOracle& oracle,
                const InnerRmConfig& cfg, RngStream& rng, double guard_bound = 1e8);

using ScalarField = std::function<double(const Vector&)>;

/// Solves lambda s(theta_prev) = s(theta_prev - gamma_n lambda s(theta_prev) u)
/// inside a sign-change bracket: [0, 1] first, then [-2, 4] doubled until a sign
/// change appears. The bracket is refined by Illinois regula falsi (midpoint
/// whenever the secant point leaves the bracket) well past tol. Throws SolverError if no bracket is
/// found or the residual stays above tol.
LambdaSolve solve_lambda(const Vector& theta_prev, double gamma_n, const ScalarField& s,
                         const Vector& u, double tol = 1e-10);

/// (theta, k, rng) -> statistic averaged over k simulated data points.
using Simulator = std::function<Vector(const Vector&, std::size_t, RngStream&)>;

/// Grid-search shrinkage for simulation-based updates
///   theta(lambda) = theta_prev + gamma_n (s_obs - lambda S(theta_prev)).
/// Picks lambda in {0, 1/m, ..., 1} minimising |lambda S(theta_prev) - S(theta(lambda))|^2.
/// S(theta_prev) is simulated once on rng.substream(0); grid point j simulates on
/// rng.substream(j + 1). Ties go to the smaller lambda.
LambdaSolve grid_lambda(const Vector& theta_prev, double gamma_n, const Vector& s_obs,
                        const Simulator& simulator, std::size_t k, std::size_t m, const RngStream& rng);

/// Objective value of grid_lambda at one lambda, with an explicit S(theta_prev).
double grid_objective(const Vector& theta_prev, double gamma_n, const Vector& s_obs, const Vector& s_prev,
                      double lambda, const Simulator& simulator, std::size_t k, RngStream rng);

struct CovarianceProblem {
  Matrix J;   // Jacobian of h at the root
  Matrix Xi;  // noise covariance
  double gamma1 = 1.0;

  /// Throws unless Xi is symmetric PSD and gamma1 J - I/2 is positive stable.
  void validate() const;
};

/// Solves (gamma1 J - I/2) Sigma + Sigma (gamma1 J^T - I/2) = rhs through the
/// p^2 x p^2 Kronecker system. Meant for small p.
Matrix lyapunov_sigma(const CovarianceProblem& prob, const Matrix& rhs);

/// (2 gamma1 J - I)^{-1} rhs; valid when J is symmetric and commutes with rhs.
Matrix closed_form_sigma(const CovarianceProblem& prob, const Matrix& rhs);

/// Entrywise max of (gamma1 J - I/2) Sigma + Sigma (gamma1 J^T - I/2) - rhs.
double lyapunov_residual(const CovarianceProblem& prob, const Matrix& sigma, const Matrix& rhs);

}  // namespace isa
