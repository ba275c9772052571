#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "isa/core.hpp"
#include "isa/models.hpp"
#include "isa/solvers.hpp"

namespace isa {

// Gradient-based estimators. The oracle's draws are W = -grad log f for one data
// point, so theta_n = theta_{n-1} + gamma_n grad log f = theta_{n-1} - gamma_n W.

/// Plain SGD (LMS for the normal linear model).
Trace explicit_sgd(const StochasticOracle& stream, const LearningRate& rate, const Vector& theta0, std::size_t n,
                   RngStream rng, double guard_bound = 1e8);

/// Implicit SGD: each step solves the scalar fixed point for lambda_n and moves
/// along the drawn direction u. Requires a factorised oracle. For the normal
/// linear model this is the NLMS recursion.
Trace implicit_sgd(const StochasticOracle& stream, const LearningRate& rate, const Vector& theta0, std::size_t n,
                   RngStream rng, double guard_bound = 1e8);

// Simulation-based estimation. A data set of observed statistics is resampled
// uniformly; the model is only available through a simulator.

struct SimulationData {
  std::vector<Vector> stats;
  Simulator simulator;
};

/// theta <- theta + gamma_n (S_n - S_hat(theta; k)).
///
/// Step n works on rng.substream(n): the data index comes first, then
/// S_hat(theta_{n-1}) is simulated on substream(n).substream(1).substream(0), the
/// same stream sim_implicit uses, so paired runs share their randomness.
Trace sim_explicit(const SimulationData& data, const LearningRate& rate, std::size_t k, const Vector& theta0,
                   std::size_t steps, const RngStream& rng, double guard_bound = 1e8);

/// theta <- theta + gamma_n (S_n - lambda_n S_hat(theta; k)) with lambda_n from
/// grid_lambda on an m-point grid. `lambdas`, when non-null, receives the
/// per-step LambdaSolve records.
Trace sim_implicit(const SimulationData& data, const LearningRate& rate, std::size_t k, std::size_t m,
                   const Vector& theta0, std::size_t steps, const RngStream& rng, double guard_bound = 1e8,
                   std::vector<LambdaSolve>* lambdas = nullptr);

/// theta_n = theta_{n-1} + gamma_n (S_n - T(theta_{n-1})) for a known mean map T.
Trace likelihood_free_explicit(const std::function<Vector(RngStream&)>& stream,
                               const std::function<Vector(const Vector&)>& mean_map, const LearningRate& rate,
                               const Vector& theta0, std::size_t n, RngStream rng, double guard_bound = 1e8);

// Quantile estimation.

Trace quantile_rm(const models::QuantileOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                  RngStream rng, double guard_bound = 1e8);
Trace quantile_rm(const StochasticOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                  RngStream rng, double guard_bound = 1e8);

/// Outer step theta_n = x_K of an inner Robbins-Monro run with rate a1 / k.
Trace quantile_implicit(const models::QuantileOracle& oracle, const LearningRate& rate, double theta0,
                        std::size_t n, const InnerRmConfig& inner, RngStream rng, double guard_bound = 1e8);
Trace quantile_implicit(const StochasticOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                        const InnerRmConfig& inner, RngStream rng, double guard_bound = 1e8);

/// Overshoot-and-stick rule for one-dimensional traces: the final iterate sits
/// above theta_star + margin and every increment over the second half of the
/// run is smaller than tail_tol in magnitude.
struct StuckRule {
  double margin = 2.0;
  double tail_tol = 1e-3;
};

bool stuck_high(const Trace& trace, double theta_star, const StuckRule& rule = {});

}  // namespace isa
