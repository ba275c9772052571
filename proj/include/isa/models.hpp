#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "isa/core.hpp"
#include "isa/solvers.hpp"

namespace isa::models {

// ---------------------------------------------------------------------------
// Normal linear model: Y | X ~ N(X theta_star, noise_sd^2).

enum class XDist { fixed, standard_normal };

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
};

struct NormalLinearStream {
  double theta_star = 0.0;
  XDist x_dist = XDist::fixed;
  double x_fixed = 1.0;
  /// Zero gives the noiseless model y = x theta_star.
  double noise_sd = 1.0;

  void validate() const;
  /// Draws x (if random) and then the noise, in that order.
  DataPoint draw(RngStream& rng) const;
  /// E[x^2].
  double second_moment() const;
};

/// LMS update: (1 - gamma x^2) theta_prev + gamma y x.
double normal_linear_explicit_step(double theta_prev, double gamma_n, double x, double y);
/// NLMS update: (theta_prev + gamma y x) / (1 + gamma x^2).
double normal_linear_implicit_step(double theta_prev, double gamma_n, double x, double y);

/// Oracle for the negative log-likelihood gradient W = -(y - x theta) x,
/// factorised as s(theta) = -(y - x theta)|x| and u = sign(x) (u = 1 at x = 0).
StochasticOracle normal_linear_oracle(const NormalLinearStream& stream);

/// Same field, but each draw resamples (with replacement) from a finite data set.
/// exact_h is the regression function of the empirical distribution.
StochasticOracle normal_linear_dataset_oracle(std::vector<DataPoint> data);

FactorizedDraw normal_linear_factorized(const DataPoint& p);

// ---------------------------------------------------------------------------
// Quantile estimation: W_theta = 1{Z <= theta} - alpha.

struct QuantileOracle {
  double alpha = 0.5;
  double theta_star = 0.0;
  std::function<double(double)> cdf;
  std::function<double(RngStream&)> sampler;

  /// Z ~ N(0, 1); theta_star solved to |F(theta_star) - alpha| <= 1e-9.
  static QuantileOracle standard_normal(double alpha);
};

double standard_normal_cdf(double x);

/// 1 - alpha if the sampled Z is <= theta, otherwise -alpha.
double quantile_query(const QuantileOracle& oracle, double theta, RngStream& rng);

/// Noisy oracle (one Z per draw) with exact_h(theta) = F(theta) - alpha.
StochasticOracle quantile_stochastic_oracle(const QuantileOracle& oracle);
/// Noiseless variant: every draw returns F(theta) - alpha.
StochasticOracle quantile_mean_oracle(const QuantileOracle& oracle);

// ---------------------------------------------------------------------------
// Bernoulli exponential family with natural parameter theta; S in {0, 1}.

/// e^theta / (1 + e^theta), evaluated without overflow.
double expfam_mean(double theta);
/// Inverse of expfam_mean on (0, 1).
double expfam_mean_inverse(double mu);
/// Average of k independent Bernoulli(expfam_mean(theta)) draws.
double expfam_simulate_stat(double theta, std::size_t k, RngStream& rng);
/// Simulator adaptor for grid_lambda and the simulation-based estimators.
Simulator expfam_simulator();
/// Exact mean map as a simulator (the k -> infinity limit).
Simulator expfam_exact_simulator();
/// N i.i.d. observed statistics at theta_star.
std::vector<double> expfam_dataset(double theta_star, std::size_t n, RngStream& rng);

// ---------------------------------------------------------------------------
// Logistic regression on a finite data set: y ~ Bernoulli(sigmoid(theta x)).

std::vector<DataPoint> logistic_dataset(double theta_star, std::size_t n, RngStream& rng);
/// W = (sigmoid(theta x) - y) x for a resampled point; factorised like the
/// normal linear oracle. exact_h averages over the data set.
StochasticOracle logistic_oracle(std::vector<DataPoint> data);
/// Mean of log(1 + e^{theta x}) - y theta x over the data set.
double logistic_potential(const std::vector<DataPoint>& data, double theta);
/// Minimiser of logistic_potential; throws when the data are separable.
double logistic_mle(const std::vector<DataPoint>& data);

// ---------------------------------------------------------------------------
// Linear field with Gaussian noise: W = J (theta - theta_star) + diag(noise_sd) z.

StochasticOracle linear_gaussian_oracle(const Matrix& J, const Vector& theta_star, const Vector& noise_sd);

}  // namespace isa::models
