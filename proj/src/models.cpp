#include "isa/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace isa::models {

void NormalLinearStream::validate() const {
  if (!(noise_sd >= 0.0)) throw Error("normal linear: noise_sd must be nonnegative");
  if (!std::isfinite(theta_star)) throw Error("normal linear: theta_star must be finite");
}

DataPoint NormalLinearStream::draw(RngStream& rng) const {
  DataPoint p;
  p.x = x_dist == XDist::fixed ? x_fixed : rng.normal();
  const double eps = noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0;
  p.y = p.x * theta_star + eps;
  return p;
}

double NormalLinearStream::second_moment() const { return x_dist == XDist::fixed ? x_fixed * x_fixed : 1.0; }

double normal_linear_explicit_step(double theta_prev, double gamma_n, double x, double y) {
  return (1.0 - gamma_n * x * x) * theta_prev + gamma_n * y * x;
}

double normal_linear_implicit_step(double theta_prev, double gamma_n, double x, double y) {
  const double denom = 1.0 + gamma_n * x * x;
  return theta_prev / denom + gamma_n * y * x / denom;
}

FactorizedDraw normal_linear_factorized(const DataPoint& p) {
  const double x = p.x;
  const double y = p.y;
  const double ax = std::abs(x);
  FactorizedDraw d;
  d.s = [x, y, ax](const Vector& theta) { return -(y - x * theta[0]) * ax; };
  d.u = scalar_vector(x < 0.0 ? -1.0 : 1.0);
  return d;
}

namespace {

StochasticOracle normal_linear_from_source(std::function<DataPoint(RngStream&)> source, double second_moment,
                                           double theta_star) {
  StochasticOracle o;
  o.dim = 1;
  o.draw = [source](const Vector& theta, RngStream& rng) {
    const DataPoint p = source(rng);
    return scalar_vector(-(p.y - p.x * theta[0]) * p.x);
  };
  o.exact_h = [second_moment, theta_star](const Vector& theta) {
    return scalar_vector(second_moment * (theta[0] - theta_star));
  };
  o.draw_factorized = [source](RngStream& rng) { return normal_linear_factorized(source(rng)); };
  return o;
}

}  // namespace

StochasticOracle normal_linear_oracle(const NormalLinearStream& stream) {
  stream.validate();
  return normal_linear_from_source([stream](RngStream& rng) { return stream.draw(rng); },
                                   stream.second_moment(), stream.theta_star);
}

StochasticOracle normal_linear_dataset_oracle(std::vector<DataPoint> data) {
  if (data.empty()) throw Error("normal linear: empty data set");
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : data) {
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const double n = static_cast<double>(data.size());
  const double theta_hat = sxx > 0.0 ? sxy / sxx : 0.0;
  auto shared = std::make_shared<const std::vector<DataPoint>>(std::move(data));
  auto source = [shared](RngStream& rng) {
    const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(shared->size()));
    return (*shared)[std::min(i, shared->size() - 1)];
  };
  return normal_linear_from_source(source, sxx / n, theta_hat);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

QuantileOracle QuantileOracle::standard_normal(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("quantile oracle: alpha must lie in (0, 1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (standard_normal_cdf(mid) < alpha ? lo : hi) = mid;
  }
  QuantileOracle q;
  q.alpha = alpha;
  q.theta_star = 0.5 * (lo + hi);
  q.cdf = standard_normal_cdf;
  q.sampler = [](RngStream& rng) { return rng.normal(); };
  if (std::abs(q.cdf(q.theta_star) - alpha) > 1e-9) throw Error("quantile oracle: root not resolved");
  return q;
}

double quantile_query(const QuantileOracle& oracle, double theta, RngStream& rng) {
  const double z = oracle.sampler(rng);
  return (z <= theta ? 1.0 : 0.0) - oracle.alpha;
}

StochasticOracle quantile_stochastic_oracle(const QuantileOracle& oracle) {
  StochasticOracle o;
  o.dim = 1;
  o.draw = [oracle](const Vector& theta, RngStream& rng) {
    return scalar_vector(quantile_query(oracle, theta[0], rng));
  };
  o.exact_h = [oracle](const Vector& theta) { return scalar_vector(oracle.cdf(theta[0]) - oracle.alpha); };
  return o;
}

StochasticOracle quantile_mean_oracle(const QuantileOracle& oracle) {
  StochasticOracle o = quantile_stochastic_oracle(oracle);
  o.draw = [h = o.exact_h](const Vector& theta, RngStream&) { return h(theta); };
  return o;
}

double expfam_mean(double theta) {
  if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
  const double e = std::exp(theta);
  return e / (1.0 + e);
}

double expfam_mean_inverse(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw Error("expfam_mean_inverse: mean must lie in (0, 1)");
  return std::log(mu / (1.0 - mu));
}

double expfam_simulate_stat(double theta, std::size_t k, RngStream& rng) {
  if (k < 1) throw Error("expfam_simulate_stat: k must be at least 1");
  const double p = expfam_mean(theta);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += rng.bernoulli(p) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

Simulator expfam_simulator() {
  return [](const Vector& theta, std::size_t k, RngStream& rng) {
    return scalar_vector(expfam_simulate_stat(theta[0], k, rng));
  };
}

Simulator expfam_exact_simulator() {
  return [](const Vector& theta, std::size_t, RngStream&) { return scalar_vector(expfam_mean(theta[0])); };
}

std::vector<double> expfam_dataset(double theta_star, std::size_t n, RngStream& rng) {
  std::vector<double> out(n);
  const double p = expfam_mean(theta_star);
  for (auto& s : out) s = rng.bernoulli(p) ? 1.0 : 0.0;
  return out;
}

namespace {

double sigmoid(double z) { return expfam_mean(z); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic_gradient(const std::vector<DataPoint>& data, double theta) {
  double g = 0.0;
  for (const auto& p : data) g += (sigmoid(theta * p.x) - p.y) * p.x;
  return g / static_cast<double>(data.size());
}

}  // namespace

std::vector<DataPoint> logistic_dataset(double theta_star, std::size_t n, RngStream& rng) {
  std::vector<DataPoint> out(n);
  for (auto& p : out) {
    p.x = rng.normal();
    p.y = rng.bernoulli(sigmoid(theta_star * p.x)) ? 1.0 : 0.0;
  }
  return out;
}

StochasticOracle logistic_oracle(std::vector<DataPoint> data) {
  if (data.empty()) throw Error("logistic: empty data set");
  auto shared = std::make_shared<const std::vector<DataPoint>>(std::move(data));
  auto pick = [shared](RngStream& rng) {
    const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(shared->size()));
    return (*shared)[std::min(i, shared->size() - 1)];
  };
  StochasticOracle o;
  o.dim = 1;
  o.draw = [pick](const Vector& theta, RngStream& rng) {
    const DataPoint p = pick(rng);
    return scalar_vector((sigmoid(theta[0] * p.x) - p.y) * p.x);
  };
  o.exact_h = [shared](const Vector& theta) { return scalar_vector(logistic_gradient(*shared, theta[0])); };
  o.draw_factorized = [pick](RngStream& rng) {
    const DataPoint p = pick(rng);
    const double x = p.x;
    const double y = p.y;
    FactorizedDraw d;
    d.s = [x, y](const Vector& theta) { return (sigmoid(theta[0] * x) - y) * std::abs(x); };
    d.u = scalar_vector(x < 0.0 ? -1.0 : 1.0);
    return d;
  };
  return o;
}

double logistic_potential(const std::vector<DataPoint>& data, double theta) {
  double total = 0.0;
  for (const auto& p : data) total += softplus(theta * p.x) - p.y * theta * p.x;
  return total / static_cast<double>(data.size());
}

double logistic_mle(const std::vector<DataPoint>& data) {
  if (data.empty()) throw Error("logistic_mle: empty data set");
  double lo = -1.0;
  double hi = 1.0;
  int expansions = 0;
  // Strict signs: on separable data the gradient saturates to exactly zero.
  while (!(logistic_gradient(data, lo) < 0.0) && expansions++ < 60) lo *= 2.0;
  while (!(logistic_gradient(data, hi) > 0.0) && expansions++ < 120) hi *= 2.0;
  if (!(logistic_gradient(data, lo) < 0.0) || !(logistic_gradient(data, hi) > 0.0)) {
    throw Error("logistic_mle: no finite maximiser (separable data?)");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (logistic_gradient(data, mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

StochasticOracle linear_gaussian_oracle(const Matrix& J, const Vector& theta_star, const Vector& noise_sd) {
  const auto p = theta_star.size();
  if (J.rows() != p || J.cols() != p || noise_sd.size() != p) {
    throw Error("linear_gaussian_oracle: shape mismatch");
  }
  StochasticOracle o;
  o.dim = static_cast<std::size_t>(p);
  o.exact_h = [J, theta_star](const Vector& theta) { return Vector(J * (theta - theta_star)); };
  o.draw = [J, theta_star, noise_sd](const Vector& theta, RngStream& rng) {
    Vector w = J * (theta - theta_star);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] += noise_sd[i] * rng.normal();
    return w;
  };
  return o;
}

}  // namespace isa::models
