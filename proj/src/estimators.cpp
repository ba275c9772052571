#include "isa/estimators.hpp"

#include <chrono>
#include <cmath>

#include "isa/procedure.hpp"

namespace isa {

namespace {

ProcedureConfig make_config(Mode mode, const LearningRate& rate, const Vector& theta0, std::size_t n,
                            double guard_bound) {
  ProcedureConfig cfg;
  cfg.mode = mode;
  cfg.rate = rate;
  cfg.theta0 = theta0;
  cfg.horizon = n;
  cfg.guard_bound = guard_bound;
  return cfg;
}

std::size_t uniform_index(RngStream& rng, std::size_t size) {
  const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(size));
  return i < size ? i : size - 1;
}

bool guard_tripped(const Vector& theta, double guard_bound) { return !(theta.norm() <= guard_bound); }

}  // namespace

Trace explicit_sgd(const StochasticOracle& stream, const LearningRate& rate, const Vector& theta0, std::size_t n,
                   RngStream rng, double guard_bound) {
  return run_procedure(make_config(Mode::explicit_rm, rate, theta0, n, guard_bound), stream, rng);
}

Trace implicit_sgd(const StochasticOracle& stream, const LearningRate& rate, const Vector& theta0, std::size_t n,
                   RngStream rng, double guard_bound) {
  return run_procedure(make_config(Mode::implicit_lambda, rate, theta0, n, guard_bound), stream, rng);
}

namespace {

template <typename Update>
Trace run_simulation(const SimulationData& data, const LearningRate& rate, const Vector& theta0,
                     std::size_t steps, const RngStream& rng, double guard_bound, Update&& update) {
  if (data.stats.empty()) throw Error("simulation estimator: empty data set");
  if (!data.simulator) throw Error("simulation estimator: no simulator");
  if (steps < 1) throw Error("simulation estimator: steps must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  Trace trace(static_cast<std::size_t>(theta0.size()));
  trace.reserve(steps + 1);
  trace.push(theta0);
  Vector theta = theta0;
  for (std::size_t n = 1; n <= steps; ++n) {
    RngStream step_rng = rng.substream(n);
    const Vector& s_obs = data.stats[uniform_index(step_rng, data.stats.size())];
    theta = update(theta, rate.at(n), s_obs, step_rng.substream(1));
    trace.push(theta);
    if (guard_tripped(theta, guard_bound)) {
      trace.diverged = true;
      trace.diverged_at = n;
      break;
    }
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace

Trace sim_explicit(const SimulationData& data, const LearningRate& rate, std::size_t k, const Vector& theta0,
                   std::size_t steps, const RngStream& rng, double guard_bound) {
  if (k < 1) throw Error("sim_explicit: k must be at least 1");
  return run_simulation(data, rate, theta0, steps, rng, guard_bound,
                        [&](const Vector& theta, double gamma_n, const Vector& s_obs, const RngStream& sub) {
                          RngStream base = sub.substream(0);
                          return Vector(theta + gamma_n * (s_obs - data.simulator(theta, k, base)));
                        });
}

Trace sim_implicit(const SimulationData& data, const LearningRate& rate, std::size_t k, std::size_t m,
                   const Vector& theta0, std::size_t steps, const RngStream& rng, double guard_bound,
                   std::vector<LambdaSolve>* lambdas) {
  if (k < 1 || m < 1) throw Error("sim_implicit: k and m must be at least 1");
  if (lambdas) lambdas->clear();
  return run_simulation(data, rate, theta0, steps, rng, guard_bound,
                        [&](const Vector& theta, double gamma_n, const Vector& s_obs, const RngStream& sub) {
                          const LambdaSolve sol = grid_lambda(theta, gamma_n, s_obs, data.simulator, k, m, sub);
                          if (lambdas) lambdas->push_back(sol);
                          // grid_lambda simulated S_hat(theta) on this same substream.
                          RngStream base = sub.substream(0);
                          const Vector s_prev = data.simulator(theta, k, base);
                          return Vector(theta + gamma_n * (s_obs - sol.lambda * s_prev));
                        });
}

Trace likelihood_free_explicit(const std::function<Vector(RngStream&)>& stream,
                               const std::function<Vector(const Vector&)>& mean_map, const LearningRate& rate,
                               const Vector& theta0, std::size_t n, RngStream rng, double guard_bound) {
  StochasticOracle o;
  o.dim = static_cast<std::size_t>(theta0.size());
  o.draw = [&](const Vector& theta, RngStream& r) { return Vector(mean_map(theta) - stream(r)); };
  o.exact_h = mean_map;
  return run_procedure(make_config(Mode::explicit_rm, rate, theta0, n, guard_bound), o, rng);
}

Trace quantile_rm(const StochasticOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                  RngStream rng, double guard_bound) {
  return run_procedure(make_config(Mode::explicit_rm, rate, scalar_vector(theta0), n, guard_bound), oracle, rng);
}

Trace quantile_rm(const models::QuantileOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                  RngStream rng, double guard_bound) {
  return quantile_rm(models::quantile_stochastic_oracle(oracle), rate, theta0, n, rng, guard_bound);
}

Trace quantile_implicit(const StochasticOracle& oracle, const LearningRate& rate, double theta0, std::size_t n,
                        const InnerRmConfig& inner, RngStream rng, double guard_bound) {
  ProcedureConfig cfg = make_config(Mode::implicit_inner_rm, rate, scalar_vector(theta0), n, guard_bound);
  cfg.inner = inner;
  return run_procedure(cfg, oracle, rng);
}

Trace quantile_implicit(const models::QuantileOracle& oracle, const LearningRate& rate, double theta0,
                        std::size_t n, const InnerRmConfig& inner, RngStream rng, double guard_bound) {
  return quantile_implicit(models::quantile_stochastic_oracle(oracle), rate, theta0, n, inner, rng, guard_bound);
}

bool stuck_high(const Trace& trace, double theta_star, const StuckRule& rule) {
  const std::size_t len = trace.size();
  if (len < 2) return false;
  const std::size_t last = len - 1;
  if (!(trace.scalar(last) > theta_star + rule.margin)) return false;
  for (std::size_t n = last / 2 + 1; n <= last; ++n) {
    if (!(std::abs(trace.scalar(n) - trace.scalar(n - 1)) < rule.tail_tol)) return false;
  }
  return true;
}

}  // namespace isa
