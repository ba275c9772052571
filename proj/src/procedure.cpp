#include "isa/procedure.hpp"

#include <chrono>

namespace isa {

Trace run_procedure(const ProcedureConfig& cfg, const StochasticOracle& oracle, RngStream rng) {
  cfg.validate();
  if (oracle.dim != static_cast<std::size_t>(cfg.theta0.size())) {
    throw Error("run_procedure: oracle dimension does not match theta0");
  }
  switch (cfg.mode) {
    case Mode::explicit_rm:
    case Mode::implicit_inner_rm:
      if (!oracle.draw) throw Error("run_procedure: oracle has no draw function");
      break;
    case Mode::implicit_ideal:
      if (!oracle.draw || !oracle.exact_h) throw Error("run_procedure: ideal mode needs draw and exact_h");
      break;
    case Mode::implicit_lambda:
      if (!oracle.draw_factorized) throw Error("run_procedure: lambda mode needs a factorized oracle");
      break;
  }

  const auto start = std::chrono::steady_clock::now();
  Trace trace(oracle.dim);
  trace.reserve(cfg.horizon + 1);
  trace.push(cfg.theta0);

  ImplicitSolveOptions opts;
  opts.tol = cfg.solver_tol;
  Vector theta = cfg.theta0;

  for (std::size_t n = 1; n <= cfg.horizon; ++n) {
    const double gamma_n = cfg.rate.at(n);
    switch (cfg.mode) {
      case Mode::explicit_rm:
        theta -= gamma_n * oracle.draw(theta, rng);
        break;
      case Mode::implicit_ideal: {
        Vector anchor = theta;
        try {
          anchor = ideal_implicit_step(theta, gamma_n, oracle.exact_h, opts);
        } catch (const SolverError&) {
          ++trace.solver_failures;
        }
        theta -= gamma_n * oracle.draw(anchor, rng);
        break;
      }
      case Mode::implicit_lambda: {
        const FactorizedDraw d = oracle.draw_factorized(rng);
        const double s0 = d.s(theta);
        double lambda = 1.0;
        try {
          lambda = solve_lambda(theta, gamma_n, d.s, d.u, cfg.solver_tol).lambda;
        } catch (const SolverError&) {
          ++trace.solver_failures;
        }
        theta -= (gamma_n * lambda * s0) * d.u;
        break;
      }
      case Mode::implicit_inner_rm:
        theta = inner_rm(theta, gamma_n, oracle, cfg.inner, rng, cfg.guard_bound);
        break;
    }
    trace.push(theta);
    if (!(theta.norm() <= cfg.guard_bound)) {
      trace.diverged = true;
      trace.diverged_at = n;
      break;
    }
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace isa
