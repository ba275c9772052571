#pragma once

#include "isa/core.hpp"
#include "isa/solvers.hpp"

namespace isa {

/// Runs cfg.horizon steps of the configured update and records every iterate.
///
/// Modes:
///  - explicit_rm:       theta_n = theta_{n-1} - gamma_n W(theta_{n-1})
///  - implicit_ideal:    theta_n = theta_{n-1} - gamma_n W(tbar), tbar the exact implicit point
///                       (needs oracle.exact_h)
///  - implicit_lambda:   theta_n = theta_{n-1} - gamma_n lambda_n s(theta_{n-1}) u
///                       (needs oracle.draw_factorized)
///  - implicit_inner_rm: theta_n = x_K of inner_rm
///
/// A solver failure in an implicit mode is not fatal: that step falls back to the
/// explicit update with the same draw and Trace::solver_failures is incremented.
/// The run stops early, flagged as diverged, once an iterate norm exceeds
/// cfg.guard_bound (or becomes NaN).
Trace run_procedure(const ProcedureConfig& cfg, const StochasticOracle& oracle, RngStream rng);

}  // namespace isa
