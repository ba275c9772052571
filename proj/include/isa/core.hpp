#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isa/rng.hpp"

namespace isa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the root finders. Carries the best residual reached.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Step-size schedule gamma_n = gamma1 * n^(-gamma) with gamma in (1/2, 1].
class LearningRate {
 public:
  /// Throws isa::Error when the schedule breaks the Robbins-Monro conditions.
  LearningRate(double gamma1, double gamma);

  double gamma1() const { return gamma1_; }
  double gamma() const { return gamma_; }
  double at(std::size_t n) const;

 private:
  double gamma1_;
  double gamma_;
};

LearningRate validate_schedule(double gamma1, double gamma);
double rate_at(const LearningRate& rate, std::size_t n);

/// One draw whose field factorises as W_theta = s(theta) * u, with the data
/// (and hence s and u) fixed before theta is known.
struct FactorizedDraw {
  std::function<double(const Vector&)> s;
  Vector u;
};

/// Noisy access to a regression function h: draw(theta) has mean h(theta).
struct StochasticOracle {
  std::size_t dim = 1;
  std::function<Vector(const Vector&, RngStream&)> draw;
  /// Exact h, when known (tests and the idealised implicit mode).
  std::function<Vector(const Vector&)> exact_h;
  /// Present when every draw factorises as s(theta) * u.
  std::function<FactorizedDraw(RngStream&)> draw_factorized;
};

/// Inner Robbins-Monro settings: K steps with rate a_k = a1 / k.
struct InnerRmConfig {
  std::size_t K = 50;
  double a1 = 10.0;

  void validate() const;
};

/// Iterate history of one run, stored row-major (one row per iterate).
class Trace {
 public:
  explicit Trace(std::size_t dim = 1) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return values_.size() / dim_; }
  Eigen::Map<const Vector> iterate(std::size_t n) const {
    return {values_.data() + n * dim_, static_cast<Eigen::Index>(dim_)};
  }
  Vector final_iterate() const { return iterate(size() - 1); }
  /// Scalar view of a one-dimensional trace.
  double scalar(std::size_t n) const { return values_[n * dim_]; }
  std::span<const double> raw() const { return values_; }

  void reserve(std::size_t n) { values_.reserve(n * dim_); }
  void push(const Vector& theta);

  bool diverged = false;
  std::optional<std::size_t> diverged_at;
  double wall_time = 0.0;
  std::size_t solver_failures = 0;

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.dim_ == b.dim_ && a.values_ == b.values_ && a.diverged == b.diverged &&
           a.diverged_at == b.diverged_at && a.solver_failures == b.solver_failures;
  }

 private:
  std::size_t dim_;
  std::vector<double> values_;
};

enum class Mode { explicit_rm, implicit_ideal, implicit_lambda, implicit_inner_rm };

struct ProcedureConfig {
  std::size_t horizon = 1;
  Vector theta0;
  LearningRate rate{1.0, 1.0};
  double guard_bound = 1e8;
  Mode mode = Mode::explicit_rm;
  double solver_tol = 1e-10;
  InnerRmConfig inner;

  void validate() const;
};

/// theta_prev - gamma_n * w.
Vector rm_step(const Vector& theta_prev, double gamma_n, const Vector& w);

struct ImplicitSolveOptions {
  double tol = 1e-10;
  std::size_t max_bisection = 200;
  std::size_t max_expansions = 60;
  std::size_t max_fixed_point = 500;
};

/// Solves theta = theta_prev - gamma_n * h(theta) for known h.
///
/// One dimension uses bisection on the increasing map t + gamma_n h(t); higher
/// dimensions use a damped fixed-point iteration whose damping 1/(1 + gamma_n L)
/// tracks a running estimate L of the local Lipschitz constant of h; if that
/// stalls, a few finite-difference Newton steps finish the solve.
/// Throws SolverError when the residual cannot be brought under tol.
Vector ideal_implicit_step(const Vector& theta_prev, double gamma_n,
                           const std::function<Vector(const Vector&)>& h,
                           const ImplicitSolveOptions& opts = {});

Vector ideal_implicit_step(const Vector& theta_prev, double gamma_n,
                           const std::function<Vector(const Vector&)>& h, double tol);

inline Vector scalar_vector(double v) { return Vector::Constant(1, v); }

}  // namespace isa
