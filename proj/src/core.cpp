#include "isa/core.hpp"

#include <algorithm>
#include <cmath>

namespace isa {

LearningRate::LearningRate(double gamma1, double gamma) : gamma1_(gamma1), gamma_(gamma) {
  if (!(gamma1 > 0.0) || !std::isfinite(gamma1)) {
    throw Error("nonpositive scale: gamma1 must be a positive finite number");
  }
  if (!(gamma > 0.5)) {
    throw Error("square-summability violated: gamma must exceed 1/2");
  }
  if (!(gamma <= 1.0)) {
    throw Error("divergent-sum condition violated: gamma must not exceed 1");
  }
}

double LearningRate::at(std::size_t n) const {
  if (n == 0) throw Error("learning rate index starts at 1");
  if (gamma_ == 1.0) return gamma1_ / static_cast<double>(n);
  return gamma1_ * std::pow(static_cast<double>(n), -gamma_);
}

LearningRate validate_schedule(double gamma1, double gamma) { return {gamma1, gamma}; }

double rate_at(const LearningRate& rate, std::size_t n) { return rate.at(n); }

void InnerRmConfig::validate() const {
  if (K < 1) throw Error("inner Robbins-Monro needs K >= 1");
  if (!(a1 > 0.0)) throw Error("inner Robbins-Monro needs a1 > 0");
}

void Trace::push(const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != dim_) throw Error("trace dimension mismatch");
  values_.insert(values_.end(), theta.data(), theta.data() + theta.size());
}

void ProcedureConfig::validate() const {
  if (horizon < 1) throw Error("horizon must be at least 1");
  if (!(guard_bound > 0.0)) throw Error("guard_bound must be positive");
  if (theta0.size() == 0) throw Error("theta0 is empty");
  if (!(solver_tol > 0.0)) throw Error("solver_tol must be positive");
  if (mode == Mode::implicit_inner_rm) inner.validate();
}

Vector rm_step(const Vector& theta_prev, double gamma_n, const Vector& w) {
  if (theta_prev.size() != w.size()) throw Error("rm_step: dimension mismatch");
  return theta_prev - gamma_n * w;
}

namespace {

Vector solve_scalar(double theta_prev, double gamma_n, const std::function<Vector(const Vector&)>& h,
                    const ImplicitSolveOptions& opts) {
  Vector point(1);
  auto g = [&](double t) {
    point[0] = t;
    return t + gamma_n * h(point)[0] - theta_prev;
  };

  const double h0 = std::abs(g(theta_prev));  // gamma_n * |h(theta_prev)|
  double lo = theta_prev - h0 - 1.0;
  double hi = theta_prev + h0 + 1.0;
  double glo = g(lo);
  double ghi = g(hi);
  double width = hi - lo;
  std::size_t expansions = 0;
  while (glo > 0.0 && expansions < opts.max_expansions) {
    lo -= width;
    width *= 2.0;
    glo = g(lo);
    ++expansions;
  }
  while (ghi < 0.0 && expansions < opts.max_expansions) {
    hi += width;
    width *= 2.0;
    ghi = g(hi);
    ++expansions;
  }
  if (!(glo <= 0.0) || !(ghi >= 0.0)) {
    throw SolverError("implicit step: bracket failure (map not increasing?)",
                      std::min(std::abs(glo), std::abs(ghi)), expansions);
  }

  std::size_t it = 0;
  for (; it < opts.max_bisection; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) {
      lo = hi = mid;
      glo = ghi = 0.0;
      break;
    }
    if (gm < 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  const bool take_lo = std::abs(glo) <= std::abs(ghi);
  const double root = take_lo ? lo : hi;
  const double residual = take_lo ? std::abs(glo) : std::abs(ghi);
  if (!(residual <= opts.tol)) {
    throw SolverError("implicit step: residual above tolerance", residual, it);
  }
  return scalar_vector(root);
}

Vector solve_damped(const Vector& theta_prev, double gamma_n, const std::function<Vector(const Vector&)>& h,
                    const ImplicitSolveOptions& opts) {
  Vector theta = theta_prev;
  Vector h_cur = h(theta);
  Vector r = theta + gamma_n * h_cur - theta_prev;
  double rnorm = r.norm();
  double lipschitz = 0.0;

  for (std::size_t it = 0; it < opts.max_fixed_point; ++it) {
    if (rnorm <= opts.tol) return theta;
    const double damping = 1.0 / (1.0 + gamma_n * lipschitz);
    Vector cand = theta - damping * r;
    Vector h_cand = h(cand);
    const double step = (cand - theta).norm();
    if (step > 0.0) lipschitz = std::max(lipschitz, (h_cand - h_cur).norm() / step);
    Vector r_cand = cand + gamma_n * h_cand - theta_prev;
    const double cand_norm = r_cand.norm();
    if (!(cand_norm < rnorm)) {
      // Overshoot; tighten damping and retry from the same point.
      lipschitz = std::max(2.0 * lipschitz, 1.0 / gamma_n);
      continue;
    }
    theta = std::move(cand);
    h_cur = std::move(h_cand);
    r = std::move(r_cand);
    rnorm = cand_norm;
  }
  if (rnorm <= opts.tol) return theta;

  // Damping alone contracts slowly when gamma_n h is badly conditioned. Polish
  // with Newton steps on r(theta) = theta + gamma_n h(theta) - theta_prev using a
  // forward-difference Jacobian, halving the step until the residual drops.
  const auto p = theta.size();
  for (std::size_t it = 0; it < 50 && rnorm > opts.tol && std::isfinite(rnorm); ++it) {
    Matrix jac = Matrix::Identity(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double eps = 1e-7 * std::max(1.0, std::abs(theta[j]));
      Vector probe = theta;
      probe[j] += eps;
      jac.col(j) += gamma_n * (h(probe) - h_cur) / eps;
    }
    const Vector delta = jac.fullPivLu().solve(-r);
    double t = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      Vector cand = theta + t * delta;
      Vector h_cand = h(cand);
      Vector r_cand = cand + gamma_n * h_cand - theta_prev;
      if (r_cand.norm() < rnorm) {
        theta = std::move(cand);
        h_cur = std::move(h_cand);
        r = std::move(r_cand);
        rnorm = r.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (rnorm <= opts.tol) return theta;
  throw SolverError("implicit step: damped fixed-point iteration did not converge", rnorm,
                    opts.max_fixed_point);
}

}  // namespace

Vector ideal_implicit_step(const Vector& theta_prev, double gamma_n,
                           const std::function<Vector(const Vector&)>& h,
                           const ImplicitSolveOptions& opts) {
  if (!h) throw Error("implicit step requires the exact regression function");
  if (!(opts.tol > 0.0)) throw Error("implicit step: tol must be positive");
  if (gamma_n == 0.0) return theta_prev;
  if (theta_prev.size() == 1) return solve_scalar(theta_prev[0], gamma_n, h, opts);
  return solve_damped(theta_prev, gamma_n, h, opts);
}

Vector ideal_implicit_step(const Vector& theta_prev, double gamma_n,
                           const std::function<Vector(const Vector&)>& h, double tol) {
  ImplicitSolveOptions opts;
  opts.tol = tol;
  return ideal_implicit_step(theta_prev, gamma_n, h, opts);
}

}  // namespace isa
