#include "isa/solvers.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace isa {

Vector inner_rm(const Vector& theta_prev, double gamma_n, const StochasticOracle& oracle,
                const InnerRmConfig& cfg, RngStream& rng, double guard_bound) {
  cfg.validate();
  if (!oracle.draw) throw Error("inner_rm: oracle has no draw function");
  Vector x = theta_prev;
  for (std::size_t k = 1; k <= cfg.K; ++k) {
    const double a_k = cfg.a1 / static_cast<double>(k);
    const Vector w = oracle.draw(x, rng);
    x -= a_k * (gamma_n * w + x - theta_prev);
    if (!(x.norm() <= guard_bound)) break;
  }
  return x;
}

LambdaSolve solve_lambda(const Vector& theta_prev, double gamma_n, const ScalarField& s, const Vector& u,
                         double tol) {
  if (theta_prev.size() != u.size()) throw Error("solve_lambda: dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw Error("solve_lambda: direction must have unit norm");
  if (!(tol > 0.0)) throw Error("solve_lambda: tol must be positive");

  Vector work = theta_prev;
  const double s0 = s(work);
  if (s0 == 0.0 || gamma_n == 0.0) {
    // s0 = 0: the update vanishes for every lambda. gamma_n = 0: g is (lambda - 1) s0.
    return {1.0, 0.0, 0, LambdaMethod::closed_form};
  }

  const double step = gamma_n * s0;
  auto g = [&](double lambda) {
    work.noalias() = theta_prev - (step * lambda) * u;
    return lambda * s0 - s(work);
  };

  double lo = 0.0;
  double hi = 1.0;
  double glo = g(lo);
  double ghi = g(hi);
  std::size_t expansions = 0;
  if ((glo > 0.0) == (ghi > 0.0) && glo != 0.0 && ghi != 0.0) {
    lo = -2.0;
    hi = 4.0;
    glo = g(lo);
    ghi = g(hi);
    while ((glo > 0.0) == (ghi > 0.0) && glo != 0.0 && ghi != 0.0 && expansions < 60) {
      lo *= 2.0;
      hi *= 2.0;
      glo = g(lo);
      ghi = g(hi);
      ++expansions;
    }
    if ((glo > 0.0) == (ghi > 0.0) && glo != 0.0 && ghi != 0.0) {
      throw SolverError("solve_lambda: no sign change found", std::min(std::abs(glo), std::abs(ghi)),
                        expansions);
    }
  }

  if (glo == 0.0) return {lo, 0.0, 0, LambdaMethod::bisection};
  if (ghi == 0.0) return {hi, 0.0, 0, LambdaMethod::bisection};

  // Illinois regula falsi: the root stays bracketed by [a, b] throughout, and a
  // secant point that lands outside the open bracket is replaced by the midpoint.
  // fa and fb are the (possibly halved) endpoint weights, not true residuals.
  double a = lo;
  double b = hi;
  double fa = glo;
  double fb = ghi;
  double best = std::abs(glo) <= std::abs(ghi) ? lo : hi;
  double best_res = std::min(std::abs(glo), std::abs(ghi));
  const double stop = 1e-4 * tol;
  int side = 0;
  std::size_t it = 0;
  for (; it < 200 && best_res > stop; ++it) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    if (c <= a || c >= b) break;  // bracket exhausted at double precision
    const double fc = g(c);
    if (std::abs(fc) < best_res) {
      best = c;
      best_res = std::abs(fc);
    }
    if (fc == 0.0) break;
    if ((fc > 0.0) == (fb > 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == +1) fb *= 0.5;
      side = +1;
    }
  }
  if (!(best_res <= tol)) throw SolverError("solve_lambda: residual above tolerance", best_res, it);
  return {best, best_res, it, LambdaMethod::bisection};
}

double grid_objective(const Vector& theta_prev, double gamma_n, const Vector& s_obs, const Vector& s_prev,
                      double lambda, const Simulator& simulator, std::size_t k, RngStream rng) {
  const Vector theta = theta_prev + gamma_n * (s_obs - lambda * s_prev);
  const Vector s_new = simulator(theta, k, rng);
  return (lambda * s_prev - s_new).squaredNorm();
}

LambdaSolve grid_lambda(const Vector& theta_prev, double gamma_n, const Vector& s_obs,
                        const Simulator& simulator, std::size_t k, std::size_t m, const RngStream& rng) {
  if (m < 1) throw Error("grid_lambda: m must be at least 1");
  if (k < 1) throw Error("grid_lambda: k must be at least 1");
  RngStream base = rng.substream(0);
  const Vector s_prev = simulator(theta_prev, k, base);

  LambdaSolve best{0.0, std::numeric_limits<double>::infinity(), m + 1, LambdaMethod::grid};
  for (std::size_t j = 0; j <= m; ++j) {
    const double lambda = static_cast<double>(j) / static_cast<double>(m);
    const double obj =
        grid_objective(theta_prev, gamma_n, s_obs, s_prev, lambda, simulator, k, rng.substream(j + 1));
    if (obj < best.residual) {
      best.lambda = lambda;
      best.residual = obj;
    }
  }
  return best;
}

void CovarianceProblem::validate() const {
  const auto p = J.rows();
  if (p == 0 || J.cols() != p) throw Error("covariance problem: J must be square and nonempty");
  if (!(gamma1 > 0.0)) throw Error("covariance problem: gamma1 must be positive");
  if (Xi.size() != 0) {
    if (Xi.rows() != p || Xi.cols() != p) throw Error("covariance problem: Xi shape mismatch");
    if ((Xi - Xi.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Xi.cwiseAbs().maxCoeff())) {
      throw Error("covariance problem: Xi is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(Xi, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + Xi.cwiseAbs().maxCoeff())) {
      throw Error("covariance problem: Xi is not positive semidefinite");
    }
  }
  const Matrix a = gamma1 * J - 0.5 * Matrix::Identity(p, p);
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.eigenvalues().real().minCoeff() <= 0.0) {
    throw Error("stability condition violated: gamma1 J - I/2 is not positive stable");
  }
}

double lyapunov_residual(const CovarianceProblem& prob, const Matrix& sigma, const Matrix& rhs) {
  const auto p = prob.J.rows();
  const Matrix a = prob.gamma1 * prob.J - 0.5 * Matrix::Identity(p, p);
  return (a * sigma + sigma * a.transpose() - rhs).cwiseAbs().maxCoeff();
}

Matrix lyapunov_sigma(const CovarianceProblem& prob, const Matrix& rhs) {
  const auto p = prob.J.rows();
  if (p == 0 || prob.J.cols() != p) throw Error("lyapunov_sigma: J must be square and nonempty");
  if (rhs.rows() != p || rhs.cols() != p) throw Error("lyapunov_sigma: rhs shape mismatch");

  const Matrix a = prob.gamma1 * prob.J - 0.5 * Matrix::Identity(p, p);
  {
    Eigen::EigenSolver<Matrix> es(a, false);
    if (es.eigenvalues().real().minCoeff() <= 0.0) {
      throw Error("stability condition violated: gamma1 J - I/2 is not positive stable");
    }
  }

  // Column-major vec: vec(A S + S A^T) = (I (x) A + A (x) I) vec(S).
  const auto n = p * p;
  Matrix kron = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < p; ++i) {
    kron.block(i * p, i * p, p, p) += a;
    for (Eigen::Index j = 0; j < p; ++j) kron.block(i * p, j * p, p, p).diagonal().array() += a(i, j);
  }
  Eigen::FullPivLU<Matrix> lu(kron);
  if (!lu.isInvertible()) throw Error("stability condition violated: Lyapunov system is singular");

  const Eigen::Map<const Vector> b(rhs.data(), n);
  Vector x = lu.solve(b);
  // One step of iterative refinement.
  x += lu.solve(b - kron * x);
  Matrix sigma = Eigen::Map<Matrix>(x.data(), p, p);
  return 0.5 * (sigma + sigma.transpose());
}

Matrix closed_form_sigma(const CovarianceProblem& prob, const Matrix& rhs) {
  const auto p = prob.J.rows();
  if (p == 0 || prob.J.cols() != p) throw Error("closed_form_sigma: J must be square and nonempty");
  if (rhs.rows() != p || rhs.cols() != p) throw Error("closed_form_sigma: rhs shape mismatch");
  if ((prob.J - prob.J.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      (prob.J * rhs - rhs * prob.J).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error("commutation failure: J must be symmetric and commute with rhs");
  }
  const Matrix m = 2.0 * prob.gamma1 * prob.J - Matrix::Identity(p, p);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw Error("closed_form_sigma: 2 gamma1 J - I is singular");
  return lu.solve(rhs);
}

}  // namespace isa
