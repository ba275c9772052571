#include <cmath>
#include <numbers>

#include "doctest.h"

#include "isa/models.hpp"

using namespace isa;
using namespace isa::models;

TEST_CASE("LMS step examples") {
  CHECK(normal_linear_explicit_step(0, 1, 1, 1) == 1.0);
  CHECK(normal_linear_explicit_step(1, 1, 1, 1) == 1.0);
  const double t1 = normal_linear_explicit_step(0, 10, 1, 1);
  CHECK(t1 == 10.0);
  CHECK(normal_linear_explicit_step(t1, 5, 1, 1) == -35.0);
  // x = 0 is the identity.
  CHECK(normal_linear_explicit_step(3.5, 7, 0, 2) == 3.5);
}

TEST_CASE("NLMS step examples") {
  CHECK(normal_linear_implicit_step(0, 1, 1, 1) == 0.5);
  CHECK(normal_linear_implicit_step(1, 1000, 1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(normal_linear_implicit_step(0, 1e6, 1, 1) - 1.0) < 1e-5);
  CHECK(normal_linear_implicit_step(3.5, 7, 0, 2) == 3.5);
}

TEST_CASE("property: NLMS is a convex combination of theta_prev and y/x") {
  RngStream r(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double tp = 10 * r.normal(), x = r.normal(), y = 3 * r.normal();
    const double g = std::pow(10.0, 8 * r.uniform() - 4);
    const double w = 1.0 / (1.0 + g * x * x);
    const double target = y / x;
    const double out = normal_linear_implicit_step(tp, g, x, y);
    const double scale = 1.0 + std::abs(tp) + std::abs(target);
    REQUIRE(std::abs(out - (w * tp + (1 - w) * target)) <= 1e-12 * scale);
    REQUIRE(out >= std::min(tp, target) - 1e-12 * scale);
    REQUIRE(out <= std::max(tp, target) + 1e-12 * scale);
  }
}

TEST_CASE("property: LMS and NLMS differ at second order in gamma") {
  RngStream r(2, 0);
  for (int i = 0; i < 100; ++i) {
    const double tp = r.normal(), x = r.normal(), y = r.normal();
    if (std::abs(x) < 0.1 || std::abs(y - x * tp) < 0.1) continue;
    double prev = 0.0;
    for (const double g : {1e-2, 1e-3, 1e-4}) {
      const double diff = std::abs(normal_linear_explicit_step(tp, g, x, y) - normal_linear_implicit_step(tp, g, x, y));
      // Exact difference: g^2 x^3 (y - x tp) / (1 + g x^2).
      const double c = std::abs(x * x * x * (y - x * tp));
      CHECK(diff == doctest::Approx(g * g * c / (1 + g * x * x)).epsilon(1e-6));
      if (prev > 0.0) CHECK(prev / diff == doctest::Approx(100.0).epsilon(0.05));
      prev = diff;
    }
  }
}

TEST_CASE("normal linear stream and oracles") {
  NormalLinearStream s;
  s.noise_sd = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s.noise_sd = 0.0;
  s.theta_star = 2.0;
  s.x_fixed = 3.0;
  RngStream r(1, 0);
  const auto p = s.draw(r);
  CHECK(p.x == 3.0);
  CHECK(p.y == 6.0);
  CHECK(r.counter() == 0);  // noiseless, fixed x: no draws

  // Factorised draw reproduces W = -(y - x theta) x with |u| = 1.
  const DataPoint d{-2.0, 1.0};
  const auto f = normal_linear_factorized(d);
  CHECK(f.u[0] == -1.0);
  CHECK(f.s(scalar_vector(0.5)) * f.u[0] == doctest::Approx(-(1.0 - (-2.0) * 0.5) * -2.0));
  CHECK(normal_linear_factorized(DataPoint{0.0, 1.0}).u[0] == 1.0);

  // Dataset oracle: exact_h is the empirical regression function.
  std::vector<DataPoint> data{{1.0, 2.0}, {2.0, 3.0}, {-1.0, 0.0}};
  const auto o = normal_linear_dataset_oracle(data);
  // E[x^2] = 2, E[xy] = (2 + 6 + 0)/3 = 8/3 -> h(t) = 2 t - 8/3.
  CHECK(o.exact_h(scalar_vector(1.0))[0] == doctest::Approx(2.0 - 8.0 / 3.0));
  RngStream rr(4, 0);
  double sum = 0;
  const int n = 300000;
  for (int i = 0; i < n; ++i) sum += o.draw(scalar_vector(1.0), rr)[0];
  CHECK(std::abs(sum / n - (2.0 - 8.0 / 3.0)) < 0.01);
  CHECK_THROWS_AS(normal_linear_dataset_oracle({}), Error);
}

TEST_CASE("standard normal CDF and quantile oracle") {
  CHECK(standard_normal_cdf(0.0) == 0.5);
  // Reference values of Phi.
  CHECK(std::abs(standard_normal_cdf(1.0) - 0.8413447460685429) < 1e-12);
  CHECK(std::abs(standard_normal_cdf(-3.0) - 0.0013498980316300946) < 1e-12);
  const auto q = QuantileOracle::standard_normal(0.999);
  CHECK(std::abs(q.theta_star - 3.090232306167813) < 1e-8);
  CHECK(std::abs(q.cdf(q.theta_star) - 0.999) <= 1e-9);
  CHECK_THROWS_AS(QuantileOracle::standard_normal(1.0), Error);
  CHECK_THROWS_AS(QuantileOracle::standard_normal(0.0), Error);
}

TEST_CASE("quantile_query range and mean") {
  const auto q = QuantileOracle::standard_normal(0.999);
  RngStream r(8, 0);
  const int n = 1000000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double w = quantile_query(q, 3.09, r);
    REQUIRE((w == 1.0 - 0.999 || w == -0.999));
    sum += w;
  }
  const double mean = sum / n;
  const double exact = standard_normal_cdf(3.09) - 0.999;
  const double se = std::sqrt(0.999 * 0.001 / n);
  CHECK(std::abs(mean - exact) < 3 * se);

  const auto half = QuantileOracle::standard_normal(0.5);
  for (int i = 0; i < 100; ++i) CHECK(quantile_query(half, 1e300, r) == 0.5);

  // Z <= theta yields 1 - alpha.
  QuantileOracle fixed = q;
  fixed.sampler = [](RngStream&) { return 0.0; };
  CHECK(quantile_query(fixed, 0.0, r) == doctest::Approx(0.001));
}

TEST_CASE("expfam_mean examples and monotonicity") {
  CHECK(expfam_mean(0.0) == 0.5);
  CHECK(std::abs(expfam_mean(40.0) - 1.0) < 1e-12);
  CHECK(expfam_mean(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(expfam_mean(-800.0) == 0.0);
  CHECK(expfam_mean(800.0) == 1.0);
  double prev = expfam_mean(-30.0);
  for (double t = -29.9; t < 30.0; t += 0.1) {
    const double m = expfam_mean(t);
    REQUIRE(m > prev);
    prev = m;
  }
  for (const double mu : {0.1, 0.5, 0.75, 0.99}) CHECK(expfam_mean(expfam_mean_inverse(mu)) == doctest::Approx(mu));
  CHECK_THROWS_AS(expfam_mean_inverse(1.0), Error);
}

TEST_CASE("expfam_simulate_stat examples") {
  RngStream r(1, 0);
  CHECK(expfam_simulate_stat(-40.0, 1000, r) == 0.0);
  CHECK(std::abs(expfam_simulate_stat(0.0, 1000000, r) - 0.5) < 0.002);
  RngStream a(5, 6), b(5, 6);
  CHECK(expfam_simulate_stat(0.3, 77, a) == expfam_simulate_stat(0.3, 77, b));
  CHECK_THROWS_AS(expfam_simulate_stat(0.0, 0, r), Error);
}

TEST_CASE("property: expfam_simulate_stat is unbiased") {
  RngStream r(3, 0);
  for (const double theta : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    const int reps = 20000;
    const std::size_t k = 10;
    double sum = 0;
    for (int i = 0; i < reps; ++i) sum += expfam_simulate_stat(theta, k, r);
    const double p = expfam_mean(theta);
    const double se = std::sqrt(p * (1 - p) / (reps * static_cast<double>(k)));
    CHECK(std::abs(sum / reps - p) < 4 * se);
  }
}

TEST_CASE("simulators and dataset") {
  RngStream r(1, 0);
  const auto exact = expfam_exact_simulator();
  CHECK(exact(scalar_vector(std::log(3.0)), 5, r)[0] == doctest::Approx(0.75));
  const auto data = expfam_dataset(0.0, 4000, r);
  double mean = 0;
  for (const double s : data) {
    REQUIRE((s == 0.0 || s == 1.0));
    mean += s;
  }
  CHECK(std::abs(mean / 4000 - 0.5) < 0.04);
}

TEST_CASE("logistic model") {
  RngStream r(12, 0);
  const auto data = logistic_dataset(1.0, 2000, r);
  const double mle = logistic_mle(data);
  CHECK(std::abs(mle - 1.0) < 0.25);
  const auto o = logistic_oracle(data);
  CHECK(std::abs(o.exact_h(scalar_vector(mle))[0]) < 1e-10);
  // The MLE minimises the potential.
  for (const double d : {-0.1, -1e-3, 1e-3, 0.1}) CHECK(logistic_potential(data, mle + d) > logistic_potential(data, mle));
  // Potential derivative equals exact_h (central difference).
  const double t = 0.3, eps = 1e-5;
  const double fd = (logistic_potential(data, t + eps) - logistic_potential(data, t - eps)) / (2 * eps);
  CHECK(fd == doctest::Approx(o.exact_h(scalar_vector(t))[0]).epsilon(1e-6));
  // Factorised draw equals the plain draw on the same stream.
  RngStream a(1, 1), b(1, 1);
  const auto fdraw = o.draw_factorized(a);
  CHECK(fdraw.s(scalar_vector(t)) * fdraw.u[0] == doctest::Approx(o.draw(scalar_vector(t), b)[0]));

  std::vector<DataPoint> separable{{1.0, 1.0}, {2.0, 1.0}, {-1.0, 0.0}};
  CHECK_THROWS_AS(logistic_mle(separable), Error);
}

TEST_CASE("linear gaussian oracle") {
  Matrix J(2, 2);
  J << 2, 0.5, 0.5, 1;
  Vector ts(2);
  ts << 1, -1;
  Vector sd(2);
  sd << 0.0, 0.0;
  const auto o = linear_gaussian_oracle(J, ts, sd);
  RngStream r(1, 0);
  CHECK(o.draw(ts, r).norm() == 0.0);
  CHECK(o.exact_h(Vector::Zero(2)).isApprox(-J * ts));
  CHECK_THROWS_AS(linear_gaussian_oracle(J, ts, Vector::Zero(3)), Error);
}
