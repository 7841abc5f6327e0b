#include <Eigen/Dense>
#include <catch_amalgamated.hpp>
#include <cmath>

#include "ivbound/glm.hpp"
#include "ivbound/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ivbound::Error;
using ivbound::ErrorCode;
using ivbound::fit_linear;
using ivbound::fit_logistic;
using ivbound::predict_prob;

namespace {

// binary response with k ones then zeros, intercept-or-saturated designs
VectorXd ones_then_zeros(int n, int k) {
  VectorXd y = VectorXd::Zero(n);
  y.head(k).setOnes();
  return y;
}

}  // namespace

TEST_CASE("intercept-only logistic recovers the log odds") {
  const int n = 201, k = 46;
  const MatrixXd x = MatrixXd::Ones(n, 1);
  const auto fit = fit_logistic(x, ones_then_zeros(n, k));
  REQUIRE(fit.converged);
  REQUIRE(fit.coef(0) == Catch::Approx(std::log(46.0 / 155.0)).margin(1e-8));
}

TEST_CASE("two-cell logistic matches the cell log odds") {
  // 108 rows with x=0 (20 ones), 93 rows with x=1 (26 ones)
  const int n = 201;
  MatrixXd x(n, 2);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const bool second = i >= 108;
    x(i, 0) = 1.0;
    x(i, 1) = second ? 1.0 : 0.0;
    y(i) = second ? (i - 108 < 26 ? 1.0 : 0.0) : (i < 20 ? 1.0 : 0.0);
  }
  const auto fit = fit_logistic(x, y);
  REQUIRE(fit.converged);
  const double b0 = std::log(20.0 / 88.0);
  const double b1 = std::log(26.0 / 67.0) - b0;
  REQUIRE(fit.coef(0) == Catch::Approx(b0).margin(1e-8));
  REQUIRE(fit.coef(1) == Catch::Approx(b1).margin(1e-8));

  VectorXd row(2);
  row << 1.0, 1.0;
  REQUIRE(predict_prob(fit, row) == Catch::Approx(26.0 / 93.0).margin(1e-8));
  row << 1.0, 0.0;
  REQUIRE(predict_prob(fit, row) == Catch::Approx(20.0 / 108.0).margin(1e-8));
}

TEST_CASE("saturated fits reproduce cell proportions") {
  ivbound::SplitMix64 rng(11);
  const int n = 400;
  MatrixXd x(n, 2);
  VectorXd y(n);
  int n1 = 0, k1 = 0, n0 = 0, k0 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_unit() < 0.4 ? 1.0 : 0.0;
    const double resp = rng.next_unit() < (g == 1.0 ? 0.7 : 0.2) ? 1.0 : 0.0;
    x(i, 0) = 1.0;
    x(i, 1) = g;
    y(i) = resp;
    if (g == 1.0) {
      ++n1;
      k1 += resp == 1.0 ? 1 : 0;
    } else {
      ++n0;
      k0 += resp == 1.0 ? 1 : 0;
    }
  }
  const auto fit = fit_logistic(x, y);
  VectorXd row(2);
  row << 1.0, 1.0;
  REQUIRE(predict_prob(fit, row) ==
          Catch::Approx(static_cast<double>(k1) / n1).margin(1e-8));
  row << 1.0, 0.0;
  REQUIRE(predict_prob(fit, row) ==
          Catch::Approx(static_cast<double>(k0) / n0).margin(1e-8));
}

TEST_CASE("logistic score is solved to tolerance and loglik never decreases") {
  ivbound::SplitMix64 rng(202);
  const int n = 500, q = 4;
  MatrixXd x(n, q);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < q; ++j) x(i, j) = rng.next_gauss();
    const double eta = 0.3 - 0.5 * x(i, 1) + 0.25 * x(i, 2);
    y(i) = rng.next_unit() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  const auto fit = fit_logistic(x, y);
  REQUIRE(fit.converged);
  REQUIRE(fit.max_abs_score <= 1e-10);

  VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = 1.0 / (1.0 + std::exp(-x.row(i).dot(fit.coef)));
  const VectorXd score = x.transpose() * (y - p);
  REQUIRE(score.lpNorm<Eigen::Infinity>() / n <= 1e-10);

  for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
    REQUIRE(fit.loglik_trace[t] >=
            fit.loglik_trace[t - 1] - 1e-9 * std::abs(fit.loglik_trace[t - 1]));
  }
}

TEST_CASE("perfect separation is detected") {
  const int n = 40;
  MatrixXd x(n, 2);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i < n / 2 ? 1.0 : 0.0;
    y(i) = x(i, 1);
  }
  REQUIRE_THROWS_MATCHES(
      fit_logistic(x, y), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::SeparationDetected; }));
}

TEST_CASE("rank-deficient designs are rejected") {
  MatrixXd x(6, 2);
  x.col(0).setOnes();
  x.col(1).setOnes();
  const VectorXd y = ones_then_zeros(6, 3);
  REQUIRE_THROWS_MATCHES(
      fit_logistic(x, y), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::RankDeficientDesign; }));
  REQUIRE_THROWS_MATCHES(
      fit_linear(x, y), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::RankDeficientDesign; }));
}

TEST_CASE("constant response gives a pure intercept") {
  MatrixXd x(5, 2);
  x.col(0).setOnes();
  x.col(1) << 1, 2, 3, 4, 5;
  const VectorXd y = VectorXd::Constant(5, 5.0);
  const auto fit = fit_linear(x, y);
  REQUIRE(fit.coef(0) == Catch::Approx(5.0).margin(1e-10));
  REQUIRE(fit.coef(1) == Catch::Approx(0.0).margin(1e-10));
  REQUIRE(fit.residual_sum_squares == Catch::Approx(0.0).margin(1e-18));
}

TEST_CASE("saturated linear design interpolates the four cell means") {
  // cells (a,z) with means 210, 230, 212, 242 and two records each
  MatrixXd x(8, 4);
  VectorXd y(8);
  const double means[2][2] = {{210.0, 212.0}, {230.0, 242.0}};  // [a][z]
  int r = 0;
  for (int a = 0; a < 2; ++a) {
    for (int z = 0; z < 2; ++z) {
      for (int rep = 0; rep < 2; ++rep, ++r) {
        x(r, 0) = 1.0;
        x(r, 1) = z;
        x(r, 2) = a;
        x(r, 3) = a * z;
        y(r) = means[a][z] + (rep == 0 ? -3.0 : 3.0);
      }
    }
  }
  const auto fit = fit_linear(x, y);
  for (int a = 0; a < 2; ++a) {
    for (int z = 0; z < 2; ++z) {
      VectorXd row(4);
      row << 1.0, z, a, a * z;
      REQUIRE(row.dot(fit.coef) == Catch::Approx(means[a][z]).margin(1e-10));
    }
  }
}

TEST_CASE("linear fit matches a normal-equation oracle") {
  ivbound::SplitMix64 rng(77);
  const int n = 300, q = 5;
  MatrixXd x(n, q);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < q; ++j) x(i, j) = rng.next_gauss();
    y(i) = 2.0 + x(i, 1) - 0.5 * x(i, 3) + rng.next_gauss();
  }
  const auto fit = fit_linear(x, y);
  const VectorXd oracle = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  REQUIRE((fit.coef - oracle).lpNorm<Eigen::Infinity>() < 1e-10);

  const VectorXd resid_moment = x.transpose() * (y - x * fit.coef);
  REQUIRE(resid_moment.lpNorm<Eigen::Infinity>() < 1e-8 * n);
}

TEST_CASE("probability predictions are clamped and checked") {
  ivbound::LogisticFit fit;
  fit.coef = VectorXd::Zero(2);
  VectorXd row(2);
  row << 1.0, 3.0;
  REQUIRE(predict_prob(fit, row) == 0.5);

  fit.coef(0) = 50.0;
  row << 1.0, 0.0;
  REQUIRE(predict_prob(fit, row) == 1.0 - 1e-6);
  fit.coef(0) = -50.0;
  REQUIRE(predict_prob(fit, row) == 1e-6);

  VectorXd bad(3);
  bad.setOnes();
  REQUIRE_THROWS_MATCHES(
      predict_prob(fit, bad), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == ErrorCode::DimensionMismatch; }));
}
