#include "earlystop/datagen.hpp"
#include "earlystop/errors.hpp"
#include "earlystop/l2_boost.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace earlystop;

namespace {

Matrix orthonormal_columns(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  const Matrix g = gaussian_design(static_cast<std::size_t>(n), static_cast<std::size_t>(p), seed);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(n, p);
}

}  // namespace

TEST_SUITE("l2_boost") {

TEST_CASE("orthonormal design selects by correlation") {
  const Matrix x = orthonormal_columns(40, 8, 1);
  const Vector y = gaussian_noise(40, 1.0, 2);
  L2Boost boost(x, y);
  boost.iterate(8);
  std::vector<std::size_t> order(8);
  std::iota(order.begin(), order.end(), 0);
  const Vector c = (x.transpose() * y).cwiseAbs();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c(a) > c(b); });
  CHECK(boost.selected() == order);
  for (std::size_t m = 0; m <= 8; ++m) {
    const std::vector<std::size_t> cols(order.begin(), order.begin() + m);
    const Vector ls = m == 0 ? Vector::Zero(40) : oracle::least_squares_fit(x, y, cols);
    CHECK((boost.fitted_values(m) - ls).norm() < 1e-8);
  }
}

TEST_CASE("general design matches brute force least squares") {
  const Matrix x = gaussian_design(30, 12, 3);
  const Vector y = gaussian_noise(30, 1.0, 4) + x.col(3) - 2 * x.col(7);
  L2Boost boost(x, y);
  boost.iterate(6);
  for (std::size_t m = 1; m <= 6; ++m) {
    const std::vector<std::size_t> cols(boost.selected().begin(), boost.selected().begin() + m);
    const Vector fit = oracle::least_squares_fit(x, y, cols);
    CHECK((boost.fitted_values(m) - fit).norm() < 1e-8);
    CHECK(std::abs(boost.residuals()[m] - (y - fit).squaredNorm() / 30.0) < 1e-10);
    const Vector coef = boost.coefficients(m);
    CHECK((x * coef - fit).norm() < 1e-8);
  }
  CHECK(boost.selected()[0] == 7);
}

TEST_CASE("full rank fit interpolates and no column repeats") {
  const Matrix x = gaussian_design(15, 20, 5);
  const Vector y = gaussian_noise(15, 1.0, 6);
  L2Boost boost(x, y);
  boost.iterate(15);
  CHECK(boost.iteration() == 15);
  CHECK(boost.residuals().back() < 1e-20);
  const std::set<std::size_t> unique(boost.selected().begin(), boost.selected().end());
  CHECK(unique.size() == boost.selected().size());
  for (std::size_t m = 1; m < boost.residuals().size(); ++m)
    CHECK(boost.residuals()[m] <= boost.residuals()[m - 1] + 1e-14);
}

TEST_CASE("dependent columns are skipped") {
  Matrix x = gaussian_design(20, 3, 7);
  x.col(1) = 2.0 * x.col(0);
  const Vector y = x.col(0) + 0.5 * x.col(2);
  L2Boost boost(x, y);
  boost.iterate(3);
  CHECK(boost.iteration() == 2);
  CHECK(boost.residuals().back() < 1e-20);
  const auto& s = boost.selected();
  CHECK(std::count(s.begin(), s.end(), 1) + std::count(s.begin(), s.end(), 0) == 1);
}

TEST_CASE("projection properties") {
  const Matrix x = gaussian_design(50, 30, 8);
  const Vector y = gaussian_noise(50, 1.0, 9);
  L2Boost boost(x, y);
  boost.iterate(10);
  for (std::size_t m = 1; m <= 10; ++m) {
    const Vector f = boost.fitted_values(m);
    const Vector r = y - f;
    CHECK(std::abs(f.dot(r)) < 1e-8 * y.squaredNorm());
    CHECK(std::abs(y.squaredNorm() - f.squaredNorm() - r.squaredNorm()) < 1e-8 * y.squaredNorm());
    for (std::size_t k = 0; k < m; ++k) CHECK(std::abs(x.col(boost.selected()[k]).dot(r)) < 1e-8 * x.norm() * y.norm());
  }
}

TEST_CASE("bias and stochastic tracks") {
  const Matrix x = gaussian_design(60, 40, 10);
  const Vector beta = gamma_sparse_signal(40, 3.0);
  const auto inst = linear_model(x, beta, 0.5, 11);
  L2Boost boost(inst.covariates, inst.response, beta);
  boost.iterate(12);
  const Vector f = x * beta;
  const Vector eps = inst.response - f;
  const auto risk = boost.risk();
  for (std::size_t m = 0; m <= 12; ++m) {
    const Vector fit = boost.fitted_values(m);
    CHECK(std::abs(risk[m] - (fit - f).squaredNorm() / 60.0) < 1e-10);
    CHECK(risk[m] == doctest::Approx(boost.bias2()[m] + boost.stochastic_error()[m]));
    if (m > 0) {
      CHECK(boost.bias2()[m] <= boost.bias2()[m - 1] + 1e-14);
      CHECK(boost.stochastic_error()[m] >= boost.stochastic_error()[m - 1] - 1e-14);
    }
  }
  CHECK(boost.bias2()[0] == doctest::Approx(f.squaredNorm() / 60.0));
  CHECK(boost.stochastic_error()[0] == 0.0);

  L2Boost zero(inst.covariates, eps, Vector(Vector::Zero(40)));
  zero.iterate(5);
  for (double b : zero.bias2()) CHECK(b == doctest::Approx(0.0));
  CHECK(zero.balanced_oracle(5).value == 0.0);

  L2Boost blind(inst.covariates, inst.response);
  CHECK_THROWS_AS(blind.bias2(), OracleUnavailable);
}

TEST_CASE("scaled lasso noise estimate") {
  const Matrix x = gaussian_design(200, 100, 12);
  const Vector noise = gaussian_noise(200, 1.0, 13);
  const NoiseEstimate pure = scaled_lasso(x, noise);
  CHECK(pure.sigma_hat2 > 0.8);
  CHECK(pure.sigma_hat2 < 1.2);

  CHECK(scaled_lasso(x, Vector::Zero(200)).sigma_hat2 == 0.0);

  Vector beta = Vector::Zero(100);
  beta(2) = 3;
  beta(40) = -2;
  const Vector y = x * beta;
  const NoiseEstimate clean = scaled_lasso(x, y);
  CHECK(clean.sigma_hat2 < 0.05 * y.squaredNorm() / 200.0);
  CHECK(clean.iterations_used <= 50);
}

TEST_CASE("stopping rules") {
  const Matrix x = orthonormal_columns(100, 5, 14) * 10.0;
  const Vector y = gaussian_noise(100, 1.0, 15);
  L2Boost boost(x, y);
  boost.iterate(5);
  const double r0 = boost.residuals()[0];
  CHECK(boost.discrepancy_stop(r0, 5).value == 0.0);
  const StopIndex s = boost.discrepancy_stop(boost.residuals()[3], 5);
  CHECK(s.value == 3.0);
  CHECK(s.reached);
  CHECK_FALSE(boost.discrepancy_stop(0.0, 5).reached);
  CHECK_THROWS_AS(boost.discrepancy_stop(-1.0, 5), InvalidArgument);

  // pure noise with few columns: residuals barely move, ratio rule stops at once
  CHECK(boost.residual_ratio_stop(5).value == 0.0);

  const double sigma2 = boost.noise_estimate().sigma_hat2;
  const double pen = 2.0 * sigma2 * std::log(5.0) / 100.0;
  std::size_t best = 0;
  for (std::size_t m = 1; m <= 5; ++m)
    if (boost.residuals()[m] + pen * m < boost.residuals()[best] + pen * best) best = m;
  CHECK(boost.aic_iteration(5) == best);

  const StopIndex a = boost.adaptive_discrepancy_stop(5, 0.0);
  const StopIndex c = boost.discrepancy_stop(sigma2, 5);
  CHECK(a.value == c.value);
  CHECK(boost.adaptive_discrepancy_stop(5).value <= c.value);
}

TEST_CASE("aic toy sequence") {
  // residuals 1.0, 0.2, 0.19 with penalty 0.05 per step favour one step
  Matrix x = Matrix::Zero(4, 2);
  x(0, 0) = 1;
  x(1, 1) = 1;
  Vector y(4);
  y << std::sqrt(3.2), std::sqrt(0.04), std::sqrt(0.38), std::sqrt(0.38);
  L2Boost boost(x, y);
  boost.iterate(2);
  REQUIRE(boost.residuals()[0] == doctest::Approx(1.0));
  REQUIRE(boost.residuals()[1] == doctest::Approx(0.2));
  REQUIRE(boost.residuals()[2] == doctest::Approx(0.19));
  const double sigma2 = boost.noise_estimate().sigma_hat2;
  REQUIRE(sigma2 > 0.0);
  const double K = 0.05 * 4.0 / (sigma2 * std::log(2.0));
  CHECK(boost.aic_iteration(2, K) == 1);
}

}
