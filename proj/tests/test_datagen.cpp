#include "earlystop/datagen.hpp"
#include "earlystop/errors.hpp"
#include "earlystop/regression_tree.hpp"
#include "earlystop/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace earlystop;

namespace {

double phi(double t) { return std::abs(t) < 3.0 ? 1.0 + std::cos(std::numbers::pi * t / 3.0) : 0.0; }

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("rng is deterministic and roughly standard normal") {
  CounterRng a(42, 1), b(42, 1), c(42, 2);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  CounterRng g(7, 1);
  double sum = 0, sum2 = 0;
  const int count = 200000;
  for (int i = 0; i < count; ++i) {
    const double z = g.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / count) < 0.01);
  CHECK(std::abs(sum2 / count - 1.0) < 0.02);
}

TEST_CASE("diagonal problem") {
  const auto big = diagonal_problem(10000, SignalKind::smooth, 0.01, 3);
  CHECK(big.true_signal[0] == doctest::Approx(49.9992).epsilon(1e-6));
  CHECK(big.design.lambda()[3] == doctest::Approx(0.5));
  CHECK((big.response - big.design.apply(big.true_signal) - big.noise).norm() < 1e-12);

  const auto tiny = diagonal_problem(3, SignalKind::smooth, 0.0, 1);
  for (Eigen::Index j = 0; j < 3; ++j)
    CHECK(tiny.response[j] == tiny.design.lambda()[j] * tiny.true_signal[j]);

  const auto again = diagonal_problem(10000, SignalKind::smooth, 0.01, 3);
  CHECK((again.response - big.response).norm() == 0.0);
}

TEST_CASE("noise scale follows delta") {
  const Vector e = gaussian_noise(20000, 0.5, 9);
  CHECK(std::sqrt(e.squaredNorm() / 20000.0) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("phillips") {
  CHECK_THROWS_AS(phillips(10), InvalidArgument);
  const auto small = phillips(8);
  const Matrix& a8 = small.design.entries();
  CHECK((a8 - a8.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  const auto p = phillips(100);
  const double h = 0.12;
  for (Eigen::Index i = 0; i < 100; ++i) {
    const double lo = -6.0 + static_cast<double>(i) * h;
    if (lo + h <= -3.0 || lo >= 3.0) CHECK(p.true_signal[i] == 0.0);
  }

  // composite midpoint quadrature of (1/h) * int int phi(s - t) over two cells
  const Matrix& a = p.design.entries();
  const int q = 200;
  for (Eigen::Index k = 0; k < 100; k += 7) {
    double acc = 0;
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v) {
        const double s = (u + 0.5) * h / q;
        const double t = static_cast<double>(k) * h + (v + 0.5) * h / q;
        acc += phi(s - t);
      }
    const double quad = acc * (h / q) * (h / q) / h;
    CHECK(std::abs(a(0, k) - quad) < 1e-6);
    if (k + 5 < 100) CHECK(a(5, 5 + k) == a(0, k));
  }
  for (Eigen::Index i = 0; i < 100; i += 9) {
    double acc = 0;
    for (int u = 0; u < 2000; ++u) acc += phi(-6.0 + static_cast<double>(i) * h + (u + 0.5) * h / 2000);
    CHECK(std::abs(p.true_signal[i] - acc * (h / 2000) / std::sqrt(h)) < 1e-6);
  }
}

TEST_CASE("gravity") {
  const auto g2 = gravity(2);
  CHECK(g2.design.entries().minCoeff() > 0.0);

  const auto g10 = gravity(10);
  const double h = 0.1, d = 0.25;
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double s = (i + 0.5) * h, t = (j + 0.5) * h;
      const double expected = h * d / std::pow(d * d + (s - t) * (s - t), 1.5);
      CHECK(std::abs(g10.design.entries()(i, j) - expected) < 1e-14);
    }
  for (Eigen::Index j = 0; j < 10; ++j) {
    const double t = (j + 0.5) * h;
    CHECK(g10.true_signal[j] == doctest::Approx(std::sin(std::numbers::pi * t) + 0.5 * std::sin(2 * std::numbers::pi * t)));
  }

  const auto cond = [](const Matrix& m) {
    const auto sv = oracle::singular_values(m);
    return sv.front() / sv.back();
  };
  CHECK(cond(gravity(100).design.entries()) > cond(g10.design.entries()));
}

TEST_CASE("sparse signals") {
  CHECK(gamma_sparse_signal(1, 2.0)[0] == doctest::Approx(10.0));
  CHECK(gamma_sparse_signal(1000, 3.0).lpNorm<1>() == doctest::Approx(10.0).epsilon(1e-12));
  const Vector harmonic = gamma_sparse_signal(4, 1.0);
  const double total = 1 + 0.5 + 1.0 / 3 + 0.25;
  for (int j = 0; j < 4; ++j) CHECK(harmonic[j] == doctest::Approx(10.0 / (j + 1) / total));

  CHECK(s_sparse_signal(5, 5, 1.0) == Vector::Ones(5));
  CHECK_THROWS_AS(s_sparse_signal(5, 0, 1.0), InvalidArgument);
  const Vector s15 = s_sparse_signal(1000, 15, 10.0 / 15);
  CHECK(s15.lpNorm<1>() == doctest::Approx(10.0));
  CHECK(s15[14] > 0.0);
  CHECK(s15[15] == 0.0);
}

TEST_CASE("gaussian design") {
  CHECK(gaussian_design(2, 2, 5) == gaussian_design(2, 2, 5));
  const Matrix big = gaussian_design(1000, 1000, 1);
  for (Eigen::Index j = 0; j < big.cols(); ++j) {
    const double mean = big.col(j).mean();
    const double var = (big.col(j).array() - mean).square().sum() / 999.0;
    CHECK(var > 0.8);
    CHECK(var < 1.2);
  }
  const Matrix two = gaussian_design(1000, 2, 2);
  const Vector c0 = two.col(0).array() - two.col(0).mean();
  const Vector c1 = two.col(1).array() - two.col(1).mean();
  CHECK(std::abs(c0.dot(c1) / (c0.norm() * c1.norm())) < 0.1);
}

TEST_CASE("additive models") {
  for (AdditiveKind kind : {AdditiveKind::smooth, AdditiveKind::step, AdditiveKind::linear, AdditiveKind::hills}) {
    const auto one = additive_model(kind, 1, 1.0, 3);
    CHECK(one.covariates.rows() == 1);
    CHECK(one.covariates.cols() == 30);
    CHECK(one.response.size() == 1);

    const auto inst = additive_model(kind, 2000, 0.5, 4);
    CHECK(inst.covariates.minCoeff() > -2.5);
    CHECK(inst.covariates.maxCoeff() < 2.5);
    const Vector e = inst.response - inst.true_function_values;
    CHECK(std::abs(e.mean()) < 4 * 0.5 / std::sqrt(2000.0));

    const auto& g = additive_components(kind);
    for (const auto& gj : g) {
      double peak = 0;
      for (int i = 0; i < 10000; ++i) peak = std::max(peak, std::abs(gj(-2.5 + 5.0 * (i + 0.5) / 10000)));
      CHECK(peak == doctest::Approx(2.0).epsilon(0.02));
    }
  }

  const auto& step = additive_components(AdditiveKind::step);
  for (const auto& gj : step) {
    std::set<double> values;
    for (int i = 0; i < 10000; ++i) values.insert(gj(-2.5 + 5.0 * (i + 0.5) / 10000));
    CHECK(values.size() < 10);
  }

  // noiseless smooth model: a deep tree explains far more than the noise floor
  const auto clean = additive_model(AdditiveKind::smooth, 500, 0.0, 8);
  RegressionTree tree(clean.covariates, clean.response);
  tree.iterate(30);
  CHECK(tree.residuals().back() < 1.0);
}

TEST_CASE("generator names round trip") {
  for (auto kind : {SignalKind::supersmooth, SignalKind::smooth, SignalKind::rough})
    CHECK(parse_signal_kind(to_string(kind)) == kind);
  for (auto kind : {AdditiveKind::smooth, AdditiveKind::step, AdditiveKind::linear, AdditiveKind::hills})
    CHECK(parse_additive_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_signal_kind("jagged"), InvalidArgument);
}

}
