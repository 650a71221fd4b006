#include "earlystop/datagen.hpp"
#include "earlystop/regression_tree.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace earlystop;

namespace {

std::vector<std::size_t> all_members(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), 0);
  return m;
}

}  // namespace

TEST_SUITE("regression_tree") {

TEST_CASE("hand split") {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  Vector y(4);
  y << 0, 0, 1, 1;
  const auto s = best_split(x, y, all_members(4));
  REQUIRE(s);
  CHECK(s->coordinate == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->sse == 0.0);

  RegressionTree tree(x, y);
  tree.iterate(3);
  CHECK(tree.residuals()[1] == 0.0);
}

TEST_CASE("degenerate nodes") {
  Matrix one(1, 2);
  one << 0.3, 0.4;
  RegressionTree single(one, Vector::Constant(1, 2.0));
  single.iterate(4);
  CHECK(single.level() == 0);
  CHECK(single.saturated());

  Matrix flat = Matrix::Constant(5, 2, 0.5);
  CHECK_FALSE(best_split(flat, Vector::LinSpaced(5, 0, 1), all_members(5)));
}

TEST_CASE("split optimality against brute force") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = additive_model(AdditiveKind::hills, 40, 0.3, seed);
    const auto members = all_members(40);
    const auto s = best_split(inst.covariates, inst.response, members);
    REQUIRE(s);
    CHECK(s->sse == doctest::Approx(oracle::brute_force_best_sse(inst.covariates, inst.response, members)).epsilon(1e-10));
  }
}

TEST_CASE("pure noise saturates to zero residual") {
  const auto inst = additive_model(AdditiveKind::smooth, 64, 1.0, 3);
  const Vector y = inst.noise;
  RegressionTree tree(inst.covariates, y);
  tree.iterate(64);
  CHECK(tree.saturated());
  CHECK(tree.residuals().back() < 1e-24);
  for (std::size_t m = 1; m < tree.residuals().size(); ++m) CHECK(tree.residuals()[m] <= tree.residuals()[m - 1] + 1e-14);
}

TEST_CASE("projection structure") {
  const auto inst = additive_model(AdditiveKind::step, 200, 1.0, 4);
  RegressionTree tree(inst.covariates, inst.response, inst.true_function_values, inst.noise);
  tree.iterate(6);
  const Vector& y = inst.response;
  for (std::size_t m = 0; m <= tree.level(); ++m) {
    const Vector& f = tree.fitted_values(m);
    CHECK(std::abs(f.dot(y - f)) < 1e-8 * y.squaredNorm());
    double sse = 0.0;
    for (std::size_t id : tree.terminal_nodes(m)) {
      const TreeNode& node = tree.nodes()[id];
      for (std::size_t i : node.members) CHECK(f(i) == doctest::Approx(node.mean));
      sse += oracle::node_sse(y, node.members);
    }
    CHECK(tree.residuals()[m] == doctest::Approx(sse / 200.0));
    CHECK(tree.residuals()[m] == doctest::Approx((y - f).squaredNorm() / 200.0));
    if (m > 0) {
      // nesting: each node at level m refines one node at level m - 1
      const Vector& coarse = tree.fitted_values(m - 1);
      CHECK(std::abs(f.dot(coarse) - coarse.squaredNorm()) < 1e-8 * y.squaredNorm());
      for (std::size_t id : tree.terminal_nodes(m)) CHECK(tree.nodes()[id].depth <= m);
    }
  }
  const auto& b = tree.bias2();
  const auto& v = tree.variance();
  for (std::size_t m = 1; m < v.size(); ++m) CHECK(v[m] >= v[m - 1] - 1e-14);
  CHECK(b[0] == doctest::Approx((inst.true_function_values.array() - inst.true_function_values.mean()).square().sum() / 200.0));
}

TEST_CASE("interpolated path") {
  const auto inst = additive_model(AdditiveKind::smooth, 100, 0.5, 5);
  RegressionTree tree(inst.covariates, inst.response);
  tree.iterate(3);
  for (std::size_t m = 0; m <= 2; ++m) {
    CHECK(tree.residual_at(static_cast<double>(m)) == doctest::Approx(tree.residuals()[m]));
    const double a = 0.3;
    const Vector f = (1 - a) * tree.fitted_values(m) + a * tree.fitted_values(m + 1);
    CHECK(tree.residual_at(m + a) == doctest::Approx((inst.response - f).squaredNorm() / 100.0));
  }
  const double kappa = 0.5 * (tree.residuals()[1] + tree.residuals()[2]);
  const StopIndex plain = tree.discrepancy_stop(kappa, 3);
  const StopIndex smooth = tree.discrepancy_stop(kappa, 3, true);
  CHECK(plain.value == 2.0);
  CHECK(smooth.value > 1.0);
  CHECK(smooth.value < 2.0);
  CHECK(tree.residual_at(smooth.value) == doctest::Approx(kappa));

  // quadratic with equal endpoints and zero cross term crosses at the midpoint
  Matrix x(2, 1);
  x << 0, 1;
  Vector y(2);
  y << -1, 1;
  RegressionTree two(x, y);
  two.iterate(1);
  CHECK(two.residuals()[0] == 1.0);
  CHECK(two.discrepancy_stop(0.25, 1, true).value == doctest::Approx(0.5));
}

TEST_CASE("prediction") {
  const auto inst = additive_model(AdditiveKind::linear, 80, 0.2, 6);
  RegressionTree tree(inst.covariates, inst.response);
  tree.iterate(4);
  const Vector at0 = tree.predict(0.0, inst.covariates);
  CHECK((at0.array() - inst.response.mean()).abs().maxCoeff() < 1e-12);
  for (std::size_t m = 1; m <= 4; ++m)
    CHECK((tree.predict(static_cast<double>(m), inst.covariates) - tree.fitted_values(m)).norm() < 1e-10);
  const auto test = additive_model(AdditiveKind::linear, 30, 0.2, 7);
  const Vector p1 = tree.predict(1.0, test.covariates);
  const Vector p2 = tree.predict(2.0, test.covariates);
  CHECK((tree.predict(1.25, test.covariates) - (0.75 * p1 + 0.25 * p2)).norm() < 1e-12);
}

TEST_CASE("balanced oracle") {
  const auto inst = additive_model(AdditiveKind::smooth, 100, 1.0, 8);
  RegressionTree zero(inst.covariates, inst.noise, Vector(Vector::Zero(100)), inst.noise);
  CHECK(zero.balanced_oracle(10).value == 0.0);

  RegressionTree tree(inst.covariates, inst.response, inst.true_function_values, inst.noise);
  const StopIndex s = tree.balanced_oracle(20);
  REQUIRE(s.reached);
  const std::size_t m = s.floor();
  CHECK(tree.bias2()[m] <= tree.variance()[m]);
  if (m > 0) CHECK(tree.bias2()[m - 1] > tree.variance()[m - 1]);
}

}
