#include "earlystop/datagen.hpp"
#include "earlystop/errors.hpp"
#include "earlystop/simulation.hpp"
#include "earlystop/truncated_svd.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace earlystop;

namespace {

SimulationParameters tsvd_params(std::size_t runs, std::size_t cores) {
  const auto problem = diagonal_problem(500, SignalKind::smooth, 0.0, 0);
  SimulationParameters p;
  p.estimator = EstimatorKind::tsvd;
  p.setup = InverseSetup{problem.design, problem.true_signal, 0.01};
  p.monte_carlo_runs = runs;
  p.cores = cores;
  p.max_iteration = 500;
  p.base_seed = 42;
  return p;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("quartiles") {
  const Quartiles q = quartiles({0.5, 1.0, 0.75});
  CHECK(q.median == 0.75);
  CHECK(q.q1 == doctest::Approx(0.625));
  CHECK(q.q3 == doctest::Approx(0.875));
  const Quartiles even = quartiles({4, 1, 3, 2, std::numeric_limits<double>::quiet_NaN()});
  CHECK(even.median == 2.5);
  CHECK(even.q1 == 1.75);
  CHECK(std::isnan(quartiles({}).median));
}

TEST_CASE("names") {
  for (auto r : {StopRule::discrepancy, StopRule::two_step, StopRule::residual_ratio, StopRule::residual_ratio_two_step,
                 StopRule::adaptive_discrepancy})
    CHECK(parse_stop_rule(to_string(r)) == r);
  for (auto e : {EstimatorKind::tsvd, EstimatorKind::landweber, EstimatorKind::cg, EstimatorKind::boost,
                 EstimatorKind::tree})
    CHECK(parse_estimator_kind(to_string(e)) == e);
  CHECK_THROWS_AS(parse_stop_rule("nope"), InvalidArgument);
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(316) == "316");
}

TEST_CASE("validation") {
  SimulationParameters p;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = tsvd_params(0, 1);
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = tsvd_params(2, 0);
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = tsvd_params(2, 1);
  p.estimator = EstimatorKind::boost;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.estimator = EstimatorKind::tsvd;
  p.rule = StopRule::residual_ratio;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("records are deterministic and independent of cores") {
  const auto one = run(tsvd_params(12, 1));
  const auto four = run(tsvd_params(12, 4));
  REQUIRE(one.size() == 12);
  REQUIRE(four.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(one[i].replication_id == i);
    CHECK(one[i].seed == 42 + i);
    CHECK(same(one[i].stop_value, four[i].stop_value));
    CHECK(same(one[i].error_at_stop_strong, four[i].error_at_stop_strong));
    CHECK(same(one[i].relative_efficiency_weak, four[i].relative_efficiency_weak));
    CHECK(one[i].error.empty());
    CHECK(one[i].relative_efficiency_weak > 0.0);
    CHECK(one[i].relative_efficiency_weak <= 1.0);
    CHECK(one[i].relative_efficiency_strong <= 1.0);
  }
  std::ostringstream a, b;
  write_records_csv(a, one, {{"estimator", "tsvd"}});
  write_records_csv(b, four, {{"estimator", "tsvd"}});
  CHECK(a.str() == b.str());
  CHECK(a.str().find("# estimator=tsvd\n") != std::string::npos);
  CHECK(a.str().rfind("# ", 0) == 0);
  CHECK(a.str().find("wall_time") == std::string::npos);
}

TEST_CASE("a replication matches a direct computation") {
  const auto params = tsvd_params(1, 1);
  const auto rec = run(params).front();
  const auto& setup = std::get<InverseSetup>(params.setup);
  const auto inst = make_inverse_problem(setup.design, setup.true_signal, 0.01, 42);
  TruncatedSvd est(inst.design, inst.response, inst.true_signal);
  const StopIndex s = est.discrepancy_stop(500 * 1e-4, 500);
  CHECK(rec.stop_value == s.value);
  CHECK(rec.error_at_stop_strong == doctest::Approx(est.strong_empirical_error()[s.floor()]));
}

TEST_CASE("aggregation") {
  auto records = run(tsvd_params(9, 2));
  const auto rows = aggregate(records);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs == 9);
  CHECK(rows[0].failures == 0);
  std::vector<double> stops;
  for (const auto& r : records) stops.push_back(r.stop_value);
  CHECK(rows[0].stop_value.median == quartiles(stops).median);
  CHECK(rows[0].expected_efficiency_weak > 0.0);
  CHECK(rows[0].expected_efficiency_weak <= 1.0);

  std::ostringstream out;
  write_summary_csv(out, rows);
  CHECK(out.str().find("tsvd") != std::string::npos);
}

TEST_CASE("two step never exceeds the discrepancy stop") {
  auto p = tsvd_params(6, 2);
  const auto plain = run(p);
  p.rule = StopRule::two_step;
  const auto two = run(p);
  for (std::size_t i = 0; i < 6; ++i) CHECK(two[i].stop_value <= plain[i].stop_value);
}

}
