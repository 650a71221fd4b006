#include "earlystop/simulation.hpp"

#include "earlystop/conjugate_gradients.hpp"
#include "earlystop/errors.hpp"
#include "earlystop/l2_boost.hpp"
#include "earlystop/landweber.hpp"
#include "earlystop/regression_tree.hpp"
#include "earlystop/rng.hpp"
#include "earlystop/truncated_svd.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <thread>

namespace earlystop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct NamedKind {
  std::string_view name;
  EstimatorKind kind;
};
constexpr NamedKind kEstimators[] = {{"tsvd", EstimatorKind::tsvd},
                                     {"landweber", EstimatorKind::landweber},
                                     {"cg", EstimatorKind::cg},
                                     {"boost", EstimatorKind::boost},
                                     {"tree", EstimatorKind::tree}};

struct NamedRule {
  std::string_view name;
  StopRule rule;
};
constexpr NamedRule kRules[] = {{"dp", StopRule::discrepancy},
                                {"dp2step", StopRule::two_step},
                                {"rr", StopRule::residual_ratio},
                                {"rr2step", StopRule::residual_ratio_two_step},
                                {"dpm", StopRule::adaptive_discrepancy}};

}  // namespace

EstimatorKind parse_estimator_kind(std::string_view name) {
  for (const auto& e : kEstimators)
    if (e.name == name) return e.kind;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

StopRule parse_stop_rule(std::string_view name) {
  for (const auto& r : kRules)
    if (r.name == name) return r.rule;
  throw InvalidArgument("unknown stopping rule '" + std::string(name) + "'");
}

std::string_view to_string(EstimatorKind kind) {
  for (const auto& e : kEstimators)
    if (e.kind == kind) return e.name;
  return "?";
}

std::string_view to_string(StopRule rule) {
  for (const auto& r : kRules)
    if (r.rule == rule) return r.name;
  return "?";
}

void SimulationParameters::validate() const {
  require(monte_carlo_runs >= 1, "monte_carlo_runs must be at least 1");
  require(cores >= 1, "cores must be at least 1");
  switch (estimator) {
    case EstimatorKind::tsvd:
    case EstimatorKind::landweber:
    case EstimatorKind::cg: {
      const auto* s = std::get_if<InverseSetup>(&setup);
      require(s != nullptr, "inverse-problem estimators need an inverse-problem setup");
      require(static_cast<std::size_t>(s->true_signal.size()) == s->design.cols(),
              "true signal length must equal design columns");
      require(s->true_signal.allFinite(), "true signal must be finite");
      require(std::isfinite(s->noise_level) && s->noise_level >= 0.0, "noise level must be nonnegative");
      require(!s->kappa || *s->kappa >= 0.0, "critical value must be nonnegative");
      require(!s->learning_rate || *s->learning_rate > 0.0, "learning rate must be positive");
      require(s->cg_threshold > 0.0, "computation threshold must be positive");
      const bool two_step_ok = estimator == EstimatorKind::tsvd && rule == StopRule::two_step;
      require(rule == StopRule::discrepancy || two_step_ok, "stopping rule not available for this estimator");
      break;
    }
    case EstimatorKind::boost: {
      const auto* s = std::get_if<BoostSetup>(&setup);
      require(s != nullptr, "boosting needs a linear-model setup");
      require(s->covariates.rows() > 0 && s->covariates.cols() > 0, "empty design");
      require(s->coefficients.size() == s->covariates.cols(), "coefficient length must equal covariate columns");
      require(s->sigma >= 0.0, "sigma must be nonnegative");
      require(s->residual_ratio_K > 0.0, "K must be positive");
      require(s->residual_ratio_alpha > 0.0 && s->residual_ratio_alpha < 1.0, "alpha must lie in (0, 1)");
      break;
    }
    case EstimatorKind::tree: {
      const auto* s = std::get_if<TreeSetup>(&setup);
      require(s != nullptr, "trees need an additive-model setup");
      require(s->n >= 1 && s->test_size >= 1, "sample sizes must be positive");
      require(s->sigma >= 0.0, "sigma must be nonnegative");
      require(!s->kappa || *s->kappa >= 0.0, "critical value must be nonnegative");
      require(rule == StopRule::discrepancy, "trees support the discrepancy rule only");
      break;
    }
  }
}

namespace {

struct InverseOracle {
  double weak_balanced = kNaN;
  double strong_balanced = kNaN;
  double classical_weak = kNaN;
  double classical_strong = kNaN;
  double min_risk_weak = kNaN;
  double min_risk_strong = kNaN;
};

template <class Estimator>
InverseOracle read_oracle(Estimator& estimator, std::size_t max_iteration) {
  InverseOracle o;
  o.weak_balanced = estimator.weak_balanced_oracle(max_iteration).value;
  o.strong_balanced = estimator.strong_balanced_oracle(max_iteration).value;
  const std::size_t cw = estimator.weak_classical_oracle(max_iteration);
  const std::size_t cs = estimator.strong_classical_oracle(max_iteration);
  o.classical_weak = static_cast<double>(cw);
  o.classical_strong = static_cast<double>(cs);
  o.min_risk_weak = estimator.oracle().weak_risk()[cw];
  o.min_risk_strong = estimator.oracle().strong_risk()[cs];
  return o;
}

double efficiency(double min_error, double error_at_stop) {
  if (!(error_at_stop > 0.0)) return 1.0;
  return std::clamp(std::sqrt(std::max(min_error, 0.0) / error_at_stop), 0.0, 1.0);
}

double min_of(const std::vector<double>& v, std::size_t upto) {
  return *std::min_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(upto + 1));
}

class Runner {
 public:
  explicit Runner(const SimulationParameters& params) : params_(params) {
    if (const auto* s = std::get_if<InverseSetup>(&params_.setup)) {
      if (!s->design.is_diagonal() && params_.estimator == EstimatorKind::tsvd)
        spectrum_ = std::make_shared<SpectrumCache>(s->design);
      if (s->oracles) oracle_ = inverse_oracle(*s);
    }
  }

  SimulationRecord replicate(std::size_t id) const {
    SimulationRecord r;
    r.replication_id = id;
    r.seed = params_.base_seed + id;
    r.estimator = params_.estimator;
    r.stop_rule = params_.rule;
    for (double* field : {&r.weak_balanced_oracle, &r.strong_balanced_oracle, &r.classical_oracle_weak,
                          &r.classical_oracle_strong, &r.error_at_stop_weak, &r.error_at_stop_strong,
                          &r.min_error_weak, &r.min_error_strong, &r.relative_efficiency_weak,
                          &r.relative_efficiency_strong, &r.min_risk_weak, &r.min_risk_strong})
      *field = kNaN;
    r.stop_value = kNaN;
    const auto start = std::chrono::steady_clock::now();
    try {
      std::visit([&](const auto& setup) { fill(setup, r); }, params_.setup);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
  }

 private:
  InverseOracle inverse_oracle(const InverseSetup& s) const {
    const Vector clean = s.design.apply(s.true_signal);
    switch (params_.estimator) {
      case EstimatorKind::tsvd: {
        TruncatedSvd est(s.design, clean, s.true_signal, s.noise_level, {{}, spectrum_});
        return read_oracle(est, std::min(params_.max_iteration, est.max_rank()));
      }
      case EstimatorKind::landweber: {
        Landweber est(s.design, clean, s.true_signal, s.noise_level, {s.learning_rate, false});
        return read_oracle(est, params_.max_iteration);
      }
      default:
        return {};
    }
  }

  void fill(std::monostate, SimulationRecord&) const { throw InvalidArgument("simulation setup missing"); }

  void fill(const InverseSetup& s, SimulationRecord& r) const {
    const InverseProblemInstance inst = make_inverse_problem(s.design, s.true_signal, s.noise_level, r.seed);
    const double kappa = s.kappa.value_or(static_cast<double>(s.design.rows()) * s.noise_level * s.noise_level);
    const std::size_t max_iteration = params_.max_iteration;
    r.weak_balanced_oracle = oracle_.weak_balanced;
    r.strong_balanced_oracle = oracle_.strong_balanced;
    r.classical_oracle_weak = oracle_.classical_weak;
    r.classical_oracle_strong = oracle_.classical_strong;
    r.min_risk_weak = oracle_.min_risk_weak;
    r.min_risk_strong = oracle_.min_risk_strong;

    switch (params_.estimator) {
      case EstimatorKind::tsvd: {
        TruncatedSvd est(inst.design, inst.response, inst.true_signal, std::nullopt, {{}, spectrum_});
        const std::size_t horizon = std::min(max_iteration, est.max_rank());
        StopIndex stop = est.discrepancy_stop(kappa, horizon);
        r.reached = stop.reached;
        if (params_.rule == StopRule::two_step)
          stop.value = static_cast<double>(est.aic_two_step(stop, s.noise_level));
        try {
          if (est.iteration() < horizon) est.iterate(horizon - est.iteration());
        } catch (const RankExhausted&) {
        }
        integer_path(est.weak_empirical_error(), est.strong_empirical_error(), est.iteration(), stop, r);
        break;
      }
      case EstimatorKind::landweber: {
        Landweber est(inst.design, inst.response, inst.true_signal, std::nullopt, {s.learning_rate, false});
        const StopIndex stop = est.discrepancy_stop(kappa, max_iteration);
        r.reached = stop.reached;
        if (est.iteration() < max_iteration) est.iterate(max_iteration - est.iteration());
        integer_path(est.weak_empirical_error(), est.strong_empirical_error(), est.iteration(), stop, r);
        break;
      }
      case EstimatorKind::cg: {
        ConjugateGradients est(inst.design, inst.response, inst.true_signal, {s.cg_threshold, false});
        const StopIndex stop = est.discrepancy_stop(kappa, max_iteration, s.interpolate);
        r.reached = stop.reached;
        r.stop_value = stop.value;
        const StopIndex weak = est.weak_empirical_oracle(max_iteration, s.interpolate);
        const StopIndex strong = est.strong_empirical_oracle(max_iteration, s.interpolate);
        r.classical_oracle_weak = weak.value;
        r.classical_oracle_strong = strong.value;
        r.error_at_stop_weak = est.weak_error_at(stop.value);
        r.error_at_stop_strong = est.strong_error_at(stop.value);
        r.min_error_weak = std::min(est.weak_error_at(weak.value), r.error_at_stop_weak);
        r.min_error_strong = std::min(est.strong_error_at(strong.value), r.error_at_stop_strong);
        break;
      }
      default:
        throw InvalidArgument("estimator does not match the setup");
    }
    r.relative_efficiency_weak = efficiency(r.min_error_weak, r.error_at_stop_weak);
    r.relative_efficiency_strong = efficiency(r.min_error_strong, r.error_at_stop_strong);
  }

  static void integer_path(const std::vector<double>& weak, const std::vector<double>& strong, std::size_t upto,
                           const StopIndex& stop, SimulationRecord& r) {
    const std::size_t m = std::min(stop.floor(), upto);
    r.stop_value = stop.value;
    r.error_at_stop_weak = weak[m];
    r.error_at_stop_strong = strong[m];
    r.min_error_weak = min_of(weak, upto);
    r.min_error_strong = min_of(strong, upto);
  }

  void fill(const BoostSetup& s, SimulationRecord& r) const {
    const LinearModelInstance inst = linear_model(s.covariates, s.coefficients, s.sigma, r.seed);
    L2Boost boost(inst.covariates, inst.response, inst.coefficients);
    const std::size_t max_iteration = std::min(params_.max_iteration, boost.max_iteration());
    StopIndex stop;
    switch (params_.rule) {
      case StopRule::discrepancy:
        stop = boost.discrepancy_stop(boost.noise_estimate().sigma_hat2, max_iteration);
        break;
      case StopRule::two_step:
        stop = boost.discrepancy_stop(boost.noise_estimate().sigma_hat2, max_iteration);
        stop.value = static_cast<double>(boost.aic_iteration(stop.floor(), s.aic_K));
        break;
      case StopRule::residual_ratio:
        stop = boost.residual_ratio_stop(max_iteration, s.residual_ratio_K, s.residual_ratio_alpha);
        break;
      case StopRule::residual_ratio_two_step:
        stop = boost.residual_ratio_stop(max_iteration, s.residual_ratio_K, s.residual_ratio_alpha);
        stop.value = static_cast<double>(boost.aic_iteration(stop.floor(), s.aic_K));
        break;
      case StopRule::adaptive_discrepancy:
        stop = boost.adaptive_discrepancy_stop(max_iteration);
        break;
    }
    r.stop_value = stop.value;
    r.reached = stop.reached;
    r.weak_balanced_oracle = boost.balanced_oracle(max_iteration).value;
    r.classical_oracle_weak = static_cast<double>(boost.classical_oracle(max_iteration));
    const std::vector<double> risk = boost.risk();
    r.error_at_stop_weak = risk[std::min(stop.floor(), risk.size() - 1)];
    r.min_error_weak = risk[static_cast<std::size_t>(r.classical_oracle_weak)];
    r.relative_efficiency_weak = efficiency(r.min_error_weak, r.error_at_stop_weak);
  }

  void fill(const TreeSetup& s, SimulationRecord& r) const {
    const RegressionInstance train = additive_model(s.kind, s.n, s.sigma, r.seed);
    const RegressionInstance test = additive_model(s.kind, s.test_size, s.sigma, splitmix64(~r.seed));
    RegressionTree tree(train.covariates, train.response, train.true_function_values, train.noise);
    const double kappa = s.kappa.value_or(s.sigma * s.sigma);
    const StopIndex stop = tree.discrepancy_stop(kappa, params_.max_iteration, s.interpolate);
    r.stop_value = stop.value;
    r.reached = stop.reached;
    r.weak_balanced_oracle = tree.balanced_oracle(params_.max_iteration).value;
    tree.iterate(params_.max_iteration);

    // test error along the projection flow
    const double size = static_cast<double>(s.test_size);
    std::vector<double> norm2;
    std::vector<double> cross;
    Vector previous;
    for (std::size_t m = 0; m <= tree.level(); ++m) {
      Vector e = tree.predict(static_cast<double>(m), test.covariates) - test.true_function_values;
      norm2.push_back(e.squaredNorm() / size);
      if (m > 0) cross.push_back(previous.dot(e) / size);
      previous = std::move(e);
    }
    const SegmentMinimum best = interpolated_path_minimum(norm2, cross, tree.level());
    const auto m = std::min(stop.floor(), tree.level());
    const double alpha = stop.value - static_cast<double>(m);
    r.error_at_stop_weak = alpha > 0.0 ? SegmentNorms{norm2[m], norm2[m + 1], cross[m]}.at(alpha) : norm2[m];
    r.classical_oracle_weak = best.alpha;
    r.min_error_weak = std::min(best.value, r.error_at_stop_weak);
    r.relative_efficiency_weak = efficiency(r.min_error_weak, r.error_at_stop_weak);
  }

  const SimulationParameters& params_;
  std::shared_ptr<SpectrumCache> spectrum_;
  InverseOracle oracle_;
};

}  // namespace

std::vector<SimulationRecord> run(const SimulationParameters& params) {
  params.validate();
  const Runner runner(params);
  std::vector<SimulationRecord> records(params.monte_carlo_runs);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) records[i] = runner.replicate(i);
  };
  const std::size_t threads = std::min(params.cores, params.monte_carlo_runs);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return records;
}

Quartiles quartiles(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return {kNaN, kNaN, kNaN};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::vector<SummaryRow> aggregate(const std::vector<SimulationRecord>& records) {
  require(!records.empty(), "nothing to aggregate");
  std::vector<SummaryRow> rows;
  std::vector<std::pair<EstimatorKind, StopRule>> keys;
  for (const auto& r : records)
    if (std::find(keys.begin(), keys.end(), std::pair{r.estimator, r.stop_rule}) == keys.end())
      keys.emplace_back(r.estimator, r.stop_rule);

  for (const auto& [estimator, rule] : keys) {
    SummaryRow row;
    row.estimator = estimator;
    row.stop_rule = rule;
    std::vector<double> stop, ratio, eff_weak, eff_strong;
    double sum_weak = 0.0, sum_strong = 0.0, risk_weak = kNaN, risk_strong = kNaN;
    std::size_t ok = 0;
    for (const auto& r : records) {
      if (r.estimator != estimator || r.stop_rule != rule) continue;
      ++row.runs;
      if (!r.error.empty()) {
        ++row.failures;
        continue;
      }
      ++ok;
      stop.push_back(r.stop_value);
      if (r.weak_balanced_oracle > 0.0) ratio.push_back(r.stop_value / r.weak_balanced_oracle);
      eff_weak.push_back(r.relative_efficiency_weak);
      eff_strong.push_back(r.relative_efficiency_strong);
      sum_weak += r.error_at_stop_weak;
      sum_strong += r.error_at_stop_strong;
      risk_weak = r.min_risk_weak;
      risk_strong = r.min_risk_strong;
    }
    row.stop_value = quartiles(stop);
    row.stop_to_oracle = quartiles(ratio);
    row.efficiency_weak = quartiles(eff_weak);
    row.efficiency_strong = quartiles(eff_strong);
    row.expected_efficiency_weak = kNaN;
    row.expected_efficiency_strong = kNaN;
    if (ok > 0) {
      const double n = static_cast<double>(ok);
      if (std::isfinite(risk_weak) && sum_weak > 0.0) row.expected_efficiency_weak = std::sqrt(risk_weak / (sum_weak / n));
      if (std::isfinite(risk_strong) && sum_strong > 0.0)
        row.expected_efficiency_strong = std::sqrt(risk_strong / (sum_strong / n));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c == '\n' ? ' ' : c;
  }
  return quoted + "\"";
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<SimulationRecord>& records, const Metadata& metadata,
                       bool include_timing) {
  out << "# rng=" << CounterRng::kAlgorithmId << '\n';
  out << "# seed_schedule=base_seed+replication_id\n";
  for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
  out << "replication_id,seed,estimator,stop_rule,stop_value,reached,weak_balanced_oracle,strong_balanced_oracle,"
         "classical_oracle_weak,classical_oracle_strong,error_at_stop_weak,error_at_stop_strong,min_error_weak,"
         "min_error_strong,relative_efficiency_weak,relative_efficiency_strong,min_risk_weak,min_risk_strong";
  if (include_timing) out << ",wall_time_ms";
  out << ",error\n";
  for (const auto& r : records) {
    out << r.replication_id << ',' << r.seed << ',' << to_string(r.estimator) << ',' << to_string(r.stop_rule) << ','
        << format_number(r.stop_value) << ',' << (r.reached ? 1 : 0);
    for (double v : {r.weak_balanced_oracle, r.strong_balanced_oracle, r.classical_oracle_weak,
                     r.classical_oracle_strong, r.error_at_stop_weak, r.error_at_stop_strong, r.min_error_weak,
                     r.min_error_strong, r.relative_efficiency_weak, r.relative_efficiency_strong, r.min_risk_weak,
                     r.min_risk_strong})
      out << ',' << format_number(v);
    if (include_timing) out << ',' << format_number(r.wall_time_ms);
    out << ',' << csv_field(r.error) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "estimator,stop_rule,runs,failures";
  for (const char* name : {"stop", "stop_to_oracle", "efficiency_weak", "efficiency_strong"})
    out << ',' << name << "_q1," << name << "_median," << name << "_q3";
  out << ",expected_efficiency_weak,expected_efficiency_strong\n";
  for (const auto& row : rows) {
    out << to_string(row.estimator) << ',' << to_string(row.stop_rule) << ',' << row.runs << ',' << row.failures;
    for (const Quartiles& q : {row.stop_value, row.stop_to_oracle, row.efficiency_weak, row.efficiency_strong})
      out << ',' << format_number(q.q1) << ',' << format_number(q.median) << ',' << format_number(q.q3);
    out << ',' << format_number(row.expected_efficiency_weak) << ',' << format_number(row.expected_efficiency_strong)
        << '\n';
  }
}

}  // namespace earlystop
