#include "earlystop/conjugate_gradients.hpp"
#include "earlystop/datagen.hpp"
#include "earlystop/errors.hpp"
#include "earlystop/l2_boost.hpp"
#include "earlystop/landweber.hpp"
#include "earlystop/regression_tree.hpp"
#include "earlystop/simulation.hpp"
#include "earlystop/truncated_svd.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace earlystop;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kVersion = "1.0.0";

// Flags shared by the inverse-problem estimators.
struct InverseFlags {
  std::string problem = "diagonal";
  std::size_t n = 1000;
  std::string signal = "smooth";
  double delta = 0.01;
  double depth = 0.25;
  double kappa = kUnset;
  std::size_t max_iter = 3000;
  std::uint64_t seed = 0;
  double learning_rate = kUnset;
  bool interpolate = false;
  double threshold = 1e-8;
  std::string rule = "dp";
};

struct BoostFlags {
  std::size_t n = 1000;
  std::size_t p = 1000;
  std::string signal = "gamma3";
  double sigma = 1.0;
  std::string rule = "dp";
  std::size_t max_iter = 100;
  std::uint64_t seed = 0;
  double K = 1.2;
  double alpha = 0.95;
  double aic_K = 2.0;
};

struct TreeFlags {
  std::string kind = "smooth";
  std::size_t n = 1000;
  double sigma = 1.0;
  double kappa = kUnset;
  bool interpolate = false;
  std::size_t max_depth = 30;
  std::size_t test_size = 1000;
  std::uint64_t seed = 0;
};

struct ReplicateFlags {
  std::size_t mc_runs = 100;
  std::size_t cores = 1;
  std::string out;
  std::string summary;
  bool timing = false;
};

std::optional<double> given(double value) {
  if (std::isnan(value)) return std::nullopt;
  return value;
}

void add_inverse_flags(CLI::App* app, InverseFlags& f, bool with_rate, bool with_cg, bool with_rule) {
  app->add_option("--problem", f.problem, "diagonal | phillips | gravity")
      ->check(CLI::IsMember({"diagonal", "phillips", "gravity"}));
  app->add_option("--n", f.n, "sample size")->check(CLI::PositiveNumber);
  app->add_option("--signal", f.signal, "diagonal problem signal: supersmooth | smooth | rough")
      ->check(CLI::IsMember({"supersmooth", "smooth", "rough"}));
  app->add_option("--delta", f.delta, "noise level")->check(CLI::NonNegativeNumber);
  app->add_option("--depth", f.depth, "gravity problem depth")->check(CLI::PositiveNumber);
  app->add_option("--kappa", f.kappa, "critical value (default n*delta^2)");
  app->add_option("--max-iter", f.max_iter, "maximal iteration");
  app->add_option("--seed", f.seed, "base seed");
  if (with_rate) app->add_option("--learning-rate", f.learning_rate, "step size (default 1/||A||^2)");
  if (with_cg) {
    app->add_flag("--interpolate", f.interpolate, "interpolate between iterates");
    app->add_option("--threshold", f.threshold, "emergency stop threshold")->check(CLI::PositiveNumber);
  }
  if (with_rule) app->add_option("--rule", f.rule, "dp | dp2step")->check(CLI::IsMember({"dp", "dp2step"}));
}

void add_boost_flags(CLI::App* app, BoostFlags& f) {
  app->add_option("--n", f.n, "sample size")->check(CLI::PositiveNumber);
  app->add_option("--p", f.p, "number of covariates")->check(CLI::PositiveNumber);
  app->add_option("--signal", f.signal, "gamma1 | gamma2 | gamma3 | s15 | s60 | s90")
      ->check(CLI::IsMember({"gamma1", "gamma2", "gamma3", "s15", "s60", "s90"}));
  app->add_option("--sigma", f.sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
  app->add_option("--rule", f.rule, "dp | rr | dp2step | rr2step | dpm")
      ->check(CLI::IsMember({"dp", "rr", "dp2step", "rr2step", "dpm"}));
  app->add_option("--max-iter", f.max_iter, "maximal iteration");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--rr-k", f.K, "residual ratio constant K")->check(CLI::PositiveNumber);
  app->add_option("--rr-alpha", f.alpha, "residual ratio level alpha")->check(CLI::Range(0.0, 1.0));
  app->add_option("--aic-k", f.aic_K, "AIC penalty constant")->check(CLI::NonNegativeNumber);
}

void add_tree_flags(CLI::App* app, TreeFlags& f) {
  app->add_option("--kind", f.kind, "smooth | step | linear | hills")
      ->check(CLI::IsMember({"smooth", "step", "linear", "hills"}));
  app->add_option("--n", f.n, "training sample size")->check(CLI::PositiveNumber);
  app->add_option("--sigma", f.sigma, "noise standard deviation")->check(CLI::NonNegativeNumber);
  app->add_option("--kappa", f.kappa, "critical value (default sigma^2)");
  app->add_flag("--interpolate", f.interpolate, "stop along the projection flow");
  app->add_option("--max-depth", f.max_depth, "maximal tree level");
  app->add_option("--test-size", f.test_size, "test sample size")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "base seed");
}

void add_replicate_flags(CLI::App* app, ReplicateFlags& f) {
  app->add_option("--mc-runs", f.mc_runs, "Monte-Carlo replications")->check(CLI::PositiveNumber);
  app->add_option("--cores", f.cores, "parallel replications")->check(CLI::PositiveNumber);
  app->add_option("--out", f.out, "records CSV")->required();
  app->add_option("--summary", f.summary, "optional summary CSV");
  app->add_flag("--timing", f.timing, "add per-replication wall time (not reproducible)");
}

TestProblem inverse_problem(const InverseFlags& f) {
  if (f.problem == "phillips") return phillips(f.n);
  if (f.problem == "gravity") return gravity(f.n, f.depth);
  const Vector lambda = Vector::LinSpaced(static_cast<Eigen::Index>(f.n), 1.0, static_cast<double>(f.n)).cwiseSqrt().cwiseInverse();
  return {DesignMatrix::diagonal(lambda), spectral_signal(f.n, default_shape(parse_signal_kind(f.signal)))};
}

InverseSetup inverse_setup(const InverseFlags& f, bool oracles) {
  require(!(f.kappa < 0.0), "critical value must be nonnegative");
  TestProblem problem = inverse_problem(f);
  InverseSetup setup{std::move(problem.design), std::move(problem.true_signal), f.delta};
  setup.kappa = given(f.kappa);
  setup.learning_rate = given(f.learning_rate);
  setup.interpolate = f.interpolate;
  setup.cg_threshold = f.threshold;
  setup.oracles = oracles;
  return setup;
}

Vector boost_signal(const std::string& name, std::size_t p) {
  if (name.rfind("gamma", 0) == 0) return gamma_sparse_signal(p, std::stod(name.substr(5)));
  const std::size_t s = std::stoul(name.substr(1));
  require(s <= p, "sparsity exceeds the number of covariates");
  return s_sparse_signal(p, s, 10.0 / static_cast<double>(s));
}

BoostSetup boost_setup(const BoostFlags& f) {
  BoostSetup setup;
  setup.covariates = gaussian_design(f.n, f.p, f.seed);
  setup.coefficients = boost_signal(f.signal, f.p);
  setup.sigma = f.sigma;
  setup.residual_ratio_K = f.K;
  setup.residual_ratio_alpha = f.alpha;
  setup.aic_K = f.aic_K;
  return setup;
}

TreeSetup tree_setup(const TreeFlags& f) {
  require(!(f.kappa < 0.0), "critical value must be nonnegative");
  TreeSetup setup;
  setup.kind = parse_additive_kind(f.kind);
  setup.n = f.n;
  setup.sigma = f.sigma;
  setup.kappa = given(f.kappa);
  setup.interpolate = f.interpolate;
  setup.test_size = f.test_size;
  return setup;
}

// Dense Landweber oracles cost O(p^3) per iteration.
bool cheap_oracles(EstimatorKind kind, const InverseFlags& f) {
  return kind == EstimatorKind::tsvd || (kind == EstimatorKind::landweber && (f.problem == "diagonal" || f.n <= 200));
}

std::string num(double v) {
  const std::string s = format_number(v);
  return s.empty() ? "nan" : s;
}

// ---- datagen ---------------------------------------------------------------

struct DatagenFlags {
  std::string problem = "diagonal";
  std::size_t n = 1000;
  std::size_t p = 1000;
  std::string signal = "smooth";
  std::string kind = "smooth";
  double delta = 0.01;
  double sigma = 1.0;
  double depth = 0.25;
  std::uint64_t seed = 0;
  std::string out;
};

void write_vector(const std::string& path, const Vector& v) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << "index,value\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) file << i << ',' << format_number(v[i]) << '\n';
}

void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << "n,p\n" << m.rows() << ',' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) file << (j ? "," : "") << format_number(m(i, j));
    file << '\n';
  }
}

int run_datagen(const DatagenFlags& f) {
  const std::string& prefix = f.out;
  if (f.problem == "linear") {
    const std::string name = f.signal == "smooth" ? "gamma3" : f.signal;
    const LinearModelInstance inst = linear_model(gaussian_design(f.n, f.p, f.seed), boost_signal(name, f.p), f.sigma, f.seed);
    write_matrix(prefix + "_covariates.csv", inst.covariates);
    write_vector(prefix + "_coefficients.csv", inst.coefficients);
    write_vector(prefix + "_response.csv", inst.response);
    return 0;
  }
  if (f.problem == "additive") {
    const RegressionInstance inst = additive_model(parse_additive_kind(f.kind), f.n, f.sigma, f.seed);
    write_matrix(prefix + "_covariates.csv", inst.covariates);
    write_vector(prefix + "_truth.csv", inst.true_function_values);
    write_vector(prefix + "_response.csv", inst.response);
    return 0;
  }
  InverseProblemInstance inst = [&] {
    if (f.problem == "diagonal") return diagonal_problem(f.n, parse_signal_kind(f.signal), f.delta, f.seed);
    TestProblem tp = f.problem == "phillips" ? phillips(f.n) : gravity(f.n, f.depth);
    return make_inverse_problem(std::move(tp.design), std::move(tp.true_signal), f.delta, f.seed);
  }();
  if (inst.design.is_diagonal()) write_vector(prefix + "_design.csv", inst.design.lambda());
  else write_matrix(prefix + "_design.csv", inst.design.entries());
  write_vector(prefix + "_signal.csv", inst.true_signal);
  write_vector(prefix + "_response.csv", inst.response);
  return 0;
}

// ---- estimate --------------------------------------------------------------

int estimate_inverse(EstimatorKind kind, const InverseFlags& f) {
  InverseSetup setup = inverse_setup(f, false);
  const InverseProblemInstance inst =
      make_inverse_problem(std::move(setup.design), std::move(setup.true_signal), f.delta, f.seed);
  const double kappa = setup.kappa.value_or(static_cast<double>(f.n) * f.delta * f.delta);
  const std::optional<double> delta = cheap_oracles(kind, f) ? std::optional<double>(f.delta) : std::nullopt;
  std::ostringstream line;
  switch (kind) {
    case EstimatorKind::tsvd: {
      TruncatedSvd est(inst.design, inst.response, inst.true_signal, delta);
      StopIndex stop = est.discrepancy_stop(kappa, f.max_iter);
      const std::size_t dp = stop.floor();
      if (f.rule == "dp2step") stop.value = static_cast<double>(est.aic_two_step(stop, f.delta));
      line << "estimator=tsvd stop=" << num(stop.value) << " reached=" << stop.reached << " discrepancy_stop=" << dp
           << " residual=" << num(est.residuals()[stop.floor()])
           << " weak_error=" << num(est.weak_empirical_error()[stop.floor()])
           << " strong_error=" << num(est.strong_empirical_error()[stop.floor()])
           << " weak_balanced_oracle=" << num(est.weak_balanced_oracle(f.max_iter).value)
           << " strong_balanced_oracle=" << num(est.strong_balanced_oracle(f.max_iter).value);
      break;
    }
    case EstimatorKind::landweber: {
      Landweber est(inst.design, inst.response, inst.true_signal, delta, {setup.learning_rate, false});
      const StopIndex stop = est.discrepancy_stop(kappa, f.max_iter);
      line << "estimator=landweber stop=" << num(stop.value) << " reached=" << stop.reached
           << " residual=" << num(est.residuals()[stop.floor()])
           << " weak_error=" << num(est.weak_empirical_error()[stop.floor()])
           << " strong_error=" << num(est.strong_empirical_error()[stop.floor()]);
      if (est.has_oracle())
        line << " weak_balanced_oracle=" << num(est.weak_balanced_oracle(f.max_iter).value)
             << " strong_balanced_oracle=" << num(est.strong_balanced_oracle(f.max_iter).value);
      break;
    }
    case EstimatorKind::cg: {
      ConjugateGradients est(inst.design, inst.response, inst.true_signal, {f.threshold, false});
      const StopIndex stop = est.discrepancy_stop(kappa, f.max_iter, f.interpolate);
      const double weak_error = est.weak_error_at(stop.value);
      const double strong_error = est.strong_error_at(stop.value);
      const double residual = est.residuals()[stop.floor()];
      line << "estimator=cg stop=" << num(stop.value) << " reached=" << stop.reached << " residual=" << num(residual)
           << " weak_error=" << num(weak_error) << " strong_error=" << num(strong_error)
           << " weak_empirical_oracle=" << num(est.weak_empirical_oracle(f.max_iter, f.interpolate).value)
           << " strong_empirical_oracle=" << num(est.strong_empirical_oracle(f.max_iter, f.interpolate).value)
           << " emergency_stop=" << est.emergency_stop();
      break;
    }
    default:
      break;
  }
  std::cout << line.str() << '\n';
  return 0;
}

int estimate_boost(const BoostFlags& f) {
  const BoostSetup setup = boost_setup(f);
  const LinearModelInstance inst = linear_model(setup.covariates, setup.coefficients, f.sigma, f.seed);
  L2Boost boost(inst.covariates, inst.response, inst.coefficients);
  const double sigma2 = boost.noise_estimate().sigma_hat2;
  StopIndex stop;
  const StopRule rule = parse_stop_rule(f.rule);
  if (rule == StopRule::discrepancy || rule == StopRule::two_step) stop = boost.discrepancy_stop(sigma2, f.max_iter);
  else if (rule == StopRule::adaptive_discrepancy) stop = boost.adaptive_discrepancy_stop(f.max_iter);
  else stop = boost.residual_ratio_stop(f.max_iter, f.K, f.alpha);
  const std::size_t raw = stop.floor();
  if (rule == StopRule::two_step || rule == StopRule::residual_ratio_two_step)
    stop.value = static_cast<double>(boost.aic_iteration(raw, f.aic_K));
  const auto risk = boost.risk();
  std::cout << "estimator=boost rule=" << f.rule << " stop=" << num(stop.value) << " reached=" << stop.reached
            << " raw_stop=" << raw << " sigma_hat2=" << num(sigma2) << " residual=" << num(boost.residuals()[stop.floor()])
            << " risk=" << num(risk[stop.floor()]) << " balanced_oracle=" << num(boost.balanced_oracle(f.max_iter).value)
            << '\n';
  return 0;
}

int estimate_tree(const TreeFlags& f) {
  const TreeSetup setup = tree_setup(f);
  const RegressionInstance inst = additive_model(setup.kind, f.n, f.sigma, f.seed);
  RegressionTree tree(inst.covariates, inst.response, inst.true_function_values, inst.noise);
  const double kappa = setup.kappa.value_or(f.sigma * f.sigma);
  const StopIndex stop = tree.discrepancy_stop(kappa, f.max_depth, f.interpolate);
  const StopIndex oracle = tree.balanced_oracle(f.max_depth);
  std::cout << "estimator=tree stop=" << num(stop.value) << " reached=" << stop.reached
            << " residual=" << num(tree.residual_at(stop.value)) << " oracle=" << num(oracle.value)
            << " oracle_reached=" << oracle.reached << '\n';
  return 0;
}

// ---- replicate / compare ---------------------------------------------------

Metadata base_metadata(std::uint64_t seed, const SimulationParameters& params) {
  return {{"version", kVersion},
          {"base_seed", std::to_string(seed)},
          {"estimator", std::string(to_string(params.estimator))},
          {"stop_rule", std::string(to_string(params.rule))},
          {"monte_carlo_runs", std::to_string(params.monte_carlo_runs)},
          {"max_iteration", std::to_string(params.max_iteration)}};
}

void emit(const SimulationParameters& params, const ReplicateFlags& r, Metadata metadata) {
  const auto records = run(params);
  std::ofstream out(r.out);
  if (!out) throw std::runtime_error("cannot write " + r.out);
  write_records_csv(out, records, metadata, r.timing);
  if (!r.summary.empty()) {
    std::ofstream summary(r.summary);
    if (!summary) throw std::runtime_error("cannot write " + r.summary);
    write_summary_csv(summary, aggregate(records));
  }
  std::size_t failures = 0;
  for (const auto& rec : records) failures += rec.error.empty() ? 0 : 1;
  std::cout << "wrote " << records.size() << " records to " << r.out;
  if (failures) std::cout << " (" << failures << " failed)";
  std::cout << '\n';
}

int replicate_inverse(EstimatorKind kind, const InverseFlags& f, const ReplicateFlags& r) {
  SimulationParameters params;
  params.estimator = kind;
  params.rule = parse_stop_rule(f.rule);
  params.setup = inverse_setup(f, cheap_oracles(kind, f));
  params.monte_carlo_runs = r.mc_runs;
  params.cores = r.cores;
  params.max_iteration = f.max_iter;
  params.base_seed = f.seed;
  Metadata meta = base_metadata(f.seed, params);
  meta.insert(meta.end(), {{"problem", f.problem}, {"n", std::to_string(f.n)}, {"signal", f.signal},
                           {"delta", num(f.delta)}, {"kappa", num(f.kappa)}, {"learning_rate", num(f.learning_rate)},
                           {"interpolate", f.interpolate ? "1" : "0"}, {"threshold", num(f.threshold)}});
  emit(params, r, meta);
  return 0;
}

int replicate_boost(const BoostFlags& f, const ReplicateFlags& r) {
  SimulationParameters params;
  params.estimator = EstimatorKind::boost;
  params.rule = parse_stop_rule(f.rule);
  params.setup = boost_setup(f);
  params.monte_carlo_runs = r.mc_runs;
  params.cores = r.cores;
  params.max_iteration = f.max_iter;
  params.base_seed = f.seed;
  Metadata meta = base_metadata(f.seed, params);
  meta.insert(meta.end(), {{"n", std::to_string(f.n)}, {"p", std::to_string(f.p)}, {"signal", f.signal},
                           {"sigma", num(f.sigma)}, {"design_seed", std::to_string(f.seed)}});
  emit(params, r, meta);
  return 0;
}

int replicate_tree(const TreeFlags& f, const ReplicateFlags& r) {
  SimulationParameters params;
  params.estimator = EstimatorKind::tree;
  params.setup = tree_setup(f);
  params.monte_carlo_runs = r.mc_runs;
  params.cores = r.cores;
  params.max_iteration = f.max_depth;
  params.base_seed = f.seed;
  Metadata meta = base_metadata(f.seed, params);
  meta.insert(meta.end(), {{"kind", f.kind}, {"n", std::to_string(f.n)}, {"sigma", num(f.sigma)},
                           {"kappa", num(f.kappa)}, {"interpolate", f.interpolate ? "1" : "0"},
                           {"test_size", std::to_string(f.test_size)}});
  emit(params, r, meta);
  return 0;
}

struct CompareFlags {
  InverseFlags inverse;
  ReplicateFlags replicate;
  bool oracles = false;
};

int run_compare(CompareFlags c) {
  const InverseFlags& f = c.inverse;
  std::cout << "estimator,runs,stop_min,stop_q1,stop_median,stop_q3,stop_max,weak_error_median,strong_error_median\n";
  for (EstimatorKind kind : {EstimatorKind::tsvd, EstimatorKind::landweber, EstimatorKind::cg}) {
    SimulationParameters params;
    params.estimator = kind;
    params.setup = inverse_setup(f, c.oracles);
    params.monte_carlo_runs = c.replicate.mc_runs;
    params.cores = c.replicate.cores;
    params.max_iteration = f.max_iter;
    params.base_seed = f.seed;
    const auto records = run(params);
    const std::string path = c.replicate.out + "_" + std::string(to_string(kind)) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    Metadata meta = base_metadata(f.seed, params);
    meta.insert(meta.end(), {{"problem", f.problem}, {"n", std::to_string(f.n)}, {"delta", num(f.delta)}});
    write_records_csv(out, records, meta, c.replicate.timing);

    std::vector<double> stops, weak, strong;
    for (const auto& r : records) {
      stops.push_back(r.stop_value);
      weak.push_back(r.error_at_stop_weak);
      strong.push_back(r.error_at_stop_strong);
    }
    const Quartiles q = quartiles(stops);
    std::cout << to_string(kind) << ',' << records.size() << ',' << num(*std::min_element(stops.begin(), stops.end()))
              << ',' << num(q.q1) << ',' << num(q.median) << ',' << num(q.q3) << ','
              << num(*std::max_element(stops.begin(), stops.end())) << ',' << num(quartiles(weak).median) << ','
              << num(quartiles(strong).median) << '\n';
  }
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchFlags {
  std::size_t n = 1000;
  std::size_t iters = 100;
  double delta = 0.01;
  std::uint64_t seed = 0;
};

template <class F>
double seconds(F&& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_bench(const BenchFlags& f) {
  require(f.n % 4 == 0, "bench needs n divisible by 4 (Phillips problem)");
  std::cout << "problem,tsvd_seconds,landweber_seconds,cg_seconds\n";
  for (const std::string name : {"gravity", "phillips", "smooth", "supersmooth", "rough"}) {
    InverseFlags flags;
    flags.n = f.n;
    flags.delta = f.delta;
    if (name == "gravity" || name == "phillips") flags.problem = name;
    else flags.signal = name;
    TestProblem problem = inverse_problem(flags);
    const InverseProblemInstance inst =
        make_inverse_problem(std::move(problem.design), std::move(problem.true_signal), f.delta, f.seed);
    const double t_tsvd = seconds([&] {
      TruncatedSvd est(inst.design, inst.response, inst.true_signal);
      try {
        est.iterate(std::min(f.iters, est.max_rank()));
      } catch (const RankExhausted&) {
      }
    });
    const double t_landweber = seconds([&] {
      Landweber est(inst.design, inst.response, inst.true_signal, std::nullopt, {std::nullopt, false});
      est.iterate(f.iters);
    });
    const double t_cg = seconds([&] {
      ConjugateGradients est(inst.design, inst.response, inst.true_signal, {1e-8, false});
      est.iterate(f.iters);
    });
    std::cout << name << ',' << std::fixed << std::setprecision(6) << t_tsvd << ',' << t_landweber << ',' << t_cg
              << std::defaultfloat << '\n';
  }
  return 0;
}

// ---- config file -----------------------------------------------------------

// Flat key=value lines become --key value arguments placed right after the
// subcommand path, so that later command-line flags take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream file(config_path);
  if (!file) throw InvalidArgument("cannot read config file " + config_path);
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(line_number) + " lacks '='");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_number) + " has an empty key");
    if (value == "true") injected.push_back("--" + key);
    else if (value != "false") {
      injected.push_back("--" + key);
      injected.push_back(value);
    }
  }
  std::size_t insert_at = 1;
  while (insert_at < args.size() && args[insert_at].rfind("-", 0) != 0) ++insert_at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early-stopped iterative estimators: data generation, estimation and Monte-Carlo studies"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config_unused;
  app.add_option("--config", config_unused, "flat key=value file; command-line flags win");

  DatagenFlags datagen;
  auto* datagen_cmd = app.add_subcommand("datagen", "write a synthetic data set as CSV files");
  datagen_cmd->add_option("--problem", datagen.problem, "diagonal | phillips | gravity | linear | additive")
      ->check(CLI::IsMember({"diagonal", "phillips", "gravity", "linear", "additive"}));
  datagen_cmd->add_option("--n", datagen.n, "sample size")->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--p", datagen.p, "covariates (linear)")->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--signal", datagen.signal, "diagonal: supersmooth|smooth|rough; linear: gamma1..s90");
  datagen_cmd->add_option("--kind", datagen.kind, "additive: smooth | step | linear | hills");
  datagen_cmd->add_option("--delta", datagen.delta, "noise level (inverse problems)")->check(CLI::NonNegativeNumber);
  datagen_cmd->add_option("--sigma", datagen.sigma, "noise sd (regression)")->check(CLI::NonNegativeNumber);
  datagen_cmd->add_option("--depth", datagen.depth, "gravity depth")->check(CLI::PositiveNumber);
  datagen_cmd->add_option("--seed", datagen.seed, "seed");
  datagen_cmd->add_option("--out", datagen.out, "output prefix")->required();

  auto* estimate_cmd = app.add_subcommand("estimate", "single run with a one-line summary");
  estimate_cmd->require_subcommand(1);
  auto* replicate_cmd = app.add_subcommand("replicate", "Monte-Carlo replication study written as CSV");
  replicate_cmd->require_subcommand(1);

  InverseFlags est_inverse[3];
  InverseFlags rep_inverse[3];
  ReplicateFlags rep_flags[5];
  const EstimatorKind inverse_kinds[3] = {EstimatorKind::tsvd, EstimatorKind::landweber, EstimatorKind::cg};
  const char* inverse_help[3] = {"truncated SVD", "Landweber iteration", "conjugate gradients"};
  CLI::App* est_inverse_cmd[3];
  CLI::App* rep_inverse_cmd[3];
  for (int k = 0; k < 3; ++k) {
    const std::string name(to_string(inverse_kinds[k]));
    const bool rate = k == 1, cg = k == 2, rule = k == 0;
    est_inverse_cmd[k] = estimate_cmd->add_subcommand(name, inverse_help[k]);
    add_inverse_flags(est_inverse_cmd[k], est_inverse[k], rate, cg, rule);
    rep_inverse_cmd[k] = replicate_cmd->add_subcommand(name, inverse_help[k]);
    add_inverse_flags(rep_inverse_cmd[k], rep_inverse[k], rate, cg, rule);
    add_replicate_flags(rep_inverse_cmd[k], rep_flags[k]);
  }
  BoostFlags est_boost, rep_boost;
  auto* est_boost_cmd = estimate_cmd->add_subcommand("boost", "L2-boosting (orthogonal matching pursuit)");
  add_boost_flags(est_boost_cmd, est_boost);
  auto* rep_boost_cmd = replicate_cmd->add_subcommand("boost", "L2-boosting (orthogonal matching pursuit)");
  add_boost_flags(rep_boost_cmd, rep_boost);
  add_replicate_flags(rep_boost_cmd, rep_flags[3]);
  TreeFlags est_tree, rep_tree;
  auto* est_tree_cmd = estimate_cmd->add_subcommand("tree", "breadth-first regression tree");
  add_tree_flags(est_tree_cmd, est_tree);
  auto* rep_tree_cmd = replicate_cmd->add_subcommand("tree", "breadth-first regression tree");
  add_tree_flags(rep_tree_cmd, rep_tree);
  add_replicate_flags(rep_tree_cmd, rep_flags[4]);

  CompareFlags compare;
  compare.inverse.problem = "phillips";
  compare.inverse.n = 100;
  compare.inverse.delta = 0.1;
  compare.inverse.max_iter = 10000;
  auto* compare_cmd = app.add_subcommand("compare", "tSVD / Landweber / CG stopping times on a test problem");
  compare_cmd->add_option("--problem", compare.inverse.problem, "phillips | gravity")
      ->check(CLI::IsMember({"phillips", "gravity"}));
  compare_cmd->add_option("--n", compare.inverse.n, "problem size")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--delta", compare.inverse.delta, "noise level")->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--depth", compare.inverse.depth, "gravity depth")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--kappa", compare.inverse.kappa, "critical value (default n*delta^2)");
  compare_cmd->add_option("--max-iter", compare.inverse.max_iter, "maximal iteration");
  compare_cmd->add_option("--seed", compare.inverse.seed, "base seed");
  compare_cmd->add_option("--mc-runs", compare.replicate.mc_runs, "Monte-Carlo replications")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--cores", compare.replicate.cores, "parallel replications")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--out", compare.replicate.out, "output prefix, one CSV per estimator")->required();
  compare_cmd->add_flag("--timing", compare.replicate.timing, "add per-replication wall time");
  compare_cmd->add_flag("--oracles", compare.oracles, "also compute deterministic oracles (slow for Landweber)");

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "seconds for a fixed number of iterations per problem");
  bench_cmd->add_option("--n", bench.n, "problem size (multiple of 4)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iters", bench.iters, "iterations per estimator")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--delta", bench.delta, "noise level")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", bench.seed, "seed");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> raw;
    for (auto& a : args) raw.push_back(a.data());
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (datagen_cmd->parsed()) return run_datagen(datagen);
    for (int k = 0; k < 3; ++k) {
      if (est_inverse_cmd[k]->parsed()) return estimate_inverse(inverse_kinds[k], est_inverse[k]);
      if (rep_inverse_cmd[k]->parsed()) return replicate_inverse(inverse_kinds[k], rep_inverse[k], rep_flags[k]);
    }
    if (est_boost_cmd->parsed()) return estimate_boost(est_boost);
    if (rep_boost_cmd->parsed()) return replicate_boost(rep_boost, rep_flags[3]);
    if (est_tree_cmd->parsed()) return estimate_tree(est_tree);
    if (rep_tree_cmd->parsed()) return replicate_tree(rep_tree, rep_flags[4]);
    if (compare_cmd->parsed()) return run_compare(compare);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
