#pragma once

#include "earlystop/datagen.hpp"
#include "earlystop/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace earlystop {

enum class EstimatorKind { tsvd, landweber, cg, boost, tree };
enum class StopRule { discrepancy, two_step, residual_ratio, residual_ratio_two_step, adaptive_discrepancy };

EstimatorKind parse_estimator_kind(std::string_view name);
StopRule parse_stop_rule(std::string_view name);
std::string_view to_string(EstimatorKind kind);
std::string_view to_string(StopRule rule);

/// Y = A f* + delta eps with a fixed design and signal.
struct InverseSetup {
  DesignMatrix design;
  Vector true_signal;
  double noise_level = 0.0;
  /// Defaults to n delta^2.
  std::optional<double> kappa;
  std::optional<double> learning_rate;
  bool interpolate = false;
  double cg_threshold = 1e-8;
  /// Compute the deterministic oracle quantities (balanced / classical
  /// oracles, theoretical risks) once per simulation.
  bool oracles = true;
};

/// Y = X beta* + sigma eps with a fixed design.
struct BoostSetup {
  Matrix covariates;
  Vector coefficients;
  double sigma = 1.0;
  double residual_ratio_K = 1.2;
  double residual_ratio_alpha = 0.95;
  double aic_K = 2.0;
};

/// Additive model with a fresh training and test sample per replication.
struct TreeSetup {
  AdditiveKind kind = AdditiveKind::smooth;
  std::size_t n = 1000;
  double sigma = 1.0;
  /// Defaults to sigma^2.
  std::optional<double> kappa;
  bool interpolate = false;
  std::size_t test_size = 1000;
};

struct SimulationParameters {
  EstimatorKind estimator = EstimatorKind::tsvd;
  StopRule rule = StopRule::discrepancy;
  std::variant<std::monostate, InverseSetup, BoostSetup, TreeSetup> setup;
  std::size_t monte_carlo_runs = 1;
  std::size_t cores = 1;
  std::size_t max_iteration = 1000;
  std::uint64_t base_seed = 0;

  /// Throws InvalidArgument on inconsistent input.
  void validate() const;
};

/// One replication. Quantities that are undefined for the estimator are NaN.
/// Errors are squared norms: weak = prediction error, strong = reconstruction
/// error (inverse problems only). Efficiencies are sqrt(min error / error at stop).
struct SimulationRecord {
  std::size_t replication_id = 0;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::tsvd;
  StopRule stop_rule = StopRule::discrepancy;
  double stop_value = 0.0;
  bool reached = false;
  double weak_balanced_oracle = 0.0;
  double strong_balanced_oracle = 0.0;
  double classical_oracle_weak = 0.0;
  double classical_oracle_strong = 0.0;
  double error_at_stop_weak = 0.0;
  double error_at_stop_strong = 0.0;
  double min_error_weak = 0.0;
  double min_error_strong = 0.0;
  double relative_efficiency_weak = 0.0;
  double relative_efficiency_strong = 0.0;
  /// Minimal expected risk along the path (deterministic, inverse problems).
  double min_risk_weak = 0.0;
  double min_risk_strong = 0.0;
  double wall_time_ms = 0.0;
  std::string error;
};

/// Runs all replications, up to `cores` at a time; replication i uses seed
/// base_seed + i. The result is sorted by replication id and does not depend
/// on the number of cores.
std::vector<SimulationRecord> run(const SimulationParameters& params);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
/// Linear-interpolation quantiles of the finite entries (NaN if none).
Quartiles quartiles(std::vector<double> values);

struct SummaryRow {
  EstimatorKind estimator = EstimatorKind::tsvd;
  StopRule stop_rule = StopRule::discrepancy;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Quartiles stop_value;
  Quartiles stop_to_oracle;  // stop / weak balanced oracle
  Quartiles efficiency_weak;
  Quartiles efficiency_strong;
  /// sqrt(min expected risk / mean error at stop).
  double expected_efficiency_weak = 0.0;
  double expected_efficiency_strong = 0.0;
};

/// One row per (estimator, rule) present in `records`.
std::vector<SummaryRow> aggregate(const std::vector<SimulationRecord>& records);

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Metadata lines `# key=value` followed by a header and one row per record.
/// Wall time is only written when `include_timing` is set so that output stays
/// reproducible.
void write_records_csv(std::ostream& out, const std::vector<SimulationRecord>& records, const Metadata& metadata,
                       bool include_timing = false);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double value);

}  // namespace earlystop
