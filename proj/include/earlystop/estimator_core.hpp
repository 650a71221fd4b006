#pragma once

#include "earlystop/linalg.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace earlystop {

/// A stopping coordinate. Integer rules produce whole values; interpolated
/// rules produce t = m + alpha with alpha in (0, 1].
struct StopIndex {
  double value = 0.0;
  /// False when the iteration budget ran out before the rule fired.
  bool reached = false;

  /// Largest computed iteration not exceeding value.
  std::size_t floor() const { return static_cast<std::size_t>(value); }
  /// Smallest iteration at or after value (the iterate needed to realize it).
  std::size_t ceil() const;
};

/// Per-iteration record kept by every estimator. Iteration m is stored at
/// most once; later queries read it back.
class IterateLog {
 public:
  explicit IterateLog(bool keep_estimates = true) : keep_estimates_(keep_estimates) {}

  void push(const Vector& estimate, double residual_norm2);

  /// Maximal computed iteration. Requires at least one push.
  std::size_t iteration() const { return residual_norm2_.size() - 1; }
  bool empty() const { return residual_norm2_.empty(); }
  const std::vector<double>& residual_norm2() const { return residual_norm2_; }
  bool keeps_estimates() const { return keep_estimates_; }
  /// Throws InvalidArgument if m was not computed or estimates are not kept.
  const Vector& estimate(std::size_t m) const;

 private:
  bool keep_estimates_;
  std::vector<Vector> estimates_;
  std::vector<double> residual_norm2_;
};

/// Squared bias / variance sequences in prediction (weak) and reconstruction
/// (strong) norm, indexed by iteration.
struct OracleTrack {
  std::vector<double> weak_bias2;
  std::vector<double> weak_variance;
  std::vector<double> strong_bias2;
  std::vector<double> strong_variance;

  std::vector<double> weak_risk() const;
  std::vector<double> strong_risk() const;
};

/// Advances the owning estimator by one iteration; returns false if no
/// further iterate can be produced (rank exhausted, emergency stop, ...).
using Extender = std::function<bool()>;

/// First m <= max_iteration with residual_norm2[m] <= kappa, extending the
/// log on demand. `residual_norm2` must be the estimator's live sequence.
/// On exhaustion returns reached = false and the last admissible iteration.
StopIndex scan_discrepancy(const std::vector<double>& residual_norm2, double kappa, const Extender& extend,
                           std::size_t max_iteration);

/// First m with bias2[m] <= variance[m]; same extension contract.
StopIndex balanced_crossing(const std::vector<double>& bias2, const std::vector<double>& variance,
                            const Extender& extend, std::size_t max_iteration);

/// Smallest index attaining the minimum of risk[0..upto].
std::size_t argmin_risk(std::span<const double> risk, std::size_t upto);

/// Squared norms of consecutive vectors x_m, x_{m+1} and their inner product.
/// Along the segment (1 - alpha) x_m + alpha x_{m+1} the squared norm is the
/// quadratic start - 2 alpha (start - cross) + alpha^2 (start - 2 cross + end).
struct SegmentNorms {
  double start = 0.0;
  double end = 0.0;
  double cross = 0.0;

  double at(double alpha) const;
};

/// Smallest alpha in (0, 1] with at(alpha) = kappa, given start > kappa >= end.
double segment_crossing(const SegmentNorms& segment, double kappa);

struct SegmentMinimum {
  double alpha = 0.0;
  double value = 0.0;
};
/// Minimizer of at(alpha) over [0, 1].
SegmentMinimum segment_minimum(const SegmentNorms& segment);

/// Interpolated discrepancy stop: if residual_norm2[0] <= kappa returns 0;
/// otherwise t = m + alpha on the first segment with
/// residual_norm2[m] > kappa >= residual_norm2[m + 1]. `cross[m]` holds
/// <r_m, r_{m+1}> and must grow together with the residual sequence.
StopIndex scan_interpolated_discrepancy(const std::vector<double>& residual_norm2, const std::vector<double>& cross,
                                        double kappa, const Extender& extend, std::size_t max_iteration);

/// Continuous minimizer of the interpolated squared-norm path over [0, upto].
/// Returns (t, value).
SegmentMinimum interpolated_path_minimum(const std::vector<double>& norm2, const std::vector<double>& cross,
                                         std::size_t upto);

}  // namespace earlystop
