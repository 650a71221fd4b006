#pragma once

#include "earlystop/estimator_core.hpp"
#include "earlystop/linalg.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace earlystop {

struct ConjugateGradientsOptions {
  /// Emergency stop once ||A^T r||^2 falls below this value.
  double computation_threshold = 1e-8;
  bool keep_estimates = true;
};

/// Conjugate gradients on the normal equation A^T A f = A^T Y (CGLS form),
/// started at zero. Iterations never exceed d = min(n, p).
class ConjugateGradients {
 public:
  ConjugateGradients(DesignMatrix design, Vector response, std::optional<Vector> true_signal = std::nullopt,
                     ConjugateGradientsOptions options = {});

  /// Advances up to number_of_iterations steps; stops silently once terminated.
  void iterate(std::size_t number_of_iterations);

  std::size_t iteration() const { return log_.iteration(); }
  std::size_t max_iteration() const { return max_iteration_; }
  /// True once the emergency stop fired or d iterations were done.
  bool terminated() const { return terminated_; }
  bool emergency_stop() const { return emergency_; }

  const Vector& estimate(std::size_t m) const;
  const Vector& current_estimate() const { return estimate_; }
  /// (1 - alpha) f^(m) + alpha f^(m+1) for t = m + alpha.
  Vector interpolated_estimate(double t) const;

  const std::vector<double>& residuals() const { return log_.residual_norm2(); }
  /// <r^(m), r^(m+1)>, one entry per completed step.
  const std::vector<double>& residual_cross() const { return residual_cross_; }
  /// ||A^T r^(m)||^2 per iteration.
  const std::vector<double>& gram_residuals() const { return gram_residual_; }

  StopIndex discrepancy_stop(double critical_value, std::size_t max_iteration, bool interpolation = false);

  /// argmin of the empirical error along the path 0..max_iteration; with
  /// interpolation the minimum runs over the piecewise linear path.
  StopIndex strong_empirical_oracle(std::size_t max_iteration, bool interpolation = false);
  StopIndex weak_empirical_oracle(std::size_t max_iteration, bool interpolation = false);

  /// Recorded ||f^(m) - f*||^2 and ||A(f^(m) - f*)||^2 after iterating to max_iteration.
  std::pair<std::vector<double>, std::vector<double>> empirical_risks(std::size_t max_iteration);

  /// Error at a fractional index from the stored segment cross products.
  double strong_error_at(double t) const;
  double weak_error_at(double t) const;

  const std::vector<double>& strong_empirical_error() const;
  const std::vector<double>& weak_empirical_error() const;

 private:
  bool advance();
  void require_signal() const;
  static double value_at(const std::vector<double>& norm2, const std::vector<double>& cross, double t);

  DesignMatrix design_;
  Vector response_;
  std::optional<Vector> true_signal_;
  double threshold_;
  std::size_t max_iteration_;
  bool terminated_ = false;
  bool emergency_ = false;

  IterateLog log_;
  Vector estimate_;
  Vector residual_vector_;
  Vector gram_residual_vector_;
  Vector direction_;
  double gamma_ = 0.0;

  std::vector<double> gram_residual_;
  std::vector<double> residual_cross_;

  Vector signal_image_;
  Vector strong_error_vector_;
  Vector weak_error_vector_;
  std::vector<double> strong_error_;
  std::vector<double> weak_error_;
  std::vector<double> strong_cross_;
  std::vector<double> weak_cross_;
};

}  // namespace earlystop
