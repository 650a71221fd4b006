#pragma once

#include "earlystop/estimator_core.hpp"
#include "earlystop/linalg.hpp"

#include <optional>
#include <vector>

namespace earlystop {

struct LandweberOptions {
  /// Step size omega; defaults to 1 / ||A||^2.
  std::optional<double> learning_rate;
  bool keep_estimates = true;
};

/// Gradient descent on ||Y - A f||^2 started at zero:
///   f^(m+1) = f^(m) + omega A^T (Y - A f^(m)).
/// With a true signal the bias is tracked recursively; with a noise level as
/// well the variance is tracked through powers of B = I - omega A^T A
/// (per singular value for diagonal designs, as p x p matrices otherwise).
class Landweber {
 public:
  Landweber(DesignMatrix design, Vector response, std::optional<Vector> true_signal = std::nullopt,
            std::optional<double> noise_level = std::nullopt, LandweberOptions options = {});

  void iterate(std::size_t number_of_iterations);

  std::size_t iteration() const { return log_.iteration(); }
  double learning_rate() const { return learning_rate_; }
  bool diagonal_mode() const { return design_.is_diagonal(); }

  /// Needs keep_estimates for m < iteration().
  const Vector& estimate(std::size_t m) const;
  const Vector& current_estimate() const { return estimate_; }
  const std::vector<double>& residuals() const { return log_.residual_norm2(); }

  StopIndex discrepancy_stop(double critical_value, std::size_t max_iteration);
  StopIndex weak_balanced_oracle(std::size_t max_iteration);
  StopIndex strong_balanced_oracle(std::size_t max_iteration);
  std::size_t strong_classical_oracle(std::size_t max_iteration);
  std::size_t weak_classical_oracle(std::size_t max_iteration);

  const OracleTrack& oracle() const;
  bool has_oracle() const { return oracle_.has_value(); }

  const std::vector<double>& strong_empirical_error() const;
  const std::vector<double>& weak_empirical_error() const;

 private:
  bool advance();
  void record();

  DesignMatrix design_;
  Vector response_;
  std::optional<Vector> true_signal_;
  std::optional<double> noise_level_;
  double learning_rate_ = 0.0;

  IterateLog log_;
  Vector estimate_;
  Vector residual_vector_;

  Vector bias_vector_;  // f* - E f^(m) = B^m f*
  Vector signal_image_;
  std::vector<double> strong_error_;
  std::vector<double> weak_error_;
  std::optional<OracleTrack> oracle_;

  // diagonal variance: q_j^m and partial sums sum_{i<m} q_j^i
  Vector contraction_;
  Vector contraction_power_;
  Vector contraction_sum_;
  // dense variance: B, B^m and sum_{i<m} B^i
  Matrix step_matrix_;
  Matrix power_;
  Matrix power_sum_;
};

}  // namespace earlystop
