#pragma once

#include "earlystop/estimator_core.hpp"
#include "earlystop/linalg.hpp"

#include <optional>
#include <vector>

namespace earlystop {

struct NoiseEstimate {
  double sigma_hat2 = 0.0;
  Vector lasso_coefficients;
  std::size_t iterations_used = 0;
  bool converged = true;
};

struct ScaledLassoOptions {
  double tolerance = 1e-6;
  std::size_t max_rounds = 50;
  /// Coordinate descent sweeps stop when no coefficient moves more than this.
  double sweep_tolerance = 1e-10;
  std::size_t max_sweeps = 1000;
};

/// Scaled lasso: alternates sigma = ||Y - X beta||_n and a lasso with penalty
/// sqrt(2 log p / n) * sigma, solved by cyclic coordinate descent on
/// internally normalized columns. Starts from sigma = ||Y||_n.
NoiseEstimate scaled_lasso(const Matrix& covariates, const Vector& response, const ScaledLassoOptions& options = {});

/// L2-boosting in its orthogonal matching pursuit form. All norms are
/// empirical: ||a||_n^2 = |a|^2 / n.
class L2Boost {
 public:
  L2Boost(Matrix covariates, Vector response, std::optional<Vector> true_coefficients = std::nullopt,
          ScaledLassoOptions lasso = {});

  /// Stops early (without error) if no independent column remains.
  void iterate(std::size_t number_of_iterations);

  std::size_t iteration() const { return residuals_.size() - 1; }
  std::size_t max_iteration() const { return max_iteration_; }
  /// Set when a dependent column could not be replaced.
  bool stalled() const { return stalled_; }

  const std::vector<std::size_t>& selected() const { return selected_; }
  const std::vector<double>& residuals() const { return residuals_; }
  Vector fitted_values(std::size_t m) const;
  /// Least squares coefficients on the first m selected columns.
  Vector coefficients(std::size_t m) const;

  const std::vector<double>& bias2() const;
  const std::vector<double>& stochastic_error() const;
  std::vector<double> risk() const;
  StopIndex balanced_oracle(std::size_t max_iteration);
  std::size_t classical_oracle(std::size_t max_iteration);

  /// Computed once and memoized.
  const NoiseEstimate& noise_estimate();

  StopIndex discrepancy_stop(double critical_value, std::size_t max_iteration);
  /// kappa_m = sigma_hat^2 + slope * sigma_hat^2 * m, slope defaulting to 8 log n.
  StopIndex adaptive_discrepancy_stop(std::size_t max_iteration, std::optional<double> slope = std::nullopt);
  /// First m with ||Y - f^(m+1)||_n^2 / ||Y - f^(m)||_n^2 >= 1 - 4K log(2p/alpha)/n.
  StopIndex residual_ratio_stop(std::size_t max_iteration, double K = 1.2, double alpha = 0.95);
  /// argmin_{0<=m<=max_iteration} ||Y - f^(m)||_n^2 + K sigma_hat^2 m log(p) / n.
  std::size_t aic_iteration(std::size_t max_iteration, double K = 2.0);

 private:
  bool advance();
  std::optional<std::size_t> select() const;

  Matrix covariates_;
  Vector response_;
  std::optional<Vector> true_coefficients_;
  ScaledLassoOptions lasso_options_;
  std::size_t n_;
  std::size_t p_;
  std::size_t max_iteration_;
  bool stalled_ = false;

  Vector column_norms_;
  std::vector<bool> unavailable_;
  std::vector<std::size_t> selected_;
  std::vector<Vector> basis_;
  std::vector<double> response_coordinate_;  // <q_k, Y>
  Vector residual_vector_;
  std::vector<double> residuals_;

  Vector bias_vector_;  // (I - P_m) f*
  Vector noise_;        // Y - X beta*
  std::vector<double> bias2_;
  std::vector<double> stochastic_;

  std::optional<NoiseEstimate> noise_estimate_;
};

}  // namespace earlystop
