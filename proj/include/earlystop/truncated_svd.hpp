#pragma once

#include "earlystop/estimator_core.hpp"
#include "earlystop/linalg.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace earlystop {

struct TruncatedSvdOptions {
  PowerMethodOptions power;
  /// Shared singular triplets of a dense design; built privately if absent.
  std::shared_ptr<SpectrumCache> spectrum;
};

/// Spectral cut-off estimator f^(m) = sum_{j<=m} (v_j^T Y / lambda_j) u_j.
/// Singular triplets are computed one at a time as iterations are requested:
/// diagonal designs read them off the sorted diagonal, dense designs use
/// power iteration with deflation.
class TruncatedSvd {
 public:
  TruncatedSvd(DesignMatrix design, Vector response, std::optional<Vector> true_signal = std::nullopt,
               std::optional<double> noise_level = std::nullopt, TruncatedSvdOptions options = {});

  /// Throws RankExhausted if this would go past min(n, p).
  void iterate(std::size_t number_of_iterations);

  std::size_t iteration() const { return residuals_.size() - 1; }
  std::size_t max_rank() const { return max_rank_; }
  bool diagonal_mode() const { return design_.is_diagonal(); }

  Vector estimate(std::size_t m) const;
  const std::vector<double>& residuals() const { return residuals_; }
  const std::vector<double>& singular_values() const { return sigma_; }

  StopIndex discrepancy_stop(double critical_value, std::size_t max_iteration);
  StopIndex weak_balanced_oracle(std::size_t max_iteration);
  StopIndex strong_balanced_oracle(std::size_t max_iteration);

  /// argmin of the strong / weak risk over 0..max_iteration (iterates as needed).
  std::size_t strong_classical_oracle(std::size_t max_iteration);
  std::size_t weak_classical_oracle(std::size_t max_iteration);

  /// argmin over 0 <= m <= stop of
  ///   -sum_{i<=m} lambda_i^-2 <Y, v_i>^2 + 2 delta^2 sum_{i<=m} lambda_i^-2.
  /// Uses the stored noise level unless `delta` is given.
  std::size_t aic_two_step(const StopIndex& stop, std::optional<double> delta = std::nullopt);

  /// Throws OracleUnavailable without true signal and noise level.
  const OracleTrack& oracle() const;
  bool has_oracle() const { return oracle_.has_value(); }

  /// ||f^(m) - f*||^2 and ||A(f^(m) - f*)||^2 per iteration (needs the true signal).
  const std::vector<double>& strong_empirical_error() const;
  const std::vector<double>& weak_empirical_error() const;

 private:
  bool advance();

  DesignMatrix design_;
  Vector response_;
  std::optional<Vector> true_signal_;
  std::optional<double> noise_level_;
  std::size_t max_rank_;

  // diagonal mode: permutation sorting lambda in decreasing order plus suffix sums
  std::vector<Eigen::Index> order_;
  std::vector<double> residual_tail_;
  std::vector<double> weak_bias_tail_;
  std::vector<double> strong_bias_tail_;

  // dense mode
  std::shared_ptr<SpectrumCache> spectrum_;
  std::vector<Vector> right_;
  Vector residual_vector_;
  Vector bias_vector_;       // f* - P_m f*
  Vector weak_bias_vector_;  // A f* - A P_m f*
  Vector current_estimate_;
  Vector signal_image_;      // A f*

  std::vector<double> sigma_;
  std::vector<double> coefficient_;   // v_j^T Y / lambda_j
  std::vector<double> projection2_;   // (v_j^T Y)^2
  std::vector<double> residuals_;
  std::vector<double> strong_error_;
  std::vector<double> weak_error_;
  std::optional<OracleTrack> oracle_;
  double inverse_sigma2_sum_ = 0.0;
};

}  // namespace earlystop
