#include "earlystop/l2_boost.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <cmath>

namespace earlystop {

NoiseEstimate scaled_lasso(const Matrix& covariates, const Vector& response, const ScaledLassoOptions& options) {
  const auto n = covariates.rows();
  const auto p = covariates.cols();
  require(response.size() == n, "response length must equal covariate rows");
  require(n > 0 && p > 0, "empty design");
  const double dn = static_cast<double>(n);

  Vector scale(p);
  Matrix normalized(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale[j] = covariates.col(j).norm() / std::sqrt(dn);
    normalized.col(j) = scale[j] > 0.0 ? Vector(covariates.col(j) / scale[j]) : Vector::Zero(n);
  }

  NoiseEstimate result;
  result.lasso_coefficients = Vector::Zero(p);
  double sigma = response.norm() / std::sqrt(dn);
  if (sigma == 0.0) return result;

  const double lambda0 = std::sqrt(2.0 * std::log(static_cast<double>(p)) / dn);
  Vector beta = Vector::Zero(p);
  Vector residual = response;
  result.converged = false;
  for (std::size_t round = 1; round <= options.max_rounds; ++round) {
    const double penalty = lambda0 * sigma;
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
      double largest_move = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (scale[j] == 0.0) continue;
        const double z = normalized.col(j).dot(residual) / dn + beta[j];
        const double updated = std::copysign(std::max(std::abs(z) - penalty, 0.0), z);
        const double move = updated - beta[j];
        if (move != 0.0) {
          residual -= move * normalized.col(j);
          beta[j] = updated;
          largest_move = std::max(largest_move, std::abs(move));
        }
      }
      if (largest_move <= options.sweep_tolerance) break;
    }
    const double next = residual.norm() / std::sqrt(dn);
    result.iterations_used = round;
    const bool done = std::abs(next - sigma) < options.tolerance;
    sigma = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.sigma_hat2 = sigma * sigma;
  for (Eigen::Index j = 0; j < p; ++j)
    result.lasso_coefficients[j] = scale[j] > 0.0 ? beta[j] / scale[j] : 0.0;
  return result;
}

L2Boost::L2Boost(Matrix covariates, Vector response, std::optional<Vector> true_coefficients, ScaledLassoOptions lasso)
    : covariates_(std::move(covariates)),
      response_(std::move(response)),
      true_coefficients_(std::move(true_coefficients)),
      lasso_options_(lasso),
      n_(static_cast<std::size_t>(covariates_.rows())),
      p_(static_cast<std::size_t>(covariates_.cols())),
      max_iteration_(std::min(n_, p_)) {
  require(n_ > 0 && p_ > 0, "empty design");
  require(covariates_.allFinite() && response_.allFinite(), "inputs must be finite");
  require(static_cast<std::size_t>(response_.size()) == n_, "response length must equal covariate rows");
  require(!true_coefficients_ || static_cast<std::size_t>(true_coefficients_->size()) == p_,
          "coefficient length must equal covariate columns");

  column_norms_ = covariates_.colwise().norm().transpose();
  unavailable_.assign(p_, false);
  for (std::size_t j = 0; j < p_; ++j)
    if (column_norms_[static_cast<Eigen::Index>(j)] == 0.0) unavailable_[j] = true;

  residual_vector_ = response_;
  residuals_.push_back(residual_vector_.squaredNorm() / static_cast<double>(n_));
  if (true_coefficients_) {
    bias_vector_ = covariates_ * *true_coefficients_;
    noise_ = response_ - bias_vector_;
    bias2_.push_back(bias_vector_.squaredNorm() / static_cast<double>(n_));
    stochastic_.push_back(0.0);
  }
}

std::optional<std::size_t> L2Boost::select() const {
  const Vector correlation = covariates_.transpose() * residual_vector_;
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t j = 0; j < p_; ++j) {
    if (unavailable_[j]) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    const double score = std::abs(correlation[jj]) / column_norms_[jj];
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

bool L2Boost::advance() {
  if (stalled_ || iteration() >= max_iteration_) return false;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto chosen = select();
    if (!chosen) break;
    const std::size_t j = *chosen;
    const auto jj = static_cast<Eigen::Index>(j);

    Vector q = covariates_.col(jj);
    const double original = column_norms_[jj];
    for (int pass = 0; pass < 2; ++pass) {
      const double before = q.norm();
      for (const Vector& b : basis_) q -= b.dot(q) * b;
      if (q.norm() >= 0.5 * before) break;
    }
    unavailable_[j] = true;
    const double norm = q.norm();
    if (norm < 1e-8 * original) continue;
    q /= norm;

    const double coordinate = q.dot(response_);
    residual_vector_ -= q.dot(residual_vector_) * q;
    selected_.push_back(j);
    response_coordinate_.push_back(coordinate);
    residuals_.push_back(residual_vector_.squaredNorm() / static_cast<double>(n_));
    if (true_coefficients_) {
      bias_vector_ -= q.dot(bias_vector_) * q;
      const double noise_coordinate = q.dot(noise_);
      bias2_.push_back(bias_vector_.squaredNorm() / static_cast<double>(n_));
      stochastic_.push_back(stochastic_.back() + noise_coordinate * noise_coordinate / static_cast<double>(n_));
    }
    basis_.push_back(std::move(q));
    return true;
  }
  stalled_ = true;
  return false;
}

void L2Boost::iterate(std::size_t number_of_iterations) {
  for (std::size_t i = 0; i < number_of_iterations; ++i)
    if (!advance()) break;
}

Vector L2Boost::fitted_values(std::size_t m) const {
  require(m <= iteration(), "requested iteration has not been computed");
  Vector fitted = Vector::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t k = 0; k < m; ++k) fitted += response_coordinate_[k] * basis_[k];
  return fitted;
}

Vector L2Boost::coefficients(std::size_t m) const {
  require(m <= iteration(), "requested iteration has not been computed");
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p_));
  if (m == 0) return beta;
  Matrix block(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k)
    block.col(static_cast<Eigen::Index>(k)) = covariates_.col(static_cast<Eigen::Index>(selected_[k]));
  const Vector solution = block.colPivHouseholderQr().solve(response_);
  for (std::size_t k = 0; k < m; ++k)
    beta[static_cast<Eigen::Index>(selected_[k])] = solution[static_cast<Eigen::Index>(k)];
  return beta;
}

const std::vector<double>& L2Boost::bias2() const {
  if (!true_coefficients_) throw OracleUnavailable("bias needs the true coefficients");
  return bias2_;
}

const std::vector<double>& L2Boost::stochastic_error() const {
  if (!true_coefficients_) throw OracleUnavailable("stochastic error needs the true coefficients");
  return stochastic_;
}

std::vector<double> L2Boost::risk() const {
  const auto& b = bias2();
  std::vector<double> total(b.size());
  for (std::size_t m = 0; m < b.size(); ++m) total[m] = b[m] + stochastic_[m];
  return total;
}

StopIndex L2Boost::balanced_oracle(std::size_t max_iteration) {
  bias2();
  return balanced_crossing(bias2_, stochastic_, [this] { return advance(); }, std::min(max_iteration, max_iteration_));
}

std::size_t L2Boost::classical_oracle(std::size_t max_iteration) {
  bias2();
  const std::size_t upto = std::min(max_iteration, max_iteration_);
  if (iteration() < upto) iterate(upto - iteration());
  return argmin_risk(risk(), std::min(upto, iteration()));
}

const NoiseEstimate& L2Boost::noise_estimate() {
  if (!noise_estimate_) noise_estimate_ = scaled_lasso(covariates_, response_, lasso_options_);
  return *noise_estimate_;
}

StopIndex L2Boost::discrepancy_stop(double critical_value, std::size_t max_iteration) {
  return scan_discrepancy(residuals_, critical_value, [this] { return advance(); },
                          std::min(max_iteration, max_iteration_));
}

StopIndex L2Boost::adaptive_discrepancy_stop(std::size_t max_iteration, std::optional<double> slope) {
  const double sigma2 = noise_estimate().sigma_hat2;
  const double rate = slope.value_or(8.0 * std::log(static_cast<double>(n_)));
  const std::size_t upto = std::min(max_iteration, max_iteration_);
  for (std::size_t m = 0; m <= upto; ++m) {
    if (residuals_.size() <= m && !advance()) return {static_cast<double>(iteration()), false};
    if (residuals_[m] <= sigma2 + rate * sigma2 * static_cast<double>(m)) return {static_cast<double>(m), true};
  }
  return {static_cast<double>(upto), false};
}

StopIndex L2Boost::residual_ratio_stop(std::size_t max_iteration, double K, double alpha) {
  require(K > 0.0, "K must be positive");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  const double threshold =
      1.0 - 4.0 * K * std::log(2.0 * static_cast<double>(p_) / alpha) / static_cast<double>(n_);
  const std::size_t upto = std::min(max_iteration, max_iteration_);
  for (std::size_t m = 0; m <= upto; ++m) {
    if (residuals_[m] == 0.0) return {static_cast<double>(m), true};
    if (residuals_.size() <= m + 1 && !advance()) return {static_cast<double>(m), false};
    if (residuals_[m + 1] / residuals_[m] >= threshold) return {static_cast<double>(m), true};
  }
  return {static_cast<double>(upto), false};
}

std::size_t L2Boost::aic_iteration(std::size_t max_iteration, double K) {
  const double sigma2 = noise_estimate().sigma_hat2;
  const std::size_t upto = std::min(max_iteration, max_iteration_);
  if (iteration() < upto) iterate(upto - iteration());
  const double penalty = K * sigma2 * std::log(static_cast<double>(p_)) / static_cast<double>(n_);
  std::vector<double> criterion(std::min(upto, iteration()) + 1);
  for (std::size_t m = 0; m < criterion.size(); ++m) criterion[m] = residuals_[m] + penalty * static_cast<double>(m);
  return argmin_risk(criterion, criterion.size() - 1);
}

}  // namespace earlystop
