#include "earlystop/landweber.hpp"

#include "earlystop/errors.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

namespace earlystop {

namespace {

void warn_boundary_step() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    std::cerr << "warning: Landweber learning rate equals 1/||A||^2; convergence is not strict\n";
  });
}

}  // namespace

Landweber::Landweber(DesignMatrix design, Vector response, std::optional<Vector> true_signal,
                     std::optional<double> noise_level, LandweberOptions options)
    : design_(std::move(design)),
      response_(std::move(response)),
      true_signal_(std::move(true_signal)),
      noise_level_(noise_level),
      log_(options.keep_estimates) {
  require(static_cast<std::size_t>(response_.size()) == design_.rows(), "response length must equal design rows");
  require(!true_signal_ || static_cast<std::size_t>(true_signal_->size()) == design_.cols(),
          "true signal length must equal design columns");
  require(!noise_level_ || *noise_level_ >= 0.0, "noise level must be nonnegative");

  const double norm = design_.is_diagonal() ? design_.lambda().maxCoeff() : spectral_norm(design_);
  const double bound = 1.0 / (norm * norm);
  if (options.learning_rate) {
    const double omega = *options.learning_rate;
    require(std::isfinite(omega) && omega > 0.0, "learning rate must be positive");
    require(omega <= bound * (1.0 + 1e-12), "learning rate must not exceed 1/||A||^2");
    if (omega >= bound * (1.0 - 1e-12)) warn_boundary_step();
    learning_rate_ = omega;
  } else {
    learning_rate_ = bound;
  }

  const auto p = static_cast<Eigen::Index>(design_.cols());
  estimate_ = Vector::Zero(p);
  residual_vector_ = response_;

  if (true_signal_) {
    bias_vector_ = *true_signal_;
    signal_image_ = design_.apply(*true_signal_);
    if (noise_level_) {
      oracle_.emplace();
      if (design_.is_diagonal()) {
        const Vector& lambda = design_.lambda();
        contraction_ = (1.0 - learning_rate_ * lambda.array().square()).matrix();
        contraction_power_ = Vector::Ones(p);
        contraction_sum_ = Vector::Zero(p);
      } else {
        const Matrix& a = design_.entries();
        step_matrix_ = Matrix::Identity(p, p) - learning_rate_ * (a.transpose() * a);
        power_ = Matrix::Identity(p, p);
        power_sum_ = Matrix::Zero(p, p);
      }
    }
  }
  record();
}

void Landweber::record() {
  log_.push(estimate_, residual_vector_.squaredNorm());
  if (!true_signal_) return;
  const Vector error = estimate_ - *true_signal_;
  strong_error_.push_back(error.squaredNorm());
  weak_error_.push_back(design_.apply(error).squaredNorm());
  if (!oracle_) return;

  oracle_->strong_bias2.push_back(bias_vector_.squaredNorm());
  oracle_->weak_bias2.push_back(design_.apply(bias_vector_).squaredNorm());
  const double delta2 = *noise_level_ * *noise_level_;
  if (design_.is_diagonal()) {
    // Var f_j = delta^2 (1 - q_j^m)^2 / lambda_j^2, weak adds a factor lambda_j^2
    const Vector filter = (1.0 - contraction_power_.array()).matrix();
    const Vector& lambda = design_.lambda();
    oracle_->weak_variance.push_back(delta2 * filter.squaredNorm());
    oracle_->strong_variance.push_back(delta2 * (filter.array() / lambda.array()).square().sum());
  } else {
    // S_m A^T A = (I - B^m) / omega
    const Matrix complement = Matrix::Identity(power_.rows(), power_.cols()) - power_;
    oracle_->weak_variance.push_back(delta2 * complement.squaredNorm());
    oracle_->strong_variance.push_back(delta2 * learning_rate_ * (complement.array() * power_sum_.transpose().array()).sum());
  }
}

bool Landweber::advance() {
  const Vector gradient = design_.apply_transpose(residual_vector_);
  estimate_ += learning_rate_ * gradient;
  residual_vector_ = response_ - design_.apply(estimate_);

  if (true_signal_) {
    if (design_.is_diagonal()) {
      const Vector& lambda = design_.lambda();
      bias_vector_ = (bias_vector_.array() * (1.0 - learning_rate_ * lambda.array().square())).matrix();
    } else {
      bias_vector_ -= learning_rate_ * design_.apply_transpose(design_.apply(bias_vector_));
    }
  }
  if (oracle_) {
    if (design_.is_diagonal()) {
      contraction_sum_ += contraction_power_;
      contraction_power_ = (contraction_power_.array() * contraction_.array()).matrix();
    } else {
      power_sum_ += power_;
      power_ = power_ * step_matrix_;
    }
  }
  record();
  return true;
}

void Landweber::iterate(std::size_t number_of_iterations) {
  for (std::size_t i = 0; i < number_of_iterations; ++i) advance();
}

const Vector& Landweber::estimate(std::size_t m) const {
  if (m == iteration()) return estimate_;
  return log_.estimate(m);
}

StopIndex Landweber::discrepancy_stop(double critical_value, std::size_t max_iteration) {
  return scan_discrepancy(log_.residual_norm2(), critical_value, [this] { return advance(); }, max_iteration);
}

const OracleTrack& Landweber::oracle() const {
  if (!oracle_) throw OracleUnavailable("oracle quantities need the true signal and noise level");
  return *oracle_;
}

StopIndex Landweber::weak_balanced_oracle(std::size_t max_iteration) {
  const OracleTrack& track = oracle();
  return balanced_crossing(track.weak_bias2, track.weak_variance, [this] { return advance(); }, max_iteration);
}

StopIndex Landweber::strong_balanced_oracle(std::size_t max_iteration) {
  const OracleTrack& track = oracle();
  return balanced_crossing(track.strong_bias2, track.strong_variance, [this] { return advance(); }, max_iteration);
}

std::size_t Landweber::strong_classical_oracle(std::size_t max_iteration) {
  oracle();
  if (iteration() < max_iteration) iterate(max_iteration - iteration());
  return argmin_risk(oracle_->strong_risk(), max_iteration);
}

std::size_t Landweber::weak_classical_oracle(std::size_t max_iteration) {
  oracle();
  if (iteration() < max_iteration) iterate(max_iteration - iteration());
  return argmin_risk(oracle_->weak_risk(), max_iteration);
}

const std::vector<double>& Landweber::strong_empirical_error() const {
  if (!true_signal_) throw OracleUnavailable("empirical errors need the true signal");
  return strong_error_;
}

const std::vector<double>& Landweber::weak_empirical_error() const {
  if (!true_signal_) throw OracleUnavailable("empirical errors need the true signal");
  return weak_error_;
}

}  // namespace earlystop
