#include "earlystop/conjugate_gradients.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <cmath>

namespace earlystop {

ConjugateGradients::ConjugateGradients(DesignMatrix design, Vector response, std::optional<Vector> true_signal,
                                       ConjugateGradientsOptions options)
    : design_(std::move(design)),
      response_(std::move(response)),
      true_signal_(std::move(true_signal)),
      threshold_(options.computation_threshold),
      max_iteration_(std::min(design_.rows(), design_.cols())),
      log_(options.keep_estimates) {
  require(static_cast<std::size_t>(response_.size()) == design_.rows(), "response length must equal design rows");
  require(!true_signal_ || static_cast<std::size_t>(true_signal_->size()) == design_.cols(),
          "true signal length must equal design columns");
  require(threshold_ > 0.0, "computation threshold must be positive");

  estimate_ = Vector::Zero(static_cast<Eigen::Index>(design_.cols()));
  residual_vector_ = response_;
  gram_residual_vector_ = design_.apply_transpose(residual_vector_);
  direction_ = gram_residual_vector_;
  gamma_ = gram_residual_vector_.squaredNorm();
  gram_residual_.push_back(gamma_);
  log_.push(estimate_, residual_vector_.squaredNorm());

  if (true_signal_) {
    signal_image_ = design_.apply(*true_signal_);
    strong_error_vector_ = -*true_signal_;
    weak_error_vector_ = -signal_image_;
    strong_error_.push_back(strong_error_vector_.squaredNorm());
    weak_error_.push_back(weak_error_vector_.squaredNorm());
  }
}

bool ConjugateGradients::advance() {
  if (terminated_) return false;
  if (iteration() >= max_iteration_) {
    terminated_ = true;
    return false;
  }
  if (gamma_ < threshold_) {
    terminated_ = true;
    emergency_ = true;
    return false;
  }
  const Vector image = design_.apply(direction_);
  const double image_norm2 = image.squaredNorm();
  if (!(image_norm2 > 0.0)) {
    terminated_ = true;
    emergency_ = true;
    return false;
  }
  const double alpha = gamma_ / image_norm2;
  estimate_ += alpha * direction_;
  const Vector previous_residual = residual_vector_;
  residual_vector_ -= alpha * image;
  residual_cross_.push_back(previous_residual.dot(residual_vector_));

  gram_residual_vector_ = design_.apply_transpose(residual_vector_);
  const double gamma_next = gram_residual_vector_.squaredNorm();
  direction_ = gram_residual_vector_ + (gamma_next / gamma_) * direction_;
  gamma_ = gamma_next;
  gram_residual_.push_back(gamma_);
  log_.push(estimate_, residual_vector_.squaredNorm());

  if (true_signal_) {
    const Vector strong_next = estimate_ - *true_signal_;
    const Vector weak_next = (response_ - residual_vector_) - signal_image_;
    strong_cross_.push_back(strong_error_vector_.dot(strong_next));
    weak_cross_.push_back(weak_error_vector_.dot(weak_next));
    strong_error_vector_ = strong_next;
    weak_error_vector_ = weak_next;
    strong_error_.push_back(strong_error_vector_.squaredNorm());
    weak_error_.push_back(weak_error_vector_.squaredNorm());
  }
  return true;
}

void ConjugateGradients::iterate(std::size_t number_of_iterations) {
  for (std::size_t i = 0; i < number_of_iterations; ++i)
    if (!advance()) break;
}

const Vector& ConjugateGradients::estimate(std::size_t m) const {
  if (m == iteration()) return estimate_;
  return log_.estimate(m);
}

Vector ConjugateGradients::interpolated_estimate(double t) const {
  require(t >= 0.0 && t <= static_cast<double>(iteration()), "index outside the computed path");
  const auto m = static_cast<std::size_t>(std::floor(t));
  const double alpha = t - static_cast<double>(m);
  if (alpha == 0.0) return estimate(m);
  return (1.0 - alpha) * estimate(m) + alpha * estimate(m + 1);
}

StopIndex ConjugateGradients::discrepancy_stop(double critical_value, std::size_t max_iteration, bool interpolation) {
  const auto extend = [this] { return advance(); };
  if (!interpolation) return scan_discrepancy(log_.residual_norm2(), critical_value, extend, max_iteration);
  return scan_interpolated_discrepancy(log_.residual_norm2(), residual_cross_, critical_value, extend, max_iteration);
}

void ConjugateGradients::require_signal() const {
  if (!true_signal_) throw OracleUnavailable("empirical oracle quantities need the true signal");
}

StopIndex ConjugateGradients::strong_empirical_oracle(std::size_t max_iteration, bool interpolation) {
  require_signal();
  if (iteration() < max_iteration) iterate(max_iteration - iteration());
  const std::size_t upto = std::min(max_iteration, iteration());
  if (!interpolation) return {static_cast<double>(argmin_risk(strong_error_, upto)), true};
  return {interpolated_path_minimum(strong_error_, strong_cross_, upto).alpha, true};
}

StopIndex ConjugateGradients::weak_empirical_oracle(std::size_t max_iteration, bool interpolation) {
  require_signal();
  if (iteration() < max_iteration) iterate(max_iteration - iteration());
  const std::size_t upto = std::min(max_iteration, iteration());
  if (!interpolation) return {static_cast<double>(argmin_risk(weak_error_, upto)), true};
  return {interpolated_path_minimum(weak_error_, weak_cross_, upto).alpha, true};
}

std::pair<std::vector<double>, std::vector<double>> ConjugateGradients::empirical_risks(std::size_t max_iteration) {
  require_signal();
  if (iteration() < max_iteration) iterate(max_iteration - iteration());
  const std::size_t count = std::min(max_iteration, iteration()) + 1;
  return {std::vector<double>(strong_error_.begin(), strong_error_.begin() + static_cast<std::ptrdiff_t>(count)),
          std::vector<double>(weak_error_.begin(), weak_error_.begin() + static_cast<std::ptrdiff_t>(count))};
}

double ConjugateGradients::value_at(const std::vector<double>& norm2, const std::vector<double>& cross, double t) {
  require(t >= 0.0 && t <= static_cast<double>(norm2.size() - 1), "index outside the computed path");
  const auto m = static_cast<std::size_t>(std::floor(t));
  const double alpha = t - static_cast<double>(m);
  if (alpha == 0.0) return norm2[m];
  return SegmentNorms{norm2[m], norm2[m + 1], cross[m]}.at(alpha);
}

double ConjugateGradients::strong_error_at(double t) const {
  require_signal();
  return value_at(strong_error_, strong_cross_, t);
}

double ConjugateGradients::weak_error_at(double t) const {
  require_signal();
  return value_at(weak_error_, weak_cross_, t);
}

const std::vector<double>& ConjugateGradients::strong_empirical_error() const {
  require_signal();
  return strong_error_;
}

const std::vector<double>& ConjugateGradients::weak_empirical_error() const {
  require_signal();
  return weak_error_;
}

}  // namespace earlystop
