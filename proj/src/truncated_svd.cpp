#include "earlystop/truncated_svd.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <numeric>

namespace earlystop {

TruncatedSvd::TruncatedSvd(DesignMatrix design, Vector response, std::optional<Vector> true_signal,
                           std::optional<double> noise_level, TruncatedSvdOptions options)
    : design_(std::move(design)),
      response_(std::move(response)),
      true_signal_(std::move(true_signal)),
      noise_level_(noise_level),
      max_rank_(std::min(design_.rows(), design_.cols())) {
  require(static_cast<std::size_t>(response_.size()) == design_.rows(), "response length must equal design rows");
  require(!true_signal_ || static_cast<std::size_t>(true_signal_->size()) == design_.cols(),
          "true signal length must equal design columns");
  require(!noise_level_ || *noise_level_ >= 0.0, "noise level must be nonnegative");

  const bool has_signal = true_signal_.has_value();
  double signal_norm2 = 0.0;
  double image_norm2 = 0.0;

  if (design_.is_diagonal()) {
    const Vector& lambda = design_.lambda();
    order_.resize(static_cast<std::size_t>(lambda.size()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return lambda[a] > lambda[b]; });

    const std::size_t n = order_.size();
    residual_tail_.assign(n + 1, 0.0);
    if (has_signal) {
      weak_bias_tail_.assign(n + 1, 0.0);
      strong_bias_tail_.assign(n + 1, 0.0);
    }
    for (std::size_t k = n; k-- > 0;) {
      const Eigen::Index j = order_[k];
      residual_tail_[k] = residual_tail_[k + 1] + response_[j] * response_[j];
      if (has_signal) {
        const double f = (*true_signal_)[j];
        strong_bias_tail_[k] = strong_bias_tail_[k + 1] + f * f;
        weak_bias_tail_[k] = weak_bias_tail_[k + 1] + lambda[j] * lambda[j] * f * f;
      }
    }
    // m = 0 must see exactly ||Y||^2
    residual_tail_[0] = response_.squaredNorm();
    for (std::size_t k = 1; k <= n; ++k) residual_tail_[k] = std::min(residual_tail_[k], residual_tail_[k - 1]);
    residuals_.push_back(residual_tail_[0]);
    if (has_signal) {
      signal_norm2 = strong_bias_tail_[0];
      image_norm2 = weak_bias_tail_[0];
    }
  } else {
    spectrum_ = options.spectrum ? options.spectrum : std::make_shared<SpectrumCache>(design_, options.power);
    residual_vector_ = response_;
    residuals_.push_back(residual_vector_.squaredNorm());
    if (has_signal) {
      bias_vector_ = *true_signal_;
      signal_image_ = design_.apply(*true_signal_);
      weak_bias_vector_ = signal_image_;
      current_estimate_ = Vector::Zero(static_cast<Eigen::Index>(design_.cols()));
      signal_norm2 = bias_vector_.squaredNorm();
      image_norm2 = signal_image_.squaredNorm();
    }
  }

  if (has_signal) {
    strong_error_.push_back(signal_norm2);
    weak_error_.push_back(image_norm2);
    if (noise_level_) {
      oracle_.emplace();
      oracle_->strong_bias2.push_back(signal_norm2);
      oracle_->weak_bias2.push_back(image_norm2);
      oracle_->strong_variance.push_back(0.0);
      oracle_->weak_variance.push_back(0.0);
    }
  }
}

bool TruncatedSvd::advance() {
  const std::size_t k = iteration();
  if (k >= max_rank_) return false;
  const bool has_signal = true_signal_.has_value();

  double sigma = 0.0;
  double projection = 0.0;
  double strong_bias = 0.0;
  double weak_bias = 0.0;

  if (design_.is_diagonal()) {
    const Eigen::Index j = order_[k];
    sigma = design_.lambda()[j];
    projection = response_[j];
    const double coefficient = projection / sigma;
    residuals_.push_back(residual_tail_[k + 1]);
    if (has_signal) {
      const double f = (*true_signal_)[j];
      const double before = f * f;
      const double after = (coefficient - f) * (coefficient - f);
      strong_error_.push_back(strong_error_.back() - before + after);
      weak_error_.push_back(weak_error_.back() + sigma * sigma * (after - before));
      strong_bias = strong_bias_tail_[k + 1];
      weak_bias = weak_bias_tail_[k + 1];
    }
  } else {
    const SvdTriplet* found = spectrum_->get(k);
    if (!found) return false;
    const SvdTriplet& t = *found;
    sigma = t.sigma;
    projection = t.left.dot(response_);
    const double coefficient = projection / sigma;
    residual_vector_ -= projection * t.left;
    residuals_.push_back(residual_vector_.squaredNorm());
    if (has_signal) {
      const double signal_coordinate = true_signal_->dot(t.right);
      bias_vector_ -= signal_coordinate * t.right;
      weak_bias_vector_ -= sigma * signal_coordinate * t.left;
      current_estimate_ += coefficient * t.right;
      strong_error_.push_back((current_estimate_ - *true_signal_).squaredNorm());
      weak_error_.push_back(((response_ - residual_vector_) - signal_image_).squaredNorm());
      strong_bias = bias_vector_.squaredNorm();
      weak_bias = weak_bias_vector_.squaredNorm();
    }
    right_.push_back(t.right);
  }

  sigma_.push_back(sigma);
  coefficient_.push_back(projection / sigma);
  projection2_.push_back(projection * projection);
  inverse_sigma2_sum_ += 1.0 / (sigma * sigma);

  if (oracle_) {
    const double delta2 = *noise_level_ * *noise_level_;
    oracle_->strong_bias2.push_back(strong_bias);
    oracle_->weak_bias2.push_back(weak_bias);
    oracle_->strong_variance.push_back(delta2 * inverse_sigma2_sum_);
    oracle_->weak_variance.push_back(delta2 * static_cast<double>(k + 1));
  }
  return true;
}

void TruncatedSvd::iterate(std::size_t number_of_iterations) {
  if (iteration() + number_of_iterations > max_rank_)
    throw RankExhausted("truncated SVD cannot iterate past min(n, p)");
  for (std::size_t i = 0; i < number_of_iterations; ++i)
    if (!advance()) throw RankExhausted("numerical rank of the design exhausted");
}

Vector TruncatedSvd::estimate(std::size_t m) const {
  require(m <= iteration(), "requested iteration has not been computed");
  Vector f = Vector::Zero(static_cast<Eigen::Index>(design_.cols()));
  for (std::size_t j = 0; j < m; ++j) {
    if (design_.is_diagonal()) f[order_[j]] = coefficient_[j];
    else f += coefficient_[j] * right_[j];
  }
  return f;
}

StopIndex TruncatedSvd::discrepancy_stop(double critical_value, std::size_t max_iteration) {
  return scan_discrepancy(residuals_, critical_value, [this] { return advance(); },
                          std::min(max_iteration, max_rank_));
}

const OracleTrack& TruncatedSvd::oracle() const {
  if (!oracle_) throw OracleUnavailable("oracle quantities need the true signal and noise level");
  return *oracle_;
}

StopIndex TruncatedSvd::weak_balanced_oracle(std::size_t max_iteration) {
  const OracleTrack& track = oracle();
  return balanced_crossing(track.weak_bias2, track.weak_variance, [this] { return advance(); },
                           std::min(max_iteration, max_rank_));
}

StopIndex TruncatedSvd::strong_balanced_oracle(std::size_t max_iteration) {
  const OracleTrack& track = oracle();
  return balanced_crossing(track.strong_bias2, track.strong_variance, [this] { return advance(); },
                           std::min(max_iteration, max_rank_));
}

std::size_t TruncatedSvd::strong_classical_oracle(std::size_t max_iteration) {
  oracle();
  const std::size_t upto = std::min(max_iteration, max_rank_);
  while (iteration() < upto && advance()) {
  }
  const auto risk = oracle_->strong_risk();
  return argmin_risk(risk, std::min(upto, iteration()));
}

std::size_t TruncatedSvd::weak_classical_oracle(std::size_t max_iteration) {
  oracle();
  const std::size_t upto = std::min(max_iteration, max_rank_);
  while (iteration() < upto && advance()) {
  }
  const auto risk = oracle_->weak_risk();
  return argmin_risk(risk, std::min(upto, iteration()));
}

std::size_t TruncatedSvd::aic_two_step(const StopIndex& stop, std::optional<double> delta) {
  if (!delta) delta = noise_level_;
  if (!delta) throw OracleUnavailable("two-step AIC needs a noise level");
  const std::size_t upto = stop.floor();
  require(upto <= max_rank_, "stopping index exceeds the rank of the design");
  while (iteration() < upto) {
    if (!advance()) break;
  }
  const double delta2 = *delta * *delta;
  double aic = 0.0;
  double best_aic = 0.0;
  std::size_t best = 0;
  for (std::size_t m = 1; m <= std::min(upto, iteration()); ++m) {
    const double weight = 1.0 / (sigma_[m - 1] * sigma_[m - 1]);
    aic += weight * (2.0 * delta2 - projection2_[m - 1]);
    if (aic < best_aic) {
      best_aic = aic;
      best = m;
    }
  }
  return best;
}

const std::vector<double>& TruncatedSvd::strong_empirical_error() const {
  if (!true_signal_) throw OracleUnavailable("empirical errors need the true signal");
  return strong_error_;
}

const std::vector<double>& TruncatedSvd::weak_empirical_error() const {
  if (!true_signal_) throw OracleUnavailable("empirical errors need the true signal");
  return weak_error_;
}

}  // namespace earlystop
