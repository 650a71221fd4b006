#include "earlystop/regression_tree.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace earlystop {

std::optional<SplitChoice> best_split(const Matrix& covariates, const Vector& response,
                                      const std::vector<std::size_t>& members) {
  std::optional<SplitChoice> best;
  const std::size_t count = members.size();
  if (count < 2) return best;
  std::vector<std::size_t> order(members);
  std::vector<double> prefix(count + 1);
  std::vector<double> prefix2(count + 1);

  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    const auto x = [&](std::size_t i) { return covariates(static_cast<Eigen::Index>(i), j); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a) < x(b); });
    prefix[0] = prefix2[0] = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double y = response[static_cast<Eigen::Index>(order[k])];
      prefix[k + 1] = prefix[k] + y;
      prefix2[k + 1] = prefix2[k] + y * y;
    }
    for (std::size_t k = 1; k < count; ++k) {
      const double lo = x(order[k - 1]);
      const double hi = x(order[k]);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(k);
      const double nr = static_cast<double>(count - k);
      const double sl = prefix[k];
      const double sr = prefix[count] - sl;
      const double sse_left = prefix2[k] - sl * sl / nl;
      const double sse_right = (prefix2[count] - prefix2[k]) - sr * sr / nr;
      const double sse = std::max(0.0, sse_left) + std::max(0.0, sse_right);
      if (!best || sse < best->sse) best = SplitChoice{static_cast<std::size_t>(j), 0.5 * (lo + hi), sse};
    }
  }
  return best;
}

RegressionTree::RegressionTree(Matrix covariates, Vector response, std::optional<Vector> true_values,
                               std::optional<Vector> true_noise, TreeOptions options)
    : covariates_(std::move(covariates)),
      response_(std::move(response)),
      true_values_(std::move(true_values)),
      true_noise_(std::move(true_noise)),
      options_(options),
      n_(static_cast<double>(covariates_.rows())) {
  require(covariates_.rows() > 0 && covariates_.cols() > 0, "empty design");
  require(response_.size() == covariates_.rows(), "response length must equal covariate rows");
  require(!true_values_ || true_values_->size() == response_.size(), "true values must match the response");
  require(!true_noise_ || true_noise_->size() == response_.size(), "noise vector must match the response");
  require(options_.min_samples_split >= 1, "min_samples_split must be at least 1");

  TreeNode root;
  root.members.resize(static_cast<std::size_t>(response_.size()));
  std::iota(root.members.begin(), root.members.end(), std::size_t{0});
  root.mean = response_.mean();
  nodes_.push_back(std::move(root));
  levels_.push_back({0});
  record_level();
}

void RegressionTree::record_level() {
  const auto& terminal = levels_.back();
  Vector fitted(response_.size());
  Vector projected_signal;
  Vector projected_noise;
  if (true_values_) projected_signal.resize(response_.size());
  if (true_noise_) projected_noise.resize(response_.size());
  for (std::size_t id : terminal) {
    const TreeNode& node = nodes_[id];
    double signal_mean = 0.0;
    double noise_mean = 0.0;
    for (std::size_t i : node.members) {
      if (true_values_) signal_mean += (*true_values_)[static_cast<Eigen::Index>(i)];
      if (true_noise_) noise_mean += (*true_noise_)[static_cast<Eigen::Index>(i)];
    }
    const double size = static_cast<double>(node.members.size());
    for (std::size_t i : node.members) {
      const auto ii = static_cast<Eigen::Index>(i);
      fitted[ii] = node.mean;
      if (true_values_) projected_signal[ii] = signal_mean / size;
      if (true_noise_) projected_noise[ii] = noise_mean / size;
    }
  }
  const Vector residual = response_ - fitted;
  if (!fitted_.empty()) residual_cross_.push_back((response_ - fitted_.back()).dot(residual) / n_);
  residuals_.push_back(residual.squaredNorm() / n_);
  if (true_values_) bias2_.push_back((*true_values_ - projected_signal).squaredNorm() / n_);
  if (true_noise_) variance_.push_back(projected_noise.squaredNorm() / n_);
  fitted_.push_back(fitted);
}

bool RegressionTree::advance() {
  if (saturated_) return false;
  std::vector<std::size_t> next;
  bool any_split = false;
  const std::size_t depth = level() + 1;
  // copy: nodes_ grows while iterating
  const std::vector<std::size_t> current = levels_.back();
  for (std::size_t id : current) {
    std::optional<SplitChoice> split;
    if (nodes_[id].members.size() > options_.min_samples_split)
      split = best_split(covariates_, response_, nodes_[id].members);
    if (!split) {
      next.push_back(id);
      continue;
    }
    TreeNode left;
    TreeNode right;
    left.depth = right.depth = depth;
    const auto j = static_cast<Eigen::Index>(split->coordinate);
    for (std::size_t i : nodes_[id].members) {
      if (covariates_(static_cast<Eigen::Index>(i), j) < split->threshold) left.members.push_back(i);
      else right.members.push_back(i);
    }
    for (TreeNode* child : {&left, &right}) {
      double sum = 0.0;
      for (std::size_t i : child->members) sum += response_[static_cast<Eigen::Index>(i)];
      child->mean = sum / static_cast<double>(child->members.size());
    }
    nodes_[id].split_coordinate = split->coordinate;
    nodes_[id].threshold = split->threshold;
    nodes_[id].left = nodes_.size();
    nodes_[id].right = nodes_.size() + 1;
    next.push_back(nodes_.size());
    next.push_back(nodes_.size() + 1);
    nodes_.push_back(std::move(left));
    nodes_.push_back(std::move(right));
    any_split = true;
  }
  if (!any_split) {
    saturated_ = true;
    return false;
  }
  levels_.push_back(std::move(next));
  record_level();
  return true;
}

void RegressionTree::iterate(std::size_t max_depth) {
  while (level() < max_depth)
    if (!advance()) break;
}

const std::vector<std::size_t>& RegressionTree::terminal_nodes(std::size_t m) const {
  require(m <= level(), "requested level has not been grown");
  return levels_[m];
}

const Vector& RegressionTree::fitted_values(std::size_t m) const {
  require(m <= level(), "requested level has not been grown");
  return fitted_[m];
}

double RegressionTree::residual_at(double t) const {
  require(t >= 0.0 && t <= static_cast<double>(level()), "index outside the grown tree");
  const auto m = static_cast<std::size_t>(std::floor(t));
  const double alpha = t - static_cast<double>(m);
  if (alpha == 0.0) return residuals_[m];
  return SegmentNorms{residuals_[m], residuals_[m + 1], residual_cross_[m]}.at(alpha);
}

const std::vector<double>& RegressionTree::bias2() const {
  if (!true_values_) throw OracleUnavailable("bias needs the true function values");
  return bias2_;
}

const std::vector<double>& RegressionTree::variance() const {
  if (!true_noise_) throw OracleUnavailable("variance needs the true noise vector");
  return variance_;
}

StopIndex RegressionTree::discrepancy_stop(double critical_value, std::size_t max_depth, bool interpolated) {
  const auto extend = [this] { return advance(); };
  if (!interpolated) return scan_discrepancy(residuals_, critical_value, extend, max_depth);
  return scan_interpolated_discrepancy(residuals_, residual_cross_, critical_value, extend, max_depth);
}

StopIndex RegressionTree::balanced_oracle(std::size_t max_depth) {
  bias2();
  variance();
  return balanced_crossing(bias2_, variance_, [this] { return advance(); }, max_depth);
}

double RegressionTree::route(std::size_t m, const Eigen::Ref<const Eigen::RowVectorXd>& point) const {
  std::size_t id = 0;
  while (nodes_[id].split_coordinate && nodes_[id].depth < m) {
    const TreeNode& node = nodes_[id];
    id = point[static_cast<Eigen::Index>(*node.split_coordinate)] < node.threshold ? node.left : node.right;
  }
  return nodes_[id].mean;
}

Vector RegressionTree::predict(double t, const Matrix& query_points) const {
  require(t >= 0.0 && t <= static_cast<double>(level()), "index outside the grown tree");
  require(query_points.cols() == covariates_.cols(), "query points have the wrong dimension");
  const auto m = static_cast<std::size_t>(std::floor(t));
  const double alpha = t - static_cast<double>(m);
  Vector out(query_points.rows());
  for (Eigen::Index i = 0; i < query_points.rows(); ++i) {
    const double low = route(m, query_points.row(i));
    out[i] = alpha == 0.0 ? low : (1.0 - alpha) * low + alpha * route(m + 1, query_points.row(i));
  }
  return out;
}

}  // namespace earlystop
