#pragma once

#include "earlystop/estimator_core.hpp"
#include "earlystop/linalg.hpp"

#include <optional>
#include <vector>

namespace earlystop {

struct TreeOptions {
  /// Nodes holding more than this many observations are split.
  std::size_t min_samples_split = 1;
};

struct TreeNode {
  std::vector<std::size_t> members;
  std::size_t depth = 0;
  double mean = 0.0;
  std::optional<std::size_t> split_coordinate;
  double threshold = 0.0;
  std::size_t left = 0;   // child indices, valid when split_coordinate is set
  std::size_t right = 0;
};

struct SplitChoice {
  std::size_t coordinate = 0;
  double threshold = 0.0;
  double sse = 0.0;  // summed squared residuals of both children
};

/// Exhaustive CART split of `members`: thresholds are midpoints of consecutive
/// distinct values, left = {x_j < c}. Ties go to the smallest coordinate, then
/// the smallest threshold. Empty if every coordinate is constant on the node.
std::optional<SplitChoice> best_split(const Matrix& covariates, const Vector& response,
                                      const std::vector<std::size_t>& members);

/// Regression tree grown breadth first: iteration m is the partition after
/// splitting every terminal node m times. Between levels the estimator follows
/// the projection flow (1 - alpha) Pi_m Y + alpha Pi_{m+1} Y.
class RegressionTree {
 public:
  RegressionTree(Matrix covariates, Vector response, std::optional<Vector> true_values = std::nullopt,
                 std::optional<Vector> true_noise = std::nullopt, TreeOptions options = {});

  /// Grows until `max_depth` levels exist or no node can be split.
  void iterate(std::size_t max_depth);

  std::size_t level() const { return residuals_.size() - 1; }
  bool saturated() const { return saturated_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<std::size_t>& terminal_nodes(std::size_t m) const;

  const std::vector<double>& residuals() const { return residuals_; }
  /// <Y - Pi_m Y, Y - Pi_{m+1} Y>_n.
  const std::vector<double>& residual_cross() const { return residual_cross_; }
  const Vector& fitted_values(std::size_t m) const;
  /// Residual ||Y - Pi_t Y||_n^2 along the flow.
  double residual_at(double t) const;

  const std::vector<double>& bias2() const;
  const std::vector<double>& variance() const;

  StopIndex discrepancy_stop(double critical_value, std::size_t max_depth, bool interpolated = false);
  /// First level with ||(I - Pi_m) f*||_n^2 <= ||Pi_m eps||_n^2.
  StopIndex balanced_oracle(std::size_t max_depth);

  /// Predictions of the tree frozen at (possibly fractional) level t.
  Vector predict(double t, const Matrix& query_points) const;

 private:
  bool advance();
  double route(std::size_t m, const Eigen::Ref<const Eigen::RowVectorXd>& point) const;
  void record_level();

  Matrix covariates_;
  Vector response_;
  std::optional<Vector> true_values_;
  std::optional<Vector> true_noise_;
  TreeOptions options_;
  double n_;
  bool saturated_ = false;

  std::vector<TreeNode> nodes_;
  std::vector<std::vector<std::size_t>> levels_;
  std::vector<Vector> fitted_;
  std::vector<double> residuals_;
  std::vector<double> residual_cross_;
  std::vector<double> bias2_;
  std::vector<double> variance_;
};

}  // namespace earlystop
