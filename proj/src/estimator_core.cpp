#include "earlystop/estimator_core.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace earlystop {

std::size_t StopIndex::ceil() const { return static_cast<std::size_t>(std::ceil(value)); }

void IterateLog::push(const Vector& estimate, double residual_norm2) {
  if (keep_estimates_) estimates_.push_back(estimate);
  residual_norm2_.push_back(residual_norm2);
}

const Vector& IterateLog::estimate(std::size_t m) const {
  require(keep_estimates_, "estimate history is not kept for this estimator");
  require(m < estimates_.size(), "requested iteration has not been computed");
  return estimates_[m];
}

std::vector<double> OracleTrack::weak_risk() const {
  std::vector<double> risk(std::min(weak_bias2.size(), weak_variance.size()));
  for (std::size_t m = 0; m < risk.size(); ++m) risk[m] = weak_bias2[m] + weak_variance[m];
  return risk;
}

std::vector<double> OracleTrack::strong_risk() const {
  std::vector<double> risk(std::min(strong_bias2.size(), strong_variance.size()));
  for (std::size_t m = 0; m < risk.size(); ++m) risk[m] = strong_bias2[m] + strong_variance[m];
  return risk;
}

namespace {

// Makes sure index m exists in `sequence`, extending as needed. Returns false
// if the estimator cannot go that far.
bool ensure(const std::vector<double>& sequence, std::size_t m, const Extender& extend) {
  while (sequence.size() <= m) {
    if (!extend) return false;
    if (!extend()) return false;
  }
  return true;
}

StopIndex exhausted(const std::vector<double>& sequence, std::size_t max_iteration) {
  const std::size_t last = sequence.empty() ? 0 : sequence.size() - 1;
  return {static_cast<double>(std::min(last, max_iteration)), false};
}

}  // namespace

StopIndex scan_discrepancy(const std::vector<double>& residual_norm2, double kappa, const Extender& extend,
                           std::size_t max_iteration) {
  require(kappa >= 0.0, "critical value must be nonnegative");
  for (std::size_t m = 0; m <= max_iteration; ++m) {
    if (!ensure(residual_norm2, m, extend)) return exhausted(residual_norm2, max_iteration);
    if (residual_norm2[m] <= kappa) return {static_cast<double>(m), true};
  }
  return {static_cast<double>(max_iteration), false};
}

StopIndex balanced_crossing(const std::vector<double>& bias2, const std::vector<double>& variance,
                            const Extender& extend, std::size_t max_iteration) {
  for (std::size_t m = 0; m <= max_iteration; ++m) {
    if (!ensure(bias2, m, extend) || !ensure(variance, m, extend)) return exhausted(bias2, max_iteration);
    if (bias2[m] <= variance[m]) return {static_cast<double>(m), true};
  }
  return {static_cast<double>(max_iteration), false};
}

std::size_t argmin_risk(std::span<const double> risk, std::size_t upto) {
  require(!risk.empty(), "argmin over an empty sequence");
  require(upto < risk.size(), "argmin bound exceeds computed iterations");
  std::size_t best = 0;
  for (std::size_t m = 1; m <= upto; ++m)
    if (risk[m] < risk[best]) best = m;
  return best;
}

double SegmentNorms::at(double alpha) const {
  const double linear = start - cross;
  const double quadratic = start - 2.0 * cross + end;
  return start - 2.0 * alpha * linear + alpha * alpha * quadratic;
}

double segment_crossing(const SegmentNorms& segment, double kappa) {
  require(segment.start > kappa && kappa >= segment.end, "segment does not bracket the critical value");
  // q(alpha) - kappa = a alpha^2 + b alpha + c with c > 0 >= q(1) - kappa
  const double a = segment.start - 2.0 * segment.cross + segment.end;
  const double b = -2.0 * (segment.start - segment.cross);
  const double c = segment.start - kappa;
  double alpha = 1.0;
  if (std::abs(a) <= 1e-14 * std::max(segment.start, 1.0)) {
    alpha = -c / b;
  } else {
    const double discriminant = std::max(0.0, b * b - 4.0 * a * c);
    const double root = std::sqrt(discriminant);
    // numerically stable pair of roots
    const double qq = -0.5 * (b + std::copysign(root, b));
    const double r1 = qq / a;
    const double r2 = qq != 0.0 ? c / qq : r1;
    alpha = 2.0;
    for (double r : {r1, r2})
      if (r > 0.0 && r <= 1.0 + 1e-12) alpha = std::min(alpha, r);
    if (alpha > 1.0) alpha = 1.0;
  }
  return std::clamp(alpha, std::numeric_limits<double>::min(), 1.0);
}

SegmentMinimum segment_minimum(const SegmentNorms& segment) {
  const double quadratic = segment.start - 2.0 * segment.cross + segment.end;
  double alpha = 0.0;
  if (quadratic > 0.0) alpha = std::clamp((segment.start - segment.cross) / quadratic, 0.0, 1.0);
  else alpha = segment.end < segment.start ? 1.0 : 0.0;
  return {alpha, std::max(0.0, segment.at(alpha))};
}

StopIndex scan_interpolated_discrepancy(const std::vector<double>& residual_norm2, const std::vector<double>& cross,
                                        double kappa, const Extender& extend, std::size_t max_iteration) {
  require(kappa >= 0.0, "critical value must be nonnegative");
  if (!ensure(residual_norm2, 0, extend)) return {0.0, false};
  if (residual_norm2[0] <= kappa) return {0.0, true};
  for (std::size_t m = 0; m < max_iteration; ++m) {
    if (!ensure(residual_norm2, m + 1, extend)) return exhausted(residual_norm2, max_iteration);
    if (residual_norm2[m + 1] <= kappa) {
      const SegmentNorms segment{residual_norm2[m], residual_norm2[m + 1], cross.at(m)};
      return {static_cast<double>(m) + segment_crossing(segment, kappa), true};
    }
  }
  return {static_cast<double>(max_iteration), false};
}

SegmentMinimum interpolated_path_minimum(const std::vector<double>& norm2, const std::vector<double>& cross,
                                         std::size_t upto) {
  require(upto < norm2.size(), "path minimum bound exceeds computed iterations");
  SegmentMinimum best{0.0, norm2[0]};
  for (std::size_t m = 0; m < upto; ++m) {
    const SegmentMinimum local = segment_minimum({norm2[m], norm2[m + 1], cross.at(m)});
    if (local.value < best.value) best = {static_cast<double>(m) + local.alpha, local.value};
  }
  return best;
}

}  // namespace earlystop
