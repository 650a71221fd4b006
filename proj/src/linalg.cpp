#include "earlystop/linalg.hpp"

#include "earlystop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace earlystop {

DesignMatrix DesignMatrix::dense(Matrix entries) {
  require(entries.rows() > 0 && entries.cols() > 0, "design matrix must be non-empty");
  require(entries.allFinite(), "design matrix has non-finite entries");
  return DesignMatrix(Dense{std::move(entries)});
}

DesignMatrix DesignMatrix::diagonal(Vector lambda) {
  require(lambda.size() > 0, "diagonal design must be non-empty");
  require(lambda.allFinite(), "diagonal design has non-finite entries");
  require((lambda.array() > 0.0).all(), "diagonal design entries must be positive");
  return DesignMatrix(Diagonal{std::move(lambda)});
}

std::size_t DesignMatrix::rows() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Dense>)
          return static_cast<std::size_t>(s.entries.rows());
        else
          return static_cast<std::size_t>(s.lambda.size());
      },
      storage_);
}

std::size_t DesignMatrix::cols() const {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Dense>)
          return static_cast<std::size_t>(s.entries.cols());
        else
          return static_cast<std::size_t>(s.lambda.size());
      },
      storage_);
}

const Vector& DesignMatrix::lambda() const { return std::get<Diagonal>(storage_).lambda; }
const Matrix& DesignMatrix::entries() const { return std::get<Dense>(storage_).entries; }

Vector DesignMatrix::apply(const Vector& x) const {
  require(static_cast<std::size_t>(x.size()) == cols(), "apply: dimension mismatch");
  if (is_diagonal()) return lambda().cwiseProduct(x);
  return entries() * x;
}

Vector DesignMatrix::apply_transpose(const Vector& y) const {
  require(static_cast<std::size_t>(y.size()) == rows(), "apply_transpose: dimension mismatch");
  if (is_diagonal()) return lambda().cwiseProduct(y);
  return entries().transpose() * y;
}

Matrix DesignMatrix::to_dense() const {
  if (is_diagonal()) return lambda().asDiagonal();
  return entries();
}

namespace {

void normalize_sign(SvdTriplet& t) {
  const double scale = t.right.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < t.right.size(); ++i) {
    if (std::abs(t.right[i]) > 1e-12 * scale) {
      if (t.right[i] < 0.0) {
        t.right = -t.right;
        t.left = -t.left;
      }
      return;
    }
  }
}

SvdTriplet power_iteration(const Matrix& a, const PowerMethodOptions& options, double zero_threshold) {
  const auto n = a.rows();
  const auto p = a.cols();
  const double frobenius = a.norm();
  if (!(frobenius > zero_threshold)) throw ZeroMatrix("design is numerically zero");

  const std::size_t max_iters =
      options.max_power_iters > 0 ? options.max_power_iters
                                   : std::max<std::size_t>(1000, 10 * static_cast<std::size_t>(std::max(n, p)));

  Vector x = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
  Vector ax = a * x;
  if (ax.norm() < 1e-12 * frobenius) {
    // all-ones start is (numerically) in the null space; restart on the heaviest column
    Eigen::Index heaviest = 0;
    a.colwise().squaredNorm().maxCoeff(&heaviest);
    x = Vector::Unit(p, heaviest);
    ax = a * x;
  }

  double rayleigh = ax.squaredNorm();
  bool converged = false;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector g = a.transpose() * ax;
    const double gnorm = g.norm();
    if (gnorm == 0.0) break;
    // eigen-residual of A^T A at the current x
    if ((g - rayleigh * x).norm() <= options.tol * rayleigh) {
      converged = true;
      break;
    }
    x = g / gnorm;
    ax = a * x;
    rayleigh = ax.squaredNorm();
  }

  SvdTriplet t;
  t.sigma = std::sqrt(rayleigh);
  if (!(t.sigma > zero_threshold)) throw ZeroMatrix("design is numerically zero");
  t.right = x;
  t.left = ax / t.sigma;
  t.converged = converged;
  normalize_sign(t);
  return t;
}

}  // namespace

SvdTriplet top_singular_triplet(const DesignMatrix& design, const PowerMethodOptions& options) {
  require(options.tol > 0.0, "power method tolerance must be positive");
  return power_iteration(design.to_dense(), options, std::numeric_limits<double>::min());
}

DesignMatrix deflate(const DesignMatrix& design, const SvdTriplet& triplet) {
  require(static_cast<std::size_t>(triplet.left.size()) == design.rows() &&
              static_cast<std::size_t>(triplet.right.size()) == design.cols(),
          "deflate: triplet shape does not match design");
  Matrix a = design.to_dense();
  a.noalias() -= triplet.sigma * triplet.left * triplet.right.transpose();
  return DesignMatrix::dense(std::move(a));
}

DeflationSequence::DeflationSequence(const DesignMatrix& design, PowerMethodOptions options)
    : remainder_(design.to_dense()), options_(options), original_norm_(remainder_.norm()) {}

SvdTriplet DeflationSequence::next() {
  const auto rank_bound = static_cast<std::size_t>(std::min(remainder_.rows(), remainder_.cols()));
  if (produced_ >= rank_bound) throw RankExhausted("all singular components already extracted");
  // remainders below this level are rounding noise of the earlier deflations
  const double threshold = 1e-13 * std::max(original_norm_, std::numeric_limits<double>::min());
  SvdTriplet t = power_iteration(remainder_, options_, threshold);
  remainder_.noalias() -= t.sigma * t.left * t.right.transpose();
  ++produced_;
  return t;
}

TruncatedDecomposition top_k_svd(const DesignMatrix& design, std::size_t k, const PowerMethodOptions& options) {
  require(k >= 1 && k <= std::min(design.rows(), design.cols()), "top_k_svd: k must lie in [1, min(n, p)]");
  TruncatedDecomposition out;
  if (design.is_diagonal()) {
    const Vector& lambda = design.lambda();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lambda.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambda[a] > lambda[b]; });
    for (std::size_t j = 0; j < k; ++j) {
      SvdTriplet t;
      t.sigma = lambda[order[j]];
      t.left = Vector::Unit(lambda.size(), order[j]);
      t.right = t.left;
      out.triplets.push_back(std::move(t));
    }
    return out;
  }
  DeflationSequence sequence(design, options);
  for (std::size_t j = 0; j < k; ++j) {
    try {
      out.triplets.push_back(sequence.next());
    } catch (const ZeroMatrix&) {
      out.complete = false;
      break;
    }
  }
  return out;
}

SpectrumCache::SpectrumCache(const DesignMatrix& design, PowerMethodOptions options)
    : sequence_(design, options) {}

const SvdTriplet* SpectrumCache::get(std::size_t k) {
  std::lock_guard lock(mutex_);
  while (triplets_.size() <= k && !exhausted_) {
    try {
      triplets_.push_back(sequence_.next());
    } catch (const ZeroMatrix&) {
      exhausted_ = true;
    } catch (const RankExhausted&) {
      exhausted_ = true;
    }
  }
  return k < triplets_.size() ? &triplets_[k] : nullptr;
}

double spectral_norm(const DesignMatrix& design) {
  if (design.is_diagonal()) return design.lambda().maxCoeff();
  return top_singular_triplet(design).sigma;
}

}  // namespace earlystop
