#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <mutex>
#include <variant>
#include <vector>

namespace earlystop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Forward operator A of size n x p. Either a dense matrix or a square
/// diagonal operator given by its (positive) diagonal entries.
class DesignMatrix {
 public:
  struct Dense {
    Matrix entries;
  };
  struct Diagonal {
    Vector lambda;
  };

  /// Throws InvalidArgument on non-finite entries or empty shape.
  static DesignMatrix dense(Matrix entries);
  /// Throws InvalidArgument unless every lambda_j is finite and > 0.
  static DesignMatrix diagonal(Vector lambda);

  std::size_t rows() const;
  std::size_t cols() const;
  bool is_diagonal() const { return std::holds_alternative<Diagonal>(storage_); }

  /// Diagonal entries; only valid when is_diagonal().
  const Vector& lambda() const;
  /// Dense entries; only valid when !is_diagonal().
  const Matrix& entries() const;

  Vector apply(const Vector& x) const;            // A x
  Vector apply_transpose(const Vector& y) const;  // A^T y
  Matrix to_dense() const;

 private:
  explicit DesignMatrix(std::variant<Dense, Diagonal> storage) : storage_(std::move(storage)) {}
  std::variant<Dense, Diagonal> storage_;
};

/// One singular triplet: A * right = sigma * left.
struct SvdTriplet {
  double sigma = 0.0;
  Vector left;   // length n
  Vector right;  // length p
  bool converged = true;
};

struct PowerMethodOptions {
  /// Converged once ||A^T A x - rho x|| <= tol * rho for the Rayleigh estimate rho.
  double tol = 1e-10;
  /// 0 selects max(1000, 10 * max(n, p)).
  std::size_t max_power_iters = 0;
};

/// Dominant singular triplet by power iteration on A^T A started from the
/// normalized all-ones vector. Throws ZeroMatrix if ||A|| is negligible.
/// The right vector is sign-normalized so its first nonzero entry is positive.
SvdTriplet top_singular_triplet(const DesignMatrix& design, const PowerMethodOptions& options = {});

/// A - sigma * left * right^T, always returned as a dense matrix.
DesignMatrix deflate(const DesignMatrix& design, const SvdTriplet& triplet);

struct TruncatedDecomposition {
  std::vector<SvdTriplet> triplets;
  /// False if the rank ran out before k triplets were found.
  bool complete = true;
};

/// Leading k singular triplets with non-increasing sigma. Diagonal designs are
/// handled by sorting lambda; dense designs alternate power iteration and
/// deflation.
TruncatedDecomposition top_k_svd(const DesignMatrix& design, std::size_t k, const PowerMethodOptions& options = {});

/// Incremental deflation engine used by the truncated SVD estimator so that
/// singular triplets are produced one at a time, on demand.
class DeflationSequence {
 public:
  explicit DeflationSequence(const DesignMatrix& design, PowerMethodOptions options = {});

  /// Computes the next triplet. Throws ZeroMatrix if the remainder vanished.
  SvdTriplet next();
  std::size_t produced() const { return produced_; }

 private:
  Matrix remainder_;
  PowerMethodOptions options_;
  double original_norm_ = 0.0;
  std::size_t produced_ = 0;
};

/// Thread-safe, lazily grown list of the leading singular triplets of a
/// fixed design. Lets many estimators on the same design share one deflation.
class SpectrumCache {
 public:
  explicit SpectrumCache(const DesignMatrix& design, PowerMethodOptions options = {});

  /// Triplet k (0-based), or nullptr once the numerical rank is exhausted.
  /// Returned pointers stay valid for the lifetime of the cache.
  const SvdTriplet* get(std::size_t k);

 private:
  std::mutex mutex_;
  DeflationSequence sequence_;
  std::deque<SvdTriplet> triplets_;
  bool exhausted_ = false;
};

/// Spectral norm ||A||_2 (largest singular value).
double spectral_norm(const DesignMatrix& design);

}  // namespace earlystop
