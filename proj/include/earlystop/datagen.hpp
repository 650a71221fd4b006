#pragma once

#include "earlystop/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string_view>

namespace earlystop {

/// Y = A f* + noise with noise = delta * standard normal.
struct InverseProblemInstance {
  DesignMatrix design;
  Vector response;
  Vector true_signal;
  double noise_level = 0.0;
  Vector noise;
};

/// Y_i = f*(X_i) + eps_i.
struct RegressionInstance {
  Matrix covariates;
  Vector response;
  Vector true_function_values;
  Vector noise;
  double noise_variance = 0.0;
};

/// Y = X beta* + eps for the high-dimensional linear model.
struct LinearModelInstance {
  Matrix covariates;
  Vector response;
  Vector coefficients;
  Vector noise;
  double noise_level = 0.0;
};

struct TestProblem {
  DesignMatrix design;
  Vector true_signal;
};

enum class SignalKind { supersmooth, smooth, rough };
enum class AdditiveKind { smooth, step, linear, hills };

SignalKind parse_signal_kind(std::string_view name);
AdditiveKind parse_additive_kind(std::string_view name);
std::string_view to_string(SignalKind kind);
std::string_view to_string(AdditiveKind kind);

/// Coefficients of f*_j = 5000 * |sin(frequency * j)| * j^(-decay).
struct SignalShape {
  double frequency;
  double decay;
};
SignalShape default_shape(SignalKind kind);

/// Sequence-space signal in the SVD basis, j = 1..n.
Vector spectral_signal(std::size_t n, SignalShape shape);

// Random streams used by the generators, fixed so seeds stay meaningful.
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kDesignStream = 2;

/// delta * N(0, I_n) drawn from the noise stream of `seed`.
Vector gaussian_noise(std::size_t n, double delta, std::uint64_t seed);

/// Response = design * signal + delta * noise(seed).
InverseProblemInstance make_inverse_problem(DesignMatrix design, Vector true_signal, double delta, std::uint64_t seed);

/// Diagonal problem with lambda_j = j^(-1/2).
InverseProblemInstance diagonal_problem(std::size_t n, SignalKind kind, double delta, std::uint64_t seed);
InverseProblemInstance diagonal_problem(std::size_t n, SignalShape shape, double delta, std::uint64_t seed);

/// Galerkin discretization of Phillips' test problem on [-6, 6] with
/// orthonormal box functions. Requires n divisible by 4.
TestProblem phillips(std::size_t n);

/// 1-D gravity surveying problem on [0, 1] with midpoint grids.
TestProblem gravity(std::size_t n, double depth = 0.25);

/// beta_j = j^(-gamma), j = 1..p, rescaled to ||beta||_1 = 10.
Vector gamma_sparse_signal(std::size_t p, double gamma);

/// First s entries equal magnitude, rest zero.
Vector s_sparse_signal(std::size_t p, std::size_t s, double magnitude);

/// IID standard normal n x p matrix from the design stream of `seed`.
Matrix gaussian_design(std::size_t n, std::size_t p, std::uint64_t seed);

/// X beta + sigma * N(0, I) with noise from the noise stream of `seed`.
LinearModelInstance linear_model(Matrix covariates, Vector coefficients, double sigma, std::uint64_t seed);

using AdditiveComponents = std::array<std::function<double(double)>, 4>;

/// Library default g_1..g_4 for each additive family, bounded on (-2.5, 2.5)
/// with max |g_j| = 2 on that interval.
const AdditiveComponents& additive_components(AdditiveKind kind);

/// f*(x) = sum_{j<4} g_j(x_j) evaluated row-wise.
Vector additive_function(const AdditiveComponents& g, const Matrix& covariates);

/// p = 30 covariates uniform on (-2.5, 2.5), response f*(X) + sigma * N(0, 1).
RegressionInstance additive_model(AdditiveKind kind, std::size_t n, double noise_level, std::uint64_t seed);
RegressionInstance additive_model(const AdditiveComponents& g, std::size_t n, double noise_level, std::uint64_t seed);

inline constexpr std::size_t kAdditiveDimension = 30;

}  // namespace earlystop
