#include "earlystop/datagen.hpp"

#include "earlystop/errors.hpp"
#include "earlystop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace earlystop {

using std::numbers::pi;

SignalKind parse_signal_kind(std::string_view name) {
  if (name == "supersmooth") return SignalKind::supersmooth;
  if (name == "smooth") return SignalKind::smooth;
  if (name == "rough") return SignalKind::rough;
  throw InvalidArgument("unknown signal kind '" + std::string(name) + "'");
}

AdditiveKind parse_additive_kind(std::string_view name) {
  if (name == "smooth") return AdditiveKind::smooth;
  if (name == "step") return AdditiveKind::step;
  if (name == "linear") return AdditiveKind::linear;
  if (name == "hills") return AdditiveKind::hills;
  throw InvalidArgument("unknown additive kind '" + std::string(name) + "'");
}

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::supersmooth: return "supersmooth";
    case SignalKind::smooth: return "smooth";
    case SignalKind::rough: return "rough";
  }
  return "?";
}

std::string_view to_string(AdditiveKind kind) {
  switch (kind) {
    case AdditiveKind::smooth: return "smooth";
    case AdditiveKind::step: return "step";
    case AdditiveKind::linear: return "linear";
    case AdditiveKind::hills: return "hills";
  }
  return "?";
}

SignalShape default_shape(SignalKind kind) {
  switch (kind) {
    case SignalKind::supersmooth: return {0.001, 2.5};
    case SignalKind::smooth: return {0.01, 1.6};
    case SignalKind::rough: return {1.0, 0.8};
  }
  return {0.01, 1.6};
}

Vector spectral_signal(std::size_t n, SignalShape shape) {
  Vector f(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double j = static_cast<double>(i + 1);
    f[static_cast<Eigen::Index>(i)] = 5000.0 * std::abs(std::sin(shape.frequency * j)) * std::pow(j, -shape.decay);
  }
  return f;
}

Vector gaussian_noise(std::size_t n, double delta, std::uint64_t seed) {
  require(delta >= 0.0, "noise level must be nonnegative");
  CounterRng rng(seed, kNoiseStream);
  Vector noise(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = delta * rng.normal();
  return noise;
}

InverseProblemInstance make_inverse_problem(DesignMatrix design, Vector true_signal, double delta, std::uint64_t seed) {
  require(static_cast<std::size_t>(true_signal.size()) == design.cols(), "signal length must equal design columns");
  Vector noise = gaussian_noise(design.rows(), delta, seed);
  Vector response = design.apply(true_signal) + noise;
  return {std::move(design), std::move(response), std::move(true_signal), delta, std::move(noise)};
}

InverseProblemInstance diagonal_problem(std::size_t n, SignalShape shape, double delta, std::uint64_t seed) {
  require(n >= 1, "diagonal problem needs n >= 1");
  Vector lambda(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) lambda[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(static_cast<double>(i + 1));
  return make_inverse_problem(DesignMatrix::diagonal(std::move(lambda)), spectral_signal(n, shape), delta, seed);
}

InverseProblemInstance diagonal_problem(std::size_t n, SignalKind kind, double delta, std::uint64_t seed) {
  return diagonal_problem(n, default_shape(kind), delta, seed);
}

TestProblem phillips(std::size_t n) {
  if (n == 0 || n % 4 != 0) throw InvalidArgument("phillips: n must be a positive multiple of 4");
  const auto size = static_cast<Eigen::Index>(n);
  const double h = 12.0 / static_cast<double>(n);
  const std::size_t quarter = n / 4;

  // first row of the symmetric Toeplitz matrix: (1/h) times the double
  // integral of phi(s - t) over two cells k positions apart
  auto c = [&](long k) { return std::cos(static_cast<double>(k) * 4.0 * pi / static_cast<double>(n)); };
  Vector row = Vector::Zero(size);
  for (std::size_t k = 0; k < quarter; ++k) {
    const long kk = static_cast<long>(k);
    row[static_cast<Eigen::Index>(k)] = h + 9.0 / (h * pi * pi) * (2.0 * c(kk) - c(kk - 1) - c(kk + 1));
  }
  if (quarter < n) row[static_cast<Eigen::Index>(quarter)] = h / 2.0 + 9.0 / (h * pi * pi) * (c(1) - 1.0);

  Matrix a(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) a(i, j) = row[std::abs(i - j)];

  // coefficients of phi(t) = 1 + cos(pi t / 3) on |t| < 3 in the orthonormal box basis
  auto antiderivative = [](double t) {
    const double clipped = std::clamp(t, -3.0, 3.0);
    return clipped + 3.0 / pi * std::sin(pi * clipped / 3.0);
  };
  Vector x(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double lo = -6.0 + static_cast<double>(i) * h;
    x[i] = (antiderivative(lo + h) - antiderivative(lo)) / std::sqrt(h);
  }
  return {DesignMatrix::dense(std::move(a)), std::move(x)};
}

TestProblem gravity(std::size_t n, double depth) {
  require(n >= 2, "gravity: n must be at least 2");
  require(depth > 0.0, "gravity: depth must be positive");
  const auto size = static_cast<Eigen::Index>(n);
  const double h = 1.0 / static_cast<double>(n);
  Matrix a(size, size);
  Vector x(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double s = h * (static_cast<double>(i) + 0.5);
    for (Eigen::Index j = 0; j < size; ++j) {
      const double t = h * (static_cast<double>(j) + 0.5);
      a(i, j) = h * depth * std::pow(depth * depth + (s - t) * (s - t), -1.5);
    }
    x[i] = std::sin(pi * s) + 0.5 * std::sin(2.0 * pi * s);
  }
  return {DesignMatrix::dense(std::move(a)), std::move(x)};
}

Vector gamma_sparse_signal(std::size_t p, double gamma) {
  require(p >= 1, "gamma-sparse signal needs p >= 1");
  require(gamma > 0.0, "gamma must be positive");
  Vector beta(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) beta[static_cast<Eigen::Index>(j)] = std::pow(1.0 + static_cast<double>(j), -gamma);
  return 10.0 * beta / beta.cwiseAbs().sum();
}

Vector s_sparse_signal(std::size_t p, std::size_t s, double magnitude) {
  require(s >= 1 && s <= p, "s-sparse signal needs 1 <= s <= p");
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  beta.head(static_cast<Eigen::Index>(s)).setConstant(magnitude);
  return beta;
}

Matrix gaussian_design(std::size_t n, std::size_t p, std::uint64_t seed) {
  CounterRng rng(seed, kDesignStream);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  // row-major fill so a row is one observation's draw sequence
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  return x;
}

LinearModelInstance linear_model(Matrix covariates, Vector coefficients, double sigma, std::uint64_t seed) {
  require(covariates.cols() == coefficients.size(), "coefficient length must equal number of covariates");
  Vector noise = gaussian_noise(static_cast<std::size_t>(covariates.rows()), sigma, seed);
  Vector response = covariates * coefficients + noise;
  return {std::move(covariates), std::move(response), std::move(coefficients), std::move(noise), sigma};
}

namespace {

double gaussian_bump(double x, double center, double width) {
  const double z = (x - center) / width;
  return std::exp(-0.5 * z * z);
}

double staircase(double x, double breakpoint) {
  if (x < -breakpoint) return -1.0;
  if (x < breakpoint) return 0.0;
  return 1.0;
}

double triangle_wave(double x, double period) {
  const double phase = x / period - std::floor(x / period);
  return 1.0 - 4.0 * std::abs(phase - 0.5);
}

// rescales g so that max |g| over a 10^4-point grid of (-2.5, 2.5) equals 2
std::function<double(double)> normalized(std::function<double(double)> g) {
  double peak = 0.0;
  constexpr int kGrid = 10000;
  for (int i = 0; i < kGrid; ++i) {
    const double x = -2.5 + 5.0 * (static_cast<double>(i) + 0.5) / kGrid;
    peak = std::max(peak, std::abs(g(x)));
  }
  const double scale = 2.0 / peak;
  return [g = std::move(g), scale](double x) { return scale * g(x); };
}

AdditiveComponents build_components(AdditiveKind kind) {
  switch (kind) {
    case AdditiveKind::smooth:
      return {normalized([](double x) { return std::sin(2.0 * x); }),
              normalized([](double x) { return std::cos(3.0 * x) + x / 2.0; }),
              normalized([](double x) { return 1.0 - x * x / 3.0; }),
              normalized([](double x) { return std::tanh(2.0 * x); })};
    case AdditiveKind::step:
      return {normalized([](double x) { return staircase(x, 0.5); }),
              normalized([](double x) { return staircase(x, 1.0); }),
              normalized([](double x) { return staircase(x, 1.5); }),
              normalized([](double x) { return -staircase(x, 0.75); })};
    case AdditiveKind::linear:
      return {normalized([](double x) { return 1.0 - std::abs(x) / 1.25; }),
              normalized([](double x) { return triangle_wave(x, 2.0); }),
              normalized([](double x) { return x / 2.5; }),
              normalized([](double x) { return std::max(0.0, 1.0 - std::abs(x - 1.0)) - 0.5; })};
    case AdditiveKind::hills:
      return {normalized([](double x) { return gaussian_bump(x, -1.0, 0.5) + gaussian_bump(x, 1.0, 0.5); }),
              normalized([](double x) { return gaussian_bump(x, -1.5, 0.4) - 0.8 * gaussian_bump(x, 0.5, 0.6); }),
              normalized([](double x) { return gaussian_bump(x, 0.0, 0.7) + 0.6 * gaussian_bump(x, 2.0, 0.3); }),
              normalized([](double x) { return -gaussian_bump(x, -2.0, 0.5) + gaussian_bump(x, 1.0, 0.4); })};
  }
  throw InvalidArgument("unknown additive kind");
}

}  // namespace

const AdditiveComponents& additive_components(AdditiveKind kind) {
  static const std::array<AdditiveComponents, 4> table = {
      build_components(AdditiveKind::smooth), build_components(AdditiveKind::step),
      build_components(AdditiveKind::linear), build_components(AdditiveKind::hills)};
  return table[static_cast<std::size_t>(kind)];
}

Vector additive_function(const AdditiveComponents& g, const Matrix& covariates) {
  require(covariates.cols() >= 4, "additive model needs at least 4 covariates");
  Vector f(covariates.rows());
  for (Eigen::Index i = 0; i < covariates.rows(); ++i)
    f[i] = g[0](covariates(i, 0)) + g[1](covariates(i, 1)) + g[2](covariates(i, 2)) + g[3](covariates(i, 3));
  return f;
}

RegressionInstance additive_model(const AdditiveComponents& g, std::size_t n, double noise_level, std::uint64_t seed) {
  require(n >= 1, "additive model needs n >= 1");
  require(noise_level >= 0.0, "noise level must be nonnegative");
  CounterRng rng(seed, kDesignStream);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kAdditiveDimension));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-2.5, 2.5);
  Vector f = additive_function(g, x);
  Vector noise = gaussian_noise(n, noise_level, seed);
  Vector y = f + noise;
  return {std::move(x), std::move(y), std::move(f), std::move(noise), noise_level * noise_level};
}

RegressionInstance additive_model(AdditiveKind kind, std::size_t n, double noise_level, std::uint64_t seed) {
  return additive_model(additive_components(kind), n, noise_level, seed);
}

}  // namespace earlystop
