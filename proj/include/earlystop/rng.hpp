#pragma once

#include <cstdint>
#include <string_view>

namespace earlystop {

/// Counter-based 64-bit generator: the i-th draw of a stream is
/// splitmix64(key + i * golden_gamma), so the output depends only on
/// (seed, stream, i) and is identical on every platform. Normals use the
/// Box-Muller transform on two 53-bit uniforms.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithmId = "splitmix64-counter/box-muller-v1";

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace earlystop
