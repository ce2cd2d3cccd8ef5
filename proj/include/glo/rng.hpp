#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "glo/tensor.hpp"

namespace glo {

/// PCG32 (XSH-RR 64/32) with Box-Muller normals.
///
/// State transition: state = state * 6364136223846793005 + inc, with
/// inc = 1442695040888963407 (odd, fixed stream). Seeding follows the
/// reference pcg32_srandom: state = 0, step, state += seed, step.
/// Normals consume two 53-bit uniforms per pair; the second value of each
/// pair is cached and returned by the next call.
class Rng {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Rng(std::uint64_t seed);

  std::uint32_t next_u32();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound), unbiased.
  std::uint32_t below(std::uint32_t bound);
  double normal();

  void shuffle(std::span<std::size_t> items);

 private:
  std::uint64_t state_ = 0;
  std::optional<double> spare_;
};

/// I.i.d. standard normal tensor, row-major fill order.
template <typename T>
BasicTensor<T> rng_normal(Rng& rng, Shape shape);

}  // namespace glo
