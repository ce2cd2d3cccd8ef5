#include "glo/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace glo {

Rng::Rng(std::uint64_t seed) {
  next_u32();
  state_ += seed;
  next_u32();
}

std::uint32_t Rng::next_u32() {
  std::uint64_t old = state_;
  state_ = old * kMultiplier + kIncrement;
  auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Rng::uniform() {
  std::uint64_t a = next_u32() >> 5;  // 27 bits
  std::uint64_t b = next_u32() >> 6;  // 26 bits
  return static_cast<double>((a << 26) | b) * 0x1.0p-53;
}

std::uint32_t Rng::below(std::uint32_t bound) {
  require(bound > 0, Errc::invalid_argument, "Rng::below needs bound > 0");
  std::uint32_t threshold = (0u - bound) % bound;
  for (;;) {
    std::uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

void Rng::shuffle(std::span<std::size_t> items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = below(static_cast<std::uint32_t>(i));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
BasicTensor<T> rng_normal(Rng& rng, Shape shape) {
  BasicTensor<T> out(shape);
  for (auto& v : out.values()) v = static_cast<T>(rng.normal());
  return out;
}

template Tensor rng_normal<float>(Rng&, Shape);
template TensorD rng_normal<double>(Rng&, Shape);

}  // namespace glo
