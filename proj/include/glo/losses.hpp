#pragma once

#include <cstddef>
#include <vector>

#include "glo/tensor.hpp"

namespace glo {

/// Band-pass levels (finest first) plus the final low-pass residual.
template <typename T>
struct LaplacianPyramid {
  std::vector<BasicTensor<T>> levels;
  BasicTensor<T> lowpass;
};

/// Builds a J-level pyramid of x [N,C,H,W]; H and W must be divisible by 2^J.
///
/// g0 = x, g(j+1) = down(g(j)), level j = g(j) - up(g(j+1)), lowpass = g(J).
/// down blurs with the separable binomial kernel [1,4,6,4,1]/16 and keeps
/// even pixels; up zero-stuffs and blurs with 4x the kernel. Both blurs are
/// zero-padded convolutions renormalized by the kernel mass that lands inside
/// the image, so constant images stay constant up to the border.
template <typename T>
LaplacianPyramid<T> build_pyramid(const BasicTensor<T>& x, std::size_t levels);

/// Inverse of build_pyramid: upsample-and-add from the low-pass residual.
template <typename T>
BasicTensor<T> reconstruct_pyramid(const LaplacianPyramid<T>& pyramid);

template <typename T>
struct LossValue {
  double value = 0.0;
  BasicTensor<T> grad;  // with respect to the first argument
};

/// sum_j 4^j |L^j(x) - L^j(y)|_1 + 4^J |lowpass(x) - lowpass(y)|_1, divided
/// by the batch size. Subgradient of |.| at zero is zero.
template <typename T>
LossValue<T> lap1_loss(const BasicTensor<T>& x, const BasicTensor<T>& y, std::size_t levels);

/// |x - y|_2^2 divided by the batch size.
template <typename T>
LossValue<T> l2_loss(const BasicTensor<T>& x, const BasicTensor<T>& y);

struct LossConfig {
  double weight_l2 = 1.0;
  double weight_lap1 = 1.0;
  std::size_t pyramid_levels = 3;

  void validate() const;

  /// Plain squared error, the MNIST setting.
  static LossConfig mse() { return {1.0, 0.0, 3}; }
};

/// weight_l2 * l2 + weight_lap1 * lap1. Zero-weight terms are not evaluated.
template <typename T>
LossValue<T> combined_loss(const BasicTensor<T>& x, const BasicTensor<T>& y,
                           const LossConfig& config);

}  // namespace glo
