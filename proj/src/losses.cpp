#include "glo/losses.hpp"

#include <cmath>
#include <string>

#include "glo/ops.hpp"

namespace glo {
namespace {

constexpr double kBinomial[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
constexpr std::size_t kTaps = 5, kHalo = 2;

template <typename T>
BasicTensor<T> binomial_kernel(double gain) {
  BasicTensor<T> k(Shape{1, 1, kTaps, kTaps});
  for (std::size_t i = 0; i < kTaps; ++i)
    for (std::size_t j = 0; j < kTaps; ++j)
      k[i * kTaps + j] = static_cast<T>(gain * kBinomial[i] * kBinomial[j]);
  return k;
}

// [N,C,H,W] viewed as N*C single-channel planes.
template <typename T>
BasicTensor<T> planes(const BasicTensor<T>& x) {
  return x.reshaped(Shape{x.dim(0) * x.dim(1), 1, x.dim(2), x.dim(3)});
}

template <typename T>
BasicTensor<T> zero_stuff(const BasicTensor<T>& x) {
  const std::size_t p = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  BasicTensor<T> out(Shape{x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out[(k * 2 * h + 2 * i) * 2 * w + 2 * j] = x[(k * h + i) * w + j];
  return out;
}

template <typename T>
BasicTensor<T> decimate(const BasicTensor<T>& x) {
  const std::size_t p = x.dim(0) * x.dim(1), h = x.dim(2) / 2, w = x.dim(3) / 2;
  BasicTensor<T> out(Shape{x.dim(0), x.dim(1), h, w});
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out[(k * h + i) * w + j] = x[(k * 2 * h + 2 * i) * 2 * w + 2 * j];
  return out;
}

// Per-pixel reciprocal of the kernel mass inside an h x w image (for the
// upsampling blur only even-indexed pixels carry mass).
template <typename T>
BasicTensor<T> border_gain(std::size_t h, std::size_t w, bool stuffed) {
  BasicTensor<T> ones = BasicTensor<T>::ones(Shape{1, 1, stuffed ? h / 2 : h, stuffed ? w / 2 : w});
  BasicTensor<T> support = stuffed ? zero_stuff(ones) : ones;
  BasicTensor<T> mass = conv2d(support, binomial_kernel<T>(stuffed ? 4.0 : 1.0), 1, kHalo);
  for (auto& v : mass.values()) v = T(1) / v;
  return mass;
}

template <typename T>
BasicTensor<T> scale_planes(const BasicTensor<T>& x, const BasicTensor<T>& gain) {
  BasicTensor<T> out(x.shape());
  const std::size_t hw = gain.size();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * gain[i % hw];
  return out;
}

// Normalized blur and its adjoint. Kernels are symmetric, so the adjoint of
// the stride-1 convolution is the transposed convolution with the same kernel.
template <typename T>
BasicTensor<T> blur(const BasicTensor<T>& x, bool stuffed) {
  BasicTensor<T> k = binomial_kernel<T>(stuffed ? 4.0 : 1.0);
  BasicTensor<T> raw = conv2d(planes(x), k, 1, kHalo).reshaped(x.shape());
  return scale_planes(raw, border_gain<T>(x.dim(2), x.dim(3), stuffed));
}

template <typename T>
BasicTensor<T> blur_adjoint(const BasicTensor<T>& g, bool stuffed) {
  BasicTensor<T> k = binomial_kernel<T>(stuffed ? 4.0 : 1.0);
  BasicTensor<T> scaled = scale_planes(g, border_gain<T>(g.dim(2), g.dim(3), stuffed));
  return conv_transpose2d(planes(scaled), k, 1, kHalo).reshaped(g.shape());
}

template <typename T>
BasicTensor<T> down(const BasicTensor<T>& x) { return decimate(blur(x, false)); }
template <typename T>
BasicTensor<T> down_adjoint(const BasicTensor<T>& g) { return blur_adjoint(zero_stuff(g), false); }
template <typename T>
BasicTensor<T> up(const BasicTensor<T>& x) { return blur(zero_stuff(x), true); }
template <typename T>
BasicTensor<T> up_adjoint(const BasicTensor<T>& g) { return decimate(blur_adjoint(g, true)); }

template <typename T>
void check_pyramid_extent(const BasicTensor<T>& x, std::size_t levels) {
  require(x.rank() == 4, Errc::shape_mismatch,
          "pyramid input must be [N,C,H,W], got " + x.shape().str());
  require(levels < 16, Errc::invalid_argument, "too many pyramid levels");
  const std::size_t f = std::size_t{1} << levels;
  require(x.dim(2) % f == 0 && x.dim(3) % f == 0, Errc::shape_mismatch,
          "extent " + x.shape().str() + " is not divisible by 2^" + std::to_string(levels));
}

double level_weight(std::size_t j) { return std::ldexp(1.0, 2 * static_cast<int>(j)); }

template <typename T>
BasicTensor<T> sign(const BasicTensor<T>& x, double weight) {
  BasicTensor<T> s(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    s[i] = x[i] > T(0) ? T(weight) : (x[i] < T(0) ? T(-weight) : T(0));
  return s;
}

template <typename T>
double l1(const BasicTensor<T>& x) {
  double s = 0.0;
  for (T v : x.values()) s += std::abs(static_cast<double>(v));
  return s;
}

}  // namespace

template <typename T>
LaplacianPyramid<T> build_pyramid(const BasicTensor<T>& x, std::size_t levels) {
  check_pyramid_extent(x, levels);
  LaplacianPyramid<T> pyr;
  BasicTensor<T> current = x;
  for (std::size_t j = 0; j < levels; ++j) {
    BasicTensor<T> coarser = down(current);
    pyr.levels.push_back(sub(current, up(coarser)));
    current = std::move(coarser);
  }
  pyr.lowpass = std::move(current);
  return pyr;
}

template <typename T>
BasicTensor<T> reconstruct_pyramid(const LaplacianPyramid<T>& pyramid) {
  BasicTensor<T> current = pyramid.lowpass;
  for (std::size_t j = pyramid.levels.size(); j-- > 0;)
    current = add(pyramid.levels[j], up(current));
  return current;
}

template <typename T>
LossValue<T> lap1_loss(const BasicTensor<T>& x, const BasicTensor<T>& y, std::size_t levels) {
  require_same_shape(x.shape(), y.shape(), "lap1_loss");
  check_pyramid_extent(x, levels);
  const double batch = static_cast<double>(x.dim(0));
  const LaplacianPyramid<T> pyr = build_pyramid(sub(x, y), levels);

  LossValue<T> out;
  for (std::size_t j = 0; j < levels; ++j) out.value += level_weight(j) * l1(pyr.levels[j]);
  out.value += level_weight(levels) * l1(pyr.lowpass);
  out.value /= batch;

  // Adjoint of the pyramid applied to the weighted signs.
  std::vector<BasicTensor<T>> g(levels + 1);
  std::vector<BasicTensor<T>> s(levels);
  for (std::size_t j = 0; j < levels; ++j) {
    s[j] = sign(pyr.levels[j], level_weight(j));
    g[j] = s[j];
  }
  g[levels] = sign(pyr.lowpass, level_weight(levels));
  for (std::size_t k = 1; k <= levels; ++k) g[k] = sub(g[k], up_adjoint(s[k - 1]));
  for (std::size_t k = levels; k >= 1; --k) g[k - 1] = add(g[k - 1], down_adjoint(g[k]));
  out.grad = scale(g[0], static_cast<T>(1.0 / batch));
  return out;
}

template <typename T>
LossValue<T> l2_loss(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  require_same_shape(x.shape(), y.shape(), "l2_loss");
  require(x.rank() >= 1, Errc::shape_mismatch, "l2_loss needs a batch axis");
  const double batch = static_cast<double>(x.dim(0));
  LossValue<T> out;
  out.grad = BasicTensor<T>(x.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    s += d * d;
    out.grad[i] = static_cast<T>(2.0 * d / batch);
  }
  out.value = s / batch;
  return out;
}

void LossConfig::validate() const {
  require(weight_l2 >= 0.0 && weight_lap1 >= 0.0, Errc::invalid_argument,
          "loss weights must be non-negative");
  require(weight_l2 + weight_lap1 > 0.0, Errc::invalid_argument,
          "at least one loss weight must be positive");
  require(pyramid_levels >= 1, Errc::invalid_argument, "pyramid_levels must be >= 1");
}

template <typename T>
LossValue<T> combined_loss(const BasicTensor<T>& x, const BasicTensor<T>& y,
                           const LossConfig& config) {
  config.validate();
  require_same_shape(x.shape(), y.shape(), "combined_loss");
  if (config.weight_lap1 == 0.0) {
    LossValue<T> l2 = l2_loss(x, y);
    if (config.weight_l2 == 1.0) return l2;
    return {config.weight_l2 * l2.value, scale(l2.grad, static_cast<T>(config.weight_l2))};
  }
  LossValue<T> lap = lap1_loss(x, y, config.pyramid_levels);
  if (config.weight_l2 == 0.0) {
    if (config.weight_lap1 == 1.0) return lap;
    return {config.weight_lap1 * lap.value, scale(lap.grad, static_cast<T>(config.weight_lap1))};
  }
  LossValue<T> l2 = l2_loss(x, y);
  LossValue<T> out{config.weight_l2 * l2.value + config.weight_lap1 * lap.value,
                   BasicTensor<T>(x.shape())};
  for (std::size_t i = 0; i < x.size(); ++i)
    out.grad[i] = static_cast<T>(config.weight_l2 * l2.grad[i] +
                                 config.weight_lap1 * lap.grad[i]);
  return out;
}

#define GLO_INSTANTIATE(T)                                                               \
  template LaplacianPyramid<T> build_pyramid(const BasicTensor<T>&, std::size_t);        \
  template BasicTensor<T> reconstruct_pyramid(const LaplacianPyramid<T>&);               \
  template LossValue<T> lap1_loss(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                  std::size_t);                                          \
  template LossValue<T> l2_loss(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template LossValue<T> combined_loss(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                      const LossConfig&);

GLO_INSTANTIATE(float)
GLO_INSTANTIATE(double)

#undef GLO_INSTANTIATE

}  // namespace glo
