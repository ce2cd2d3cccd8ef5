#include "glo/ops.hpp"

#include <Eigen/Core>
#include <string>

#include "glo/parallel.hpp"

namespace glo {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T, typename Fn>
BasicTensor<T> zip(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what, Fn fn) {
  require_same_shape(a.shape(), b.shape(), what);
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

template <typename T, typename Fn>
BasicTensor<T> map(const BasicTensor<T>& a, Fn fn) {
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

template <typename T>
RowMat to_matrix(const T* src, std::size_t rows, std::size_t cols) {
  RowMat m(rows, cols);
  double* dst = m.data();
  for (std::size_t i = 0; i < rows * cols; ++i) dst[i] = static_cast<double>(src[i]);
  return m;
}

struct ConvGeometry {
  std::size_t n, c, h, w;     // input of the forward convolution
  std::size_t f, kh, kw;      // output channels, kernel extents
  std::size_t stride, pad;
  std::size_t oh, ow;         // forward output extents

  std::size_t patch() const { return c * kh * kw; }
  std::size_t columns() const { return n * oh * ow; }
};

void require_rank4(const Shape& s, const char* what) {
  require(s.rank() == 4, Errc::shape_mismatch,
          std::string(what) + " must be rank 4, got " + s.str());
}

// Output extent of a strided window; throws when it would be non-positive.
std::size_t window_extent(std::size_t in, std::size_t k, std::size_t stride,
                          std::size_t pad) {
  require(stride >= 1, Errc::invalid_argument, "stride must be >= 1");
  require(in + 2 * pad >= k, Errc::shape_mismatch,
          "kernel extent " + std::to_string(k) + " exceeds padded input " +
              std::to_string(in + 2 * pad));
  return (in + 2 * pad - k) / stride + 1;
}

// cols[(c*kh + i)*kw + j][(n*oh + y)*ow + x] = input[n, c, y*s - p + i, x*s - p + j]
template <typename T>
RowMat im2col(const T* input, const ConvGeometry& g) {
  RowMat cols(g.patch(), g.columns());
  parallel_for(g.c, [&](std::size_t c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = cols.data() + ((c * g.kh + i) * g.kw + j) * g.columns();
        for (std::size_t n = 0; n < g.n; ++n) {
          const T* plane = input + (n * g.c + c) * g.h * g.w;
          for (std::size_t y = 0; y < g.oh; ++y) {
            auto iy = static_cast<std::ptrdiff_t>(y * g.stride + i) -
                      static_cast<std::ptrdiff_t>(g.pad);
            double* dst = row + (n * g.oh + y) * g.ow;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
              for (std::size_t x = 0; x < g.ow; ++x) dst[x] = 0.0;
              continue;
            }
            for (std::size_t x = 0; x < g.ow; ++x) {
              auto ix = static_cast<std::ptrdiff_t>(x * g.stride + j) -
                        static_cast<std::ptrdiff_t>(g.pad);
              dst[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                           ? 0.0
                           : static_cast<double>(plane[iy * g.w + ix]);
            }
          }
        }
      }
    }
  });
  return cols;
}

// Adjoint of im2col: scatter-add columns back into an [N,C,H,W] buffer.
template <typename T>
BasicTensor<T> col2im(const RowMat& cols, const ConvGeometry& g) {
  BasicTensor<T> out(Shape{g.n, g.c, g.h, g.w});
  parallel_for(g.n * g.c, [&](std::size_t nc) {
    std::size_t n = nc / g.c, c = nc % g.c;
    std::vector<double> acc(g.h * g.w, 0.0);
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = cols.data() + ((c * g.kh + i) * g.kw + j) * g.columns();
        for (std::size_t y = 0; y < g.oh; ++y) {
          auto iy = static_cast<std::ptrdiff_t>(y * g.stride + i) -
                    static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          const double* src = row + (n * g.oh + y) * g.ow;
          for (std::size_t x = 0; x < g.ow; ++x) {
            auto ix = static_cast<std::ptrdiff_t>(x * g.stride + j) -
                      static_cast<std::ptrdiff_t>(g.pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            acc[iy * g.w + ix] += src[x];
          }
        }
      }
    }
    T* dst = out.data() + nc * g.h * g.w;
    for (std::size_t k = 0; k < acc.size(); ++k) dst[k] = static_cast<T>(acc[k]);
  });
  return out;
}

// [N,F,oh,ow] tensor <-> F x (N*oh*ow) matrix.
template <typename T>
RowMat channels_to_rows(const BasicTensor<T>& t) {
  std::size_t n = t.dim(0), f = t.dim(1), hw = t.dim(2) * t.dim(3);
  RowMat m(f, n * hw);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < f; ++ch) {
      const T* src = t.data() + (b * f + ch) * hw;
      double* dst = m.data() + ch * n * hw + b * hw;
      for (std::size_t k = 0; k < hw; ++k) dst[k] = static_cast<double>(src[k]);
    }
  return m;
}

template <typename T>
BasicTensor<T> rows_to_channels(const RowMat& m, std::size_t n, std::size_t h,
                                std::size_t w) {
  std::size_t f = static_cast<std::size_t>(m.rows()), hw = h * w;
  BasicTensor<T> out(Shape{n, f, h, w});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < f; ++ch) {
      const double* src = m.data() + ch * n * hw + b * hw;
      T* dst = out.data() + (b * f + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) dst[k] = static_cast<T>(src[k]);
    }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return zip(a, b, "add", [](T x, T y) { return x + y; });
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return zip(a, b, "sub", [](T x, T y) { return x - y; });
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return zip(a, b, "mul", [](T x, T y) { return x * y; });
}
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, T b) {
  return map(a, [b](T x) { return x + b; });
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, T b) {
  return map(a, [b](T x) { return x - b; });
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, T b) {
  return map(a, [b](T x) { return x * b; });
}
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  return mul(a, factor);
}

template <typename T>
void axpy(BasicTensor<T>& a, T factor, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += factor * b[i];
}

template <typename T>
double sum(const BasicTensor<T>& a) {
  double s = 0.0;
  for (T v : a.values()) s += v;
  return s;
}

template <typename T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename T>
double squared_norm(const BasicTensor<T>& a) {
  return dot(a, a);
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          Errc::shape_mismatch,
          "matmul: inner extents differ for " + a.shape().str() + " x " +
              b.shape().str());
  std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  RowMat out(m, n);
  out.noalias() = to_matrix(a.data(), m, k) * to_matrix(b.data(), k, n);
  BasicTensor<T> result(Shape{m, n});
  for (std::size_t i = 0; i < m * n; ++i) result[i] = static_cast<T>(out.data()[i]);
  return result;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  require(a.rank() == 2, Errc::shape_mismatch,
          "transpose needs a matrix, got " + a.shape().str());
  std::size_t m = a.dim(0), n = a.dim(1);
  BasicTensor<T> out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      std::size_t stride, std::size_t pad) {
  require_rank4(input.shape(), "conv2d input");
  require_rank4(kernel.shape(), "conv2d kernel");
  require(input.dim(1) == kernel.dim(1), Errc::shape_mismatch,
          "conv2d: input " + input.shape().str() + " vs kernel " +
              kernel.shape().str() + " channel mismatch");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 kernel.dim(0), kernel.dim(2), kernel.dim(3), stride, pad, 0, 0};
  g.oh = window_extent(g.h, g.kh, stride, pad);
  g.ow = window_extent(g.w, g.kw, stride, pad);
  require((g.h + 2 * pad - g.kh) % stride == 0 && (g.w + 2 * pad - g.kw) % stride == 0,
          Errc::shape_mismatch,
          "conv2d: output extent is not integral for input " +
              input.shape().str() + ", kernel " + kernel.shape().str() +
              ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));

  RowMat cols = im2col(input.data(), g);
  RowMat out(g.f, g.columns());
  out.noalias() = to_matrix(kernel.data(), g.f, g.patch()) * cols;
  return rows_to_channels<T>(out, g.n, g.oh, g.ow);
}

template <typename T>
BasicTensor<T> conv2d_input_grad(const BasicTensor<T>& grad_out,
                                 const BasicTensor<T>& kernel, std::size_t in_h,
                                 std::size_t in_w, std::size_t stride,
                                 std::size_t pad) {
  require_rank4(grad_out.shape(), "conv2d_input_grad gradient");
  require_rank4(kernel.shape(), "conv2d_input_grad kernel");
  require(grad_out.dim(1) == kernel.dim(0), Errc::shape_mismatch,
          "conv2d_input_grad: gradient " + grad_out.shape().str() +
              " vs kernel " + kernel.shape().str() + " channel mismatch");
  require(in_h > 0 && in_w > 0, Errc::shape_mismatch,
          "conv2d_input_grad: non-positive output extent");
  ConvGeometry g{grad_out.dim(0), kernel.dim(1), in_h, in_w, kernel.dim(0),
                 kernel.dim(2), kernel.dim(3), stride, pad, 0, 0};
  g.oh = window_extent(in_h, g.kh, stride, pad);
  g.ow = window_extent(in_w, g.kw, stride, pad);
  require(g.oh == grad_out.dim(2) && g.ow == grad_out.dim(3), Errc::shape_mismatch,
          "conv2d_input_grad: input extent " + std::to_string(in_h) + "x" +
              std::to_string(in_w) + " does not produce gradient " +
              grad_out.shape().str());

  RowMat cols(g.patch(), g.columns());
  cols.noalias() =
      to_matrix(kernel.data(), g.f, g.patch()).transpose() * channels_to_rows(grad_out);
  return col2im<T>(cols, g);
}

template <typename T>
BasicTensor<T> conv2d_kernel_grad(const BasicTensor<T>& input,
                                  const BasicTensor<T>& grad_out, std::size_t kh,
                                  std::size_t kw, std::size_t stride,
                                  std::size_t pad) {
  require_rank4(input.shape(), "conv2d_kernel_grad input");
  require_rank4(grad_out.shape(), "conv2d_kernel_grad gradient");
  require(input.dim(0) == grad_out.dim(0), Errc::shape_mismatch,
          "conv2d_kernel_grad: batch mismatch " + input.shape().str() + " vs " +
              grad_out.shape().str());
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                 grad_out.dim(1), kh, kw, stride, pad, 0, 0};
  g.oh = window_extent(g.h, kh, stride, pad);
  g.ow = window_extent(g.w, kw, stride, pad);
  require(g.oh == grad_out.dim(2) && g.ow == grad_out.dim(3), Errc::shape_mismatch,
          "conv2d_kernel_grad: gradient " + grad_out.shape().str() +
              " does not match input " + input.shape().str());

  RowMat grad(g.f, g.patch());
  grad.noalias() = channels_to_rows(grad_out) * im2col(input.data(), g).transpose();
  BasicTensor<T> out(Shape{g.f, g.c, kh, kw});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(grad.data()[i]);
  return out;
}

template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& input,
                                const BasicTensor<T>& kernel,
                                std::size_t stride, std::size_t pad) {
  require_rank4(input.shape(), "conv_transpose2d input");
  require_rank4(kernel.shape(), "conv_transpose2d kernel");
  require(stride >= 1, Errc::invalid_argument, "stride must be >= 1");
  auto extent = [&](std::size_t in, std::size_t k) -> std::size_t {
    auto e = static_cast<std::ptrdiff_t>((in - 1) * stride + k) -
             static_cast<std::ptrdiff_t>(2 * pad);
    require(e > 0, Errc::shape_mismatch,
            "conv_transpose2d: non-positive output extent for input " +
                input.shape().str() + ", kernel " + kernel.shape().str());
    return static_cast<std::size_t>(e);
  };
  return conv2d_input_grad(input, kernel, extent(input.dim(2), kernel.dim(2)),
                           extent(input.dim(3), kernel.dim(3)), stride, pad);
}

#define GLO_INSTANTIATE(T)                                                        \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> add(const BasicTensor<T>&, T);                          \
  template BasicTensor<T> sub(const BasicTensor<T>&, T);                          \
  template BasicTensor<T> mul(const BasicTensor<T>&, T);                          \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                        \
  template void axpy(BasicTensor<T>&, T, const BasicTensor<T>&);                  \
  template double sum(const BasicTensor<T>&);                                     \
  template double dot(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template double squared_norm(const BasicTensor<T>&);                            \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                       \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,    \
                                 std::size_t, std::size_t);                       \
  template BasicTensor<T> conv_transpose2d(const BasicTensor<T>&,                 \
                                           const BasicTensor<T>&, std::size_t,    \
                                           std::size_t);                          \
  template BasicTensor<T> conv2d_input_grad(const BasicTensor<T>&,                \
                                            const BasicTensor<T>&, std::size_t,   \
                                            std::size_t, std::size_t,             \
                                            std::size_t);                         \
  template BasicTensor<T> conv2d_kernel_grad(const BasicTensor<T>&,               \
                                             const BasicTensor<T>&, std::size_t,  \
                                             std::size_t, std::size_t, std::size_t);

GLO_INSTANTIATE(float)
GLO_INSTANTIATE(double)

#undef GLO_INSTANTIATE

}  // namespace glo
