#pragma once

#include <cstddef>

#include "glo/tensor.hpp"

namespace glo {

// Pointwise arithmetic. Tensor-tensor forms require equal shapes.
template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, T b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, T b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, T b);
template <typename T> BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

/// a += factor * b
template <typename T>
void axpy(BasicTensor<T>& a, T factor, const BasicTensor<T>& b);

// Reductions accumulate in double.
template <typename T> double sum(const BasicTensor<T>& a);
template <typename T> double dot(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> double squared_norm(const BasicTensor<T>& a);

/// [M,K] x [K,N] -> [M,N], accumulated in double then rounded.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

/// Cross-correlation with zero padding.
/// input [N,C,H,W], kernel [F,C,kh,kw] -> [N,F,H',W'] with
/// H' = (H + 2*pad - kh) / stride + 1, which must divide exactly.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      std::size_t stride, std::size_t pad);

/// Transposed convolution, the adjoint of conv2d for the same kernel.
/// input [N,C,H,W], kernel [C,F,kh,kw] -> [N,F,H',W'] with
/// H' = (H - 1) * stride - 2 * pad + kh.
template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& input,
                                const BasicTensor<T>& kernel,
                                std::size_t stride, std::size_t pad);

/// Gradient of conv2d with respect to its input, for an input of extent
/// in_h x in_w. Unlike conv_transpose2d the output extent is explicit, so it
/// also covers strides that skip trailing input rows.
template <typename T>
BasicTensor<T> conv2d_input_grad(const BasicTensor<T>& grad_out,
                                 const BasicTensor<T>& kernel, std::size_t in_h,
                                 std::size_t in_w, std::size_t stride,
                                 std::size_t pad);

/// Gradient of conv2d with respect to its kernel [F,C,kh,kw].
template <typename T>
BasicTensor<T> conv2d_kernel_grad(const BasicTensor<T>& input,
                                  const BasicTensor<T>& grad_out, std::size_t kh,
                                  std::size_t kw, std::size_t stride,
                                  std::size_t pad);

}  // namespace glo
