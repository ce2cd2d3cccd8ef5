#pragma once

#include <cstddef>
#include <span>

#include "glo/rng.hpp"
#include "glo/tensor.hpp"

namespace glo {

/// z / max(|z|_2, 1): the identity inside the unit ball, radial projection
/// onto the unit sphere outside it.
Tensor project_code(const Tensor& z);
void project_code_inplace(std::span<float> z);

/// One learnable code per training image. Row i belongs to training image i
/// for the lifetime of the table; every public mutation leaves each row
/// inside the unit ball.
class CodeTable {
 public:
  CodeTable() = default;
  /// Adopts `codes` [N,d], projecting every row.
  explicit CodeTable(Tensor codes);

  /// Rows drawn i.i.d. N(0, I) then projected.
  static CodeTable init_gaussian(Rng& rng, std::size_t count, std::size_t dim);
  /// Rows are the top-`dim` principal coefficients of the centered,
  /// flattened images, then projected. Requires count > dim.
  static CodeTable init_pca(const Tensor& images, std::size_t dim);

  std::size_t size() const { return codes_.empty() ? 0 : codes_.dim(0); }
  std::size_t dim() const { return codes_.empty() ? 0 : codes_.dim(1); }
  const Tensor& codes() const { return codes_; }
  Tensor row(std::size_t i) const;
  Tensor rows(std::span<const std::size_t> indices) const;

  /// z_i <- project(z_i - lr * grad_i) for each listed row. Indices must be
  /// in range and unique; other rows are untouched.
  void sgd_step(std::span<const std::size_t> indices, const Tensor& grads, float lr);

 private:
  Tensor codes_;
};

}  // namespace glo
