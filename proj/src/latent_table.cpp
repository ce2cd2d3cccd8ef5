#include "glo/latent_table.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "glo/latent_tools.hpp"
#include "glo/ops.hpp"

namespace glo {
namespace {

double norm(std::span<const float> z) {
  double s = 0.0;
  for (float v : z) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

}  // namespace

void project_code_inplace(std::span<float> z) {
  for (float v : z)
    require(std::isfinite(v), Errc::non_finite, "cannot project a non-finite code");
  const double n = norm(z);
  if (n <= 1.0) return;
  // Rounding can leave the quotient a hair outside the ball; shrink until the
  // stored floats are inside, which also makes a second projection a no-op.
  const std::vector<float> original(z.begin(), z.end());
  double factor = 1.0 / n;
  for (;;) {
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = static_cast<float>(original[i] * factor);
    if (norm(z) <= 1.0) return;
    factor *= 1.0 - 0x1.0p-24;
  }
}

Tensor project_code(const Tensor& z) {
  Tensor out = z;
  project_code_inplace(out.values());
  return out;
}

CodeTable::CodeTable(Tensor codes) : codes_(std::move(codes)) {
  require(codes_.rank() == 2, Errc::shape_mismatch,
          "code table must be [N,d], got " + codes_.shape().str());
  const std::size_t d = codes_.dim(1);
  for (std::size_t i = 0; i < codes_.dim(0); ++i)
    project_code_inplace(codes_.values().subspan(i * d, d));
}

CodeTable CodeTable::init_gaussian(Rng& rng, std::size_t count, std::size_t dim) {
  require(count >= 1 && dim >= 1, Errc::invalid_argument,
          "code table needs N >= 1 and d >= 1");
  return CodeTable(rng_normal<float>(rng, Shape{count, dim}));
}

CodeTable CodeTable::init_pca(const Tensor& images, std::size_t dim) {
  require(images.rank() >= 2, Errc::shape_mismatch,
          "PCA init expects a batch of images, got " + images.shape().str());
  const std::size_t n = images.dim(0);
  require(n > dim, Errc::invalid_argument,
          "PCA init needs more images (" + std::to_string(n) + ") than code dimensions (" +
              std::to_string(dim) + ")");
  Tensor flat = images.reshaped(Shape{n, images.size() / n});
  PcaModel model = pca(flat, dim);
  return CodeTable(pca_project(model, flat));
}

Tensor CodeTable::row(std::size_t i) const {
  require(i < size(), Errc::invalid_argument,
          "code index " + std::to_string(i) + " out of range (N=" + std::to_string(size()) + ")");
  return codes_.slice(i);
}

Tensor CodeTable::rows(std::span<const std::size_t> indices) const {
  return gather_rows(codes_, indices);
}

void CodeTable::sgd_step(std::span<const std::size_t> indices, const Tensor& grads, float lr) {
  const std::size_t d = dim();
  require(grads.rank() == 2 && grads.dim(0) == indices.size() && grads.dim(1) == d,
          Errc::shape_mismatch,
          "code gradients " + grads.shape().str() + " do not match " +
              std::to_string(indices.size()) + " rows of dimension " + std::to_string(d));
  std::vector<bool> seen(size(), false);
  for (std::size_t i : indices) {
    require(i < size(), Errc::invalid_argument,
            "code index " + std::to_string(i) + " out of range (N=" + std::to_string(size()) + ")");
    require(!seen[i], Errc::invalid_argument,
            "code index " + std::to_string(i) + " repeated within a batch");
    seen[i] = true;
  }
  for (std::size_t b = 0; b < indices.size(); ++b) {
    std::span<float> z = codes_.values().subspan(indices[b] * d, d);
    for (std::size_t k = 0; k < d; ++k) z[k] -= lr * grads[b * d + k];
    project_code_inplace(z);
  }
}

}  // namespace glo
