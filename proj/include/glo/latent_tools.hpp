#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glo/latent_table.hpp"
#include "glo/rng.hpp"
#include "glo/tensor.hpp"

namespace glo {

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Tensor mean;         // [D]
  Tensor components;   // [d, D], orthonormal rows, descending eigenvalue
  Tensor eigenvalues;  // [d], covariance normalized by 1/N
};

struct PcaOptions {
  std::size_t max_iterations = 20000;
  double tolerance = 1e-10;  // residual |C v - lambda v| relative to lambda_1
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// Top-d principal components of data [N,D] by orthogonal (block power)
/// iteration with Rayleigh-Ritz refinement. Each component's
/// largest-magnitude entry is made positive. Requires N > 1 and
/// 1 <= d <= min(N-1, D).
PcaModel pca(const Tensor& data, std::size_t d, const PcaOptions& options = {});

/// Coefficients [N,d] of the centered rows of data [N,D].
Tensor pca_project(const PcaModel& model, const Tensor& data);
/// mean + coefficients * components, [N,D].
Tensor pca_reconstruct(const PcaModel& model, const Tensor& coefficients);

// ---------------------------------------------------------------------------
// Gaussian over codes

struct GaussianModel {
  Tensor mean;    // [d]
  Tensor cov;     // [d,d], maximum-likelihood (1/N)
  Tensor chol;    // lower triangular, chol * chol^T = cov + jitter * I
  double jitter = 0.0;
};

/// Full-covariance Gaussian fitted to codes [N,d], N >= 2. The jitter is
/// 1e-6 * trace(cov) / d, floored at 1e-12 so identical codes still factor.
GaussianModel fit_gaussian(const Tensor& codes);
inline GaussianModel fit_gaussian(const CodeTable& table) { return fit_gaussian(table.codes()); }

/// n draws mean + chol * eps. Optionally projected onto the unit ball.
Tensor sample(const GaussianModel& model, Rng& rng, std::size_t n, bool project = false);

/// Lower Cholesky factor of a symmetric positive definite matrix [d,d].
TensorD cholesky(const TensorD& spd);

// ---------------------------------------------------------------------------
// Code-space edits

enum class InterpolationMode { linear, spherical };

/// `steps` codes from z_a to z_b (t = i / (steps - 1)); rows 0 and steps-1
/// are z_a and z_b exactly. Linear mode projects each blend onto the unit
/// ball. Spherical mode slerps the directions and blends the norms linearly;
/// it rejects zero or antipodal endpoints.
Tensor interpolate(const Tensor& z_a, const Tensor& z_b, std::size_t steps,
                   InterpolationMode mode = InterpolationMode::linear);

/// project(mean(a) - mean(b) + mean(c)) for groups given as [k,d] tensors.
Tensor arithmetic(const Tensor& group_a, const Tensor& group_b, const Tensor& group_c);

/// project(mean + t * sqrt(lambda_k) * v_k) for t evenly spaced over
/// [-span, span]; k is 1-based. With an odd step count the middle row is
/// the projected mean.
Tensor principal_traversal(const PcaModel& model, std::size_t k, double span,
                           std::size_t steps);

}  // namespace glo
