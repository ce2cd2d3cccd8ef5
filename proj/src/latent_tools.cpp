#include "glo/latent_tools.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glo/ops.hpp"

namespace glo {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat to_eigen(const Tensor& t) {
  Mat m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m(i, j) = t.at(i, j);
  return m;
}

Tensor from_eigen(const Mat& m) {
  Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.at(i, j) = static_cast<float>(m(i, j));
  return t;
}

Tensor vector_tensor(const Vec& v) {
  Tensor t(Shape{static_cast<std::size_t>(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i) t[i] = static_cast<float>(v(i));
  return t;
}

Vec column_mean(const Mat& m) { return m.colwise().mean().transpose(); }

void require_matrix(const Tensor& t, const char* what) {
  require(t.rank() == 2, Errc::shape_mismatch,
          std::string(what) + " must be a matrix, got " + t.shape().str());
}

}  // namespace

// ---------------------------------------------------------------------------
// PCA

PcaModel pca(const Tensor& data, std::size_t d, const PcaOptions& options) {
  require_matrix(data, "PCA data");
  const std::size_t n = data.dim(0), dim = data.dim(1);
  require(n > 1, Errc::invalid_argument, "PCA needs at least two samples");
  require(d >= 1 && d <= std::min(n - 1, dim), Errc::invalid_argument,
          "PCA rank " + std::to_string(d) + " outside [1, min(N-1, D)] = [1, " +
              std::to_string(std::min(n - 1, dim)) + "]");

  Mat x = to_eigen(data);
  const Vec mean = column_mean(x);
  x.rowwise() -= mean.transpose();
  const Mat cov = (x.transpose() * x) / static_cast<double>(n);

  // Oversampled block: convergence is governed by lambda_{b+1} / lambda_d.
  const std::size_t block = std::min(dim, 2 * d + 8);
  Rng rng(options.seed);
  Mat basis(dim, block);
  for (Eigen::Index j = 0; j < basis.cols(); ++j)
    for (Eigen::Index i = 0; i < basis.rows(); ++i) basis(i, j) = rng.normal();

  Vec ritz;
  double residual = 0.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Mat image = cov * basis;
    Eigen::HouseholderQR<Mat> qr(image);
    basis = qr.householderQ() * Mat::Identity(dim, block);

    // Rayleigh-Ritz on the current subspace.
    Mat projected = basis.transpose() * cov * basis;
    Eigen::SelfAdjointEigenSolver<Mat> small((projected + projected.transpose()) / 2.0);
    Mat rot = small.eigenvectors().rowwise().reverse();
    ritz = small.eigenvalues().reverse();
    basis = basis * rot;

    const Mat lead = basis.leftCols(d);
    const Mat r = cov * lead - lead * ritz.head(d).asDiagonal();
    residual = r.colwise().norm().maxCoeff();
    const double scale = std::max(std::abs(ritz(0)), 1e-300);
    if (residual <= options.tolerance * scale || ritz(0) == 0.0) break;
    if (it + 1 == options.max_iterations)
      fail(Errc::not_converged,
           "PCA block iteration did not converge after " + std::to_string(it + 1) +
               " iterations (max residual " + std::to_string(residual) +
               ", lambda_1 " + std::to_string(ritz(0)) + ")");
  }

  PcaModel model;
  model.mean = vector_tensor(mean);
  Mat comps = basis.leftCols(d).transpose();
  for (Eigen::Index i = 0; i < comps.rows(); ++i) {
    Eigen::Index arg = 0;
    comps.row(i).cwiseAbs().maxCoeff(&arg);
    if (comps(i, arg) < 0) comps.row(i) *= -1.0;
  }
  model.components = from_eigen(comps);
  model.eigenvalues = vector_tensor(ritz.head(d).cwiseMax(0.0));
  return model;
}

Tensor pca_project(const PcaModel& model, const Tensor& data) {
  require_matrix(data, "PCA input");
  require(data.dim(1) == model.mean.size(), Errc::shape_mismatch,
          "PCA input " + data.shape().str() + " does not match model dimension " +
              std::to_string(model.mean.size()));
  Mat x = to_eigen(data);
  Vec mean(model.mean.size());
  for (std::size_t i = 0; i < model.mean.size(); ++i) mean(i) = model.mean[i];
  x.rowwise() -= mean.transpose();
  return from_eigen(x * to_eigen(model.components).transpose());
}

Tensor pca_reconstruct(const PcaModel& model, const Tensor& coefficients) {
  require_matrix(coefficients, "PCA coefficients");
  require(coefficients.dim(1) == model.components.dim(0), Errc::shape_mismatch,
          "PCA coefficients " + coefficients.shape().str() + " do not match " +
              std::to_string(model.components.dim(0)) + " components");
  Mat out = to_eigen(coefficients) * to_eigen(model.components);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += model.mean[j];
  return from_eigen(out);
}

// ---------------------------------------------------------------------------
// Gaussian

TensorD cholesky(const TensorD& a) {
  require(a.rank() == 2 && a.dim(0) == a.dim(1), Errc::shape_mismatch,
          "cholesky needs a square matrix, got " + a.shape().str());
  const std::size_t d = a.dim(0);
  TensorD l(Shape{d, d});
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a.at(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
    if (!(diag > 0.0))
      fail(Errc::not_positive_definite,
           "cholesky: pivot " + std::to_string(j) + " is " + std::to_string(diag));
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = s / ljj;
    }
  }
  return l;
}

GaussianModel fit_gaussian(const Tensor& codes) {
  require_matrix(codes, "codes");
  const std::size_t n = codes.dim(0), d = codes.dim(1);
  require(n >= 2, Errc::invalid_argument, "fitting a Gaussian needs at least two codes");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) mean[k] += codes.at(i, k);
  for (double& m : mean) m /= static_cast<double>(n);

  TensorD cov(Shape{d, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = codes.at(i, a) - mean[a];
      for (std::size_t b = 0; b <= a; ++b) cov.at(a, b) += da * (codes.at(i, b) - mean[b]);
    }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      cov.at(a, b) /= static_cast<double>(n);
      cov.at(b, a) = cov.at(a, b);
    }
    trace += cov.at(a, a);
  }

  GaussianModel model;
  model.jitter = std::max(1e-6 * trace / static_cast<double>(d), 1e-12);
  TensorD regularized = cov;
  for (std::size_t a = 0; a < d; ++a) regularized.at(a, a) += model.jitter;
  model.chol = cholesky(regularized).cast<float>();
  model.cov = cov.cast<float>();
  model.mean = Tensor(Shape{d});
  for (std::size_t k = 0; k < d; ++k) model.mean[k] = static_cast<float>(mean[k]);
  return model;
}

Tensor sample(const GaussianModel& model, Rng& rng, std::size_t n, bool project) {
  require(n >= 1, Errc::invalid_argument, "sample count must be >= 1");
  const std::size_t d = model.mean.size();
  Tensor out(Shape{n, d});
  std::vector<double> eps(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& e : eps) e = rng.normal();
    for (std::size_t a = 0; a < d; ++a) {
      double v = model.mean[a];
      for (std::size_t b = 0; b <= a; ++b) v += model.chol.at(a, b) * eps[b];
      out.at(i, a) = static_cast<float>(v);
    }
    if (project) project_code_inplace(out.values().subspan(i * d, d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Code-space edits

Tensor interpolate(const Tensor& z_a, const Tensor& z_b, std::size_t steps,
                   InterpolationMode mode) {
  require(z_a.rank() == 1, Errc::shape_mismatch,
          "interpolation endpoints must be vectors, got " + z_a.shape().str());
  require_same_shape(z_a.shape(), z_b.shape(), "interpolate");
  require(steps >= 2, Errc::invalid_argument, "interpolation needs at least 2 steps");
  const std::size_t d = z_a.size();
  Tensor out(Shape{steps, d});
  out.set_slice(0, z_a);
  out.set_slice(steps - 1, z_b);
  if (steps == 2) return out;

  const double na = std::sqrt(squared_norm(z_a)), nb = std::sqrt(squared_norm(z_b));
  double omega = 0.0;
  if (mode == InterpolationMode::spherical) {
    require(na > 0.0 && nb > 0.0, Errc::invalid_argument,
            "spherical interpolation needs nonzero endpoints");
    const double cosine = std::clamp(dot(z_a, z_b) / (na * nb), -1.0, 1.0);
    require(cosine > -1.0 + 1e-6, Errc::invalid_argument,
            "spherical interpolation between antipodal codes is undefined");
    omega = std::acos(cosine);
  }

  const double denom = static_cast<double>(steps - 1);
  for (std::size_t i = 1; i + 1 < steps; ++i) {
    const double t = static_cast<double>(i) / denom;
    const double s = static_cast<double>(steps - 1 - i) / denom;  // 1 - t
    std::span<float> row = out.values().subspan(i * d, d);
    if (mode == InterpolationMode::linear || omega < 1e-7) {
      for (std::size_t k = 0; k < d; ++k) row[k] = static_cast<float>(s * z_a[k] + t * z_b[k]);
    } else {
      const double wa = std::sin(s * omega) / std::sin(omega);
      const double wb = std::sin(t * omega) / std::sin(omega);
      const double radius = s * na + t * nb;
      for (std::size_t k = 0; k < d; ++k)
        row[k] = static_cast<float>(radius * (wa * z_a[k] / na + wb * z_b[k] / nb));
    }
    project_code_inplace(row);
  }
  return out;
}

Tensor arithmetic(const Tensor& group_a, const Tensor& group_b, const Tensor& group_c) {
  auto mean = [](const Tensor& g, const char* which) {
    require(g.rank() == 2 && g.dim(0) >= 1, Errc::invalid_argument,
            std::string("arithmetic group ") + which + " must be a non-empty [k,d] tensor");
    std::vector<double> m(g.dim(1), 0.0);
    for (std::size_t i = 0; i < g.dim(0); ++i)
      for (std::size_t k = 0; k < g.dim(1); ++k) m[k] += g.at(i, k);
    for (double& v : m) v /= static_cast<double>(g.dim(0));
    return m;
  };
  const auto a = mean(group_a, "a"), b = mean(group_b, "b"), c = mean(group_c, "c");
  require(a.size() == b.size() && b.size() == c.size(), Errc::shape_mismatch,
          "arithmetic groups have different code dimensions");
  Tensor out(Shape{a.size()});
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = static_cast<float>(a[k] - b[k] + c[k]);
  project_code_inplace(out.values());
  return out;
}

Tensor principal_traversal(const PcaModel& model, std::size_t k, double span,
                           std::size_t steps) {
  const std::size_t d = model.components.dim(0), dim = model.mean.size();
  require(k >= 1 && k <= d, Errc::invalid_argument,
          "principal vector " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
  require(steps >= 1, Errc::invalid_argument, "traversal needs at least one step");
  const double stddev = std::sqrt(std::max(0.0, static_cast<double>(model.eigenvalues[k - 1])));
  Tensor out(Shape{steps, dim});
  for (std::size_t i = 0; i < steps; ++i) {
    const double t =
        steps == 1 ? 0.0
                   : span * (2.0 * static_cast<double>(i) - static_cast<double>(steps - 1)) /
                         static_cast<double>(steps - 1);
    std::span<float> row = out.values().subspan(i * dim, dim);
    for (std::size_t j = 0; j < dim; ++j)
      row[j] = static_cast<float>(model.mean[j] +
                                  t * stddev * model.components.at(k - 1, j));
    project_code_inplace(row);
  }
  return out;
}

}  // namespace glo
