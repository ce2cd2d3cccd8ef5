#include "glo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glo/ops.hpp"

namespace glo {

PsnrValue psnr(const Tensor& image, const Tensor& recon, double max_value) {
  require_same_shape(image.shape(), recon.shape(), "psnr");
  require(max_value > 0.0, Errc::invalid_argument, "psnr max_value must be > 0");
  require(image.size() > 0, Errc::invalid_argument, "psnr of an empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = static_cast<double>(image[i]) - recon[i];
    se += d * d;
  }
  require(std::isfinite(se), Errc::non_finite, "psnr of non-finite images");
  if (se == 0.0) return {kPerfectMatchDb, true};
  const double mse = se / static_cast<double>(image.size());
  return {20.0 * std::log10(max_value / std::sqrt(mse)), false};
}

double mean_psnr(const Tensor& images, const Tensor& recons, double max_value) {
  require_same_shape(images.shape(), recons.shape(), "mean_psnr");
  require(images.rank() >= 2, Errc::shape_mismatch, "mean_psnr needs a batch [N,...]");
  const std::size_t n = images.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += psnr(images.slice(i), recons.slice(i), max_value).db;
  return total / static_cast<double>(n);
}

void RecoveryConfig::validate() const {
  require(steps >= 1, Errc::invalid_argument, "recovery steps must be >= 1");
  require(lr >= 0.0f && std::isfinite(lr), Errc::invalid_argument,
          "recovery lr must be finite and >= 0");
  require(batch_size >= 1, Errc::invalid_argument, "recovery batch_size must be >= 1");
  require(init != RecoveryInit::pca_projection || image_pca != nullptr, Errc::invalid_argument,
          "pca-projection init needs an image PCA model");
  loss.validate();
}

namespace {

Tensor initial_codes(const RecoveryConfig& config, const Tensor& targets, std::size_t d,
                     std::size_t first) {
  const std::size_t b = targets.dim(0);
  Tensor z(Shape{b, d}, 0.0f);
  switch (config.init) {
    case RecoveryInit::zeros:
      break;
    case RecoveryInit::gaussian:
      for (std::size_t i = 0; i < b; ++i) {
        // Per-image stream so codes do not depend on batching.
        Rng rng(config.seed + first + i);
        for (std::size_t k = 0; k < d; ++k) z.at(i, k) = static_cast<float>(rng.normal());
      }
      break;
    case RecoveryInit::pca_projection: {
      const PcaModel& m = *config.image_pca;
      require(m.components.dim(0) == d, Errc::shape_mismatch,
              "image PCA has " + std::to_string(m.components.dim(0)) +
                  " components, code dimension is " + std::to_string(d));
      z = pca_project(m, targets.reshaped(Shape{b, targets.size() / b}));
      break;
    }
  }
  for (std::size_t i = 0; i < b; ++i) project_code_inplace({z.data() + i * d, d});
  return z;
}

// Recovers one chunk; `first` is the chunk's offset in the caller's batch.
void recover_chunk(GeneratorParams<float>& params, const Tensor& targets,
                   const RecoveryConfig& config, std::size_t first,
                   std::vector<RecoveryResult>& out) {
  const std::size_t b = targets.dim(0), d = params.config().latent_dim;
  Tensor z = initial_codes(config, targets, d, first);
  std::vector<double> best(b, 0.0);

  for (std::size_t step = 0; step <= config.steps; ++step) {
    auto fwd = generator_forward(params, z, Mode::eval);
    Tensor grad(fwd.images.shape());
    const std::size_t per = fwd.images.size() / b;
    for (std::size_t i = 0; i < b; ++i) {
      Tensor x = fwd.images.slice(i, i + 1);
      LossValue<float> lv = combined_loss(x, targets.slice(i, i + 1), config.loss);
      if (!std::isfinite(lv.value))
        fail(Errc::non_finite, "non-finite recovery loss at step " + std::to_string(step));
      RecoveryResult& r = out[first + i];
      if (step == 0) r.initial_loss = lv.value;
      if (step == 0 || lv.value < best[i]) {
        best[i] = lv.value;
        r.loss = lv.value;
        r.code = z.slice(i);
        r.psnr = psnr(x, targets.slice(i, i + 1), kUnitRangeMax);
      }
      std::copy(lv.grad.data(), lv.grad.data() + per, grad.data() + i * per);
    }
    if (step == config.steps) break;
    GeneratorGrads<float> g = generator_backward(fwd.cache, grad, /*param_grads=*/false);
    axpy(z, -config.lr, g.z);
    for (std::size_t i = 0; i < b; ++i) project_code_inplace({z.data() + i * d, d});
  }
}

}  // namespace

std::vector<RecoveryResult> recover_codes(const GeneratorParams<float>& params,
                                          const Tensor& targets, const RecoveryConfig& config) {
  config.validate();
  const GeneratorConfig& gc = params.config();
  require(targets.rank() == 4 && targets.dim(1) == gc.channels &&
              targets.dim(2) == gc.image_size && targets.dim(3) == gc.image_size,
          Errc::shape_mismatch,
          "recovery targets " + targets.shape().str() + " do not match the generator output");
  // Eval mode never writes to the parameters; the copy only satisfies the
  // forward signature.
  GeneratorParams<float> frozen = params;
  const std::size_t n = targets.dim(0);
  std::vector<RecoveryResult> out(n);
  for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
    const std::size_t end = std::min(n, begin + config.batch_size);
    recover_chunk(frozen, targets.slice(begin, end), config, begin, out);
  }
  return out;
}

RecoveryResult recover_code(const GeneratorParams<float>& params, const Tensor& target,
                            const RecoveryConfig& config) {
  if (target.rank() == 3) {
    const Shape& s = target.shape();
    return recover_codes(params, target.reshaped(Shape{1, s[0], s[1], s[2]}), config).front();
  }
  require(target.rank() == 4 && target.dim(0) == 1, Errc::shape_mismatch,
          "recover_code target must be [C,S,S] or [1,C,S,S], got " + target.shape().str());
  return recover_codes(params, target, config).front();
}

std::string_view to_string(Split split) {
  return split == Split::train ? "train" : "test";
}

double PsnrReport::mean() const {
  if (entries.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : entries) total += e.value.db;
  return total / static_cast<double>(entries.size());
}

std::string PsnrReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "# method=" << method << " split=" << to_string(split) << " mean_psnr_db=" << mean()
      << '\n'
      << "# pSNR = 20 log10(MAX / sqrt(MSE)) with MAX = 2 on [-1,1] pixels, identical to\n"
      << "# MAX = 255 on the 8-bit pixels; perfect matches report " << kPerfectMatchDb
      << " dB and perfect_match=1\n"
      << "index,split,psnr_db,perfect_match\n";
  for (const auto& e : entries)
    out << e.index << ',' << to_string(split) << ',' << e.value.db << ','
        << (e.value.perfect_match ? 1 : 0) << '\n';
  return out.str();
}

namespace {

void check_indices(const Tensor& images, std::span<const std::size_t> indices) {
  require(images.rank() == 4, Errc::shape_mismatch,
          "images must be [N,C,S,S], got " + images.shape().str());
  for (std::size_t i : indices)
    require(i < images.dim(0), Errc::invalid_argument,
            "image index " + std::to_string(i) + " out of range for " +
                std::to_string(images.dim(0)) + " images");
}

}  // namespace

PsnrReport reconstruction_report(const GeneratorParams<float>& params, const CodeTable& table,
                                 const Tensor& images, std::span<const std::size_t> indices,
                                 Split split, const RecoveryConfig& config) {
  check_indices(images, indices);
  PsnrReport report{split, split == Split::train ? "glo/stored-codes" : "glo/recovered-codes",
                    {}};
  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
    const auto chunk = indices.subspan(begin, std::min(kChunk, indices.size() - begin));
    const Tensor targets = gather_rows(images, chunk);
    if (split == Split::train) {
      require(table.size() == images.dim(0), Errc::shape_mismatch,
              "code table has " + std::to_string(table.size()) + " rows for " +
                  std::to_string(images.dim(0)) + " training images");
      const Tensor recon = generate(params, table.rows(chunk));
      for (std::size_t i = 0; i < chunk.size(); ++i)
        report.entries.push_back(
            {chunk[i], psnr(targets.slice(i), recon.slice(i), kUnitRangeMax)});
    } else {
      const auto results = recover_codes(params, targets, config);
      for (std::size_t i = 0; i < chunk.size(); ++i)
        report.entries.push_back({chunk[i], results[i].psnr});
    }
  }
  return report;
}

PsnrReport pca_baseline_report(const PcaModel& model, const Tensor& images,
                               std::span<const std::size_t> indices, Split split) {
  check_indices(images, indices);
  PsnrReport report{split, "pca", {}};
  if (indices.empty()) return report;
  const Tensor targets = gather_rows(images, indices);
  const std::size_t n = targets.dim(0);
  const Tensor flat = targets.reshaped(Shape{n, targets.size() / n});
  Tensor recon = pca_reconstruct(model, pca_project(model, flat));
  for (std::size_t i = 0; i < recon.size(); ++i) recon[i] = std::clamp(recon[i], -1.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i)
    report.entries.push_back(
        {indices[i], psnr(flat.slice(i), recon.slice(i), kUnitRangeMax)});
  return report;
}

}  // namespace glo
