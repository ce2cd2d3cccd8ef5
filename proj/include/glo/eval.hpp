#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "glo/latent_table.hpp"
#include "glo/latent_tools.hpp"
#include "glo/layers.hpp"
#include "glo/losses.hpp"

namespace glo {

/// Peak value for images normalized to [-1, 1]. pSNR at this peak equals
/// pSNR of the same images in 8-bit form with a peak of 255.
inline constexpr double kUnitRangeMax = 2.0;

/// Value reported (and averaged) for a perfect reconstruction.
inline constexpr double kPerfectMatchDb = 100.0;

struct PsnrValue {
  double db = 0.0;
  bool perfect_match = false;
};

/// 20 log10(max / sqrt(MSE)) over all elements. Zero MSE yields
/// {kPerfectMatchDb, true} instead of infinity.
PsnrValue psnr(const Tensor& image, const Tensor& recon, double max_value);

/// Mean per-image pSNR of batches [N,...].
double mean_psnr(const Tensor& images, const Tensor& recons, double max_value);

enum class RecoveryInit { zeros, gaussian, pca_projection };

struct RecoveryConfig {
  std::size_t steps = 500;
  float lr = 10.0f;
  LossConfig loss = LossConfig::mse();
  RecoveryInit init = RecoveryInit::zeros;
  std::uint64_t seed = 0;
  /// Image-space PCA used by RecoveryInit::pca_projection.
  std::shared_ptr<const PcaModel> image_pca;
  std::size_t batch_size = 32;

  void validate() const;
};

struct RecoveryResult {
  Tensor code;             // [d], best-loss iterate
  double loss = 0.0;       // loss at `code`
  double initial_loss = 0.0;
  PsnrValue psnr;          // of g(code) against the target
};

/// Fits codes to targets [B,C,S,S] by projected SGD on the codes alone, the
/// generator frozen in eval mode. Each image's loss is taken on its own;
/// the lowest-loss iterate among the steps + 1 visited is returned.
std::vector<RecoveryResult> recover_codes(const GeneratorParams<float>& params,
                                          const Tensor& targets, const RecoveryConfig& config);

/// Single image, target [C,S,S] or [1,C,S,S].
RecoveryResult recover_code(const GeneratorParams<float>& params, const Tensor& target,
                            const RecoveryConfig& config);

enum class Split { train, test };
std::string_view to_string(Split split);

struct PsnrEntry {
  std::size_t index = 0;  // dataset index of the image
  PsnrValue value;
};

struct PsnrReport {
  Split split = Split::train;
  std::string method;  // e.g. "glo/mse-codes", "pca"
  std::vector<PsnrEntry> entries;

  double mean() const;
  /// CSV: index,split,psnr_db,perfect_match after a comment header.
  std::string to_csv() const;
};

/// Train split: images [N,...] are reconstructed from table rows 0..N-1.
/// Test split: codes are recovered per image with `config`.
/// pSNR is always MSE-based regardless of the loss used to find codes.
PsnrReport reconstruction_report(const GeneratorParams<float>& params, const CodeTable& table,
                                 const Tensor& images, std::span<const std::size_t> indices,
                                 Split split, const RecoveryConfig& config);

/// Reconstructs images through mean + projection onto the PCA components,
/// clamped to [-1, 1].
PsnrReport pca_baseline_report(const PcaModel& model, const Tensor& images,
                               std::span<const std::size_t> indices, Split split);

}  // namespace glo
