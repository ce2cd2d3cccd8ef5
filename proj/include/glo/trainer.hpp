#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "glo/latent_table.hpp"
#include "glo/layers.hpp"
#include "glo/losses.hpp"

namespace glo {

struct TrainConfig {
  float lr_theta = 1.0f;
  float lr_z = 10.0f;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  LossConfig loss;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // epochs; 0 disables
  std::size_t probe_size = 64;       // images used for the per-epoch pSNR

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean per-image loss over the epoch
  double psnr = 0.0;      // mean eval-mode pSNR on the probe images
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;

  /// CSV with header epoch,loss,psnr,seconds.
  std::string to_csv() const;
};

struct TrainHooks {
  std::function<void(const EpochStats&)> on_epoch;
  std::function<void(std::size_t epoch)> on_checkpoint;
};

/// p <- p - lr * grad for every trainable tensor; running statistics are
/// left alone.
template <typename T>
void sgd_step_params(GeneratorParams<T>& params, const GeneratorParams<T>& grads, T lr);

/// Splits a visiting order into consecutive batches. A trailing batch of a
/// single image is merged into the previous batch.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size);

/// One joint update on the images `batch`: a single train-mode forward and
/// backward pass, then SGD on the generator and on the batch's codes (with
/// projection). Returns the mean per-image loss before the update.
double train_step(GeneratorParams<float>& params, CodeTable& table, const Tensor& images,
                  std::span<const std::size_t> batch, const TrainConfig& config);

/// Jointly fits generator and codes to images [N,C,S,S]; table row i is the
/// code of image i. Each epoch visits the images in a seeded Fisher-Yates
/// order. Throws Errc::non_finite naming the epoch and batch when the loss
/// stops being finite.
TrainReport train(const Tensor& images, GeneratorParams<float>& params, CodeTable& table,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace glo
