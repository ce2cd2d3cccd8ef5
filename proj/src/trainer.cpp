#include "glo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "glo/eval.hpp"
#include "glo/ops.hpp"

namespace glo {

void TrainConfig::validate() const {
  require(lr_theta >= 0.0f && lr_z >= 0.0f, Errc::invalid_argument,
          "learning rates must be non-negative");
  require(batch_size >= 2, Errc::invalid_argument,
          "batch_size must be >= 2 for train-mode batch normalization");
  loss.validate();
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,loss,psnr,seconds\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.loss << ',' << e.psnr << ',' << e.seconds << '\n';
  return out.str();
}

template <typename T>
void sgd_step_params(GeneratorParams<T>& params, const GeneratorParams<T>& grads, T lr) {
  const auto& g = grads.entries();
  auto& p = params.mutable_entries();
  require(p.size() == g.size(), Errc::shape_mismatch,
          "gradient set has " + std::to_string(g.size()) + " tensors, parameters have " +
              std::to_string(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i].name == g[i].name, Errc::shape_mismatch,
            "gradient '" + g[i].name + "' does not line up with parameter '" + p[i].name + "'");
    require_same_shape(p[i].value.shape(), g[i].value.shape(), p[i].name.c_str());
    if (p[i].trainable) axpy(p[i].value, -lr, g[i].value);
  }
}

template void sgd_step_params(GeneratorParams<float>&, const GeneratorParams<float>&, float);
template void sgd_step_params(GeneratorParams<double>&, const GeneratorParams<double>&, double);

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size) {
  require(batch_size >= 1, Errc::invalid_argument, "batch_size must be >= 1");
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    std::size_t end = std::min(order.size(), begin + batch_size);
    if (end - begin == 1 && !batches.empty()) {
      batches.back().push_back(order[begin]);
    } else {
      batches.emplace_back(order.begin() + begin, order.begin() + end);
    }
  }
  return batches;
}

double train_step(GeneratorParams<float>& params, CodeTable& table, const Tensor& images,
                  std::span<const std::size_t> batch, const TrainConfig& config) {
  const Tensor z = table.rows(batch);
  const Tensor targets = gather_rows(images, batch);
  auto fwd = generator_forward(params, z, Mode::train);
  LossValue<float> loss = combined_loss(fwd.images, targets, config.loss);
  if (!std::isfinite(loss.value)) return loss.value;
  GeneratorGrads<float> grads = generator_backward(fwd.cache, loss.grad);
  sgd_step_params(params, grads.params, config.lr_theta);
  table.sgd_step(batch, grads.z, config.lr_z);
  return loss.value;
}

TrainReport train(const Tensor& images, GeneratorParams<float>& params, CodeTable& table,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  require(images.rank() == 4, Errc::shape_mismatch,
          "training images must be [N,C,S,S], got " + images.shape().str());
  const std::size_t n = images.dim(0);
  require(table.size() == n, Errc::shape_mismatch,
          "code table has " + std::to_string(table.size()) + " rows for " + std::to_string(n) +
              " images");
  const GeneratorConfig& gc = params.config();
  require(images.dim(1) == gc.channels && images.dim(2) == gc.image_size &&
              images.dim(3) == gc.image_size,
          Errc::shape_mismatch,
          "images " + images.shape().str() + " do not match the generator output");
  require(table.dim() == gc.latent_dim, Errc::shape_mismatch,
          "code dimension " + std::to_string(table.dim()) + " does not match the generator");

  std::vector<std::size_t> probe(std::min(config.probe_size, n));
  std::iota(probe.begin(), probe.end(), 0);
  const Tensor probe_images = probe.empty() ? Tensor{} : gather_rows(images, probe);

  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double total = 0.0;
    const auto batches = make_batches(order, config.batch_size);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b);
      double loss = 0.0;
      try {
        loss = train_step(params, table, images, batches[b], config);
      } catch (const Error& e) {
        // A diverged update can surface as a non-finite code before the loss.
        if (e.code() == Errc::non_finite) fail(Errc::non_finite, where + ": " + e.what());
        throw;
      }
      if (!std::isfinite(loss)) fail(Errc::non_finite, "non-finite loss at " + where);
      total += loss * static_cast<double>(batches[b].size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = total / static_cast<double>(n);
    if (!probe.empty())
      stats.psnr = mean_psnr(generate(params, table.rows(probe)), probe_images, kUnitRangeMax);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(stats);
    if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
        epoch % config.checkpoint_every == 0)
      hooks.on_checkpoint(epoch);
  }
  return report;
}

}  // namespace glo
