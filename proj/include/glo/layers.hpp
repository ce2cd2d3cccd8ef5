#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "glo/rng.hpp"
#include "glo/tensor.hpp"

namespace glo {

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

template <typename T>
struct BatchNormState {
  BasicTensor<T> gamma, beta, running_mean, running_var;
  BatchNormOptions options;
  Mode mode = Mode::train;

  static BatchNormState identity(std::size_t channels);
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::train;
  BasicTensor<T> normalized;     // x_hat, same shape as the input
  std::vector<double> inv_std;   // per channel
};

/// Normalizes each channel of x [N,C,H,W]. Train mode uses batch statistics
/// (biased variance) and folds them into the running estimates; eval mode
/// uses the running estimates. Throws when train mode sees N*H*W == 1.
template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                 const BasicTensor<T>& beta,
                                 BasicTensor<T>& running_mean,
                                 BasicTensor<T>& running_var,
                                 const BatchNormOptions& options, Mode mode,
                                 BatchNormCache<T>* cache);

template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, BatchNormState<T>& state,
                                 BatchNormCache<T>* cache = nullptr) {
  return batchnorm_forward(x, state.gamma, state.beta, state.running_mean,
                           state.running_var, state.options, state.mode, cache);
}

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> x, gamma, beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& grad_out,
                                     const BasicTensor<T>& gamma,
                                     const BatchNormCache<T>& cache);

// Pointwise activations; backward takes the forward *output*.
template <typename T> BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& out);
template <typename T> BasicTensor<T> tanh(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> tanh_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& out);

// ---------------------------------------------------------------------------
// Generator

/// DCGAN-style generator geometry.
///
///   z [N,d] -> linear -> [N, stem, 4, 4] -> BN -> ReLU
///   -> blocks x (convT k4 s2 p1, BN, ReLU), halving channels each time
///   -> convT k4 s2 p1 to `channels` -> tanh
///
/// The last hidden block has `width` channels, so stem = width * 2^blocks.
/// 32x32 images use 2 hidden blocks (256-128-64 at width 64); 64x64 use 3.
struct GeneratorConfig {
  std::size_t latent_dim = 32;
  std::size_t image_size = 32;
  std::size_t channels = 1;
  std::size_t width = 64;

  std::size_t blocks() const;
  std::size_t stem_channels() const;
  void validate() const;
};

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> value;
  bool trainable = true;
};

/// Ordered named parameters of a generator, including batch-norm running
/// statistics (flagged non-trainable).
template <typename T>
class GeneratorParams {
 public:
  GeneratorParams() = default;

  /// Weights ~ N(0, 0.02^2); batch-norm gamma = 1, beta = 0, running mean 0,
  /// running var 1.
  static GeneratorParams init(const GeneratorConfig& config, Rng& rng);
  /// Same names and shapes, all values zero.
  GeneratorParams zeros_like() const;

  const GeneratorConfig& config() const { return config_; }
  const std::vector<NamedTensor<T>>& entries() const { return entries_; }
  const BasicTensor<T>& tensor(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// Mutable access. Invalidates caches from earlier forward passes.
  BasicTensor<T>& mutable_tensor(std::string_view name);
  std::vector<NamedTensor<T>>& mutable_entries();

  /// Running statistics are refreshed by train-mode forward passes without
  /// invalidating caches.
  BasicTensor<T>& running_stat(std::string_view name);

  std::uint64_t revision() const { return revision_; }
  std::size_t trainable_count() const;

  template <typename U>
  GeneratorParams<U> cast() const {
    GeneratorParams<U> out;
    out.config_ = config_;
    for (const auto& e : entries_)
      out.entries_.push_back({e.name, e.value.template cast<U>(), e.trainable});
    return out;
  }

  /// Parameter names and shapes a given config produces, in order.
  static std::vector<NamedTensor<T>> layout(const GeneratorConfig& config);

 private:
  template <typename U> friend class GeneratorParams;
  std::size_t index_of(std::string_view name) const;

  GeneratorConfig config_;
  std::vector<NamedTensor<T>> entries_;
  std::uint64_t revision_ = 0;
};

/// Activations saved by generator_forward for the backward pass. Single use:
/// generator_backward marks it consumed.
template <typename T>
struct LayerCache {
  const GeneratorParams<T>* params = nullptr;
  std::uint64_t revision = 0;
  bool consumed = false;
  Mode mode = Mode::eval;
  BasicTensor<T> z;
  std::vector<BasicTensor<T>> activations;  // post-ReLU output of stem and each block
  std::vector<BatchNormCache<T>> norms;
  BasicTensor<T> images;
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> images;
  LayerCache<T> cache;
};

template <typename T>
struct GeneratorGrads {
  GeneratorParams<T> params;  // zero for non-trainable entries
  BasicTensor<T> z;
};

/// images [N, channels, S, S] in [-1, 1]. Train mode updates running stats.
template <typename T>
ForwardResult<T> generator_forward(GeneratorParams<T>& params, const BasicTensor<T>& z,
                                   Mode mode);

/// Eval-mode forward without a cache.
template <typename T>
BasicTensor<T> generate(const GeneratorParams<T>& params, const BasicTensor<T>& z);

/// With `param_grads` false only the code gradient is computed and the
/// parameter gradients are left zero.
template <typename T>
GeneratorGrads<T> generator_backward(LayerCache<T>& cache, const BasicTensor<T>& grad_images,
                                     bool param_grads = true);

}  // namespace glo
