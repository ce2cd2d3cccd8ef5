#include "glo/layers.hpp"

#include <algorithm>
#include <cmath>

#include "glo/ops.hpp"
#include "glo/parallel.hpp"

namespace glo {

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
BatchNormState<T> BatchNormState<T>::identity(std::size_t channels) {
  return {BasicTensor<T>::ones(Shape{channels}), BasicTensor<T>::zeros(Shape{channels}),
          BasicTensor<T>::zeros(Shape{channels}), BasicTensor<T>::ones(Shape{channels}),
          BatchNormOptions{}, Mode::train};
}

template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                 const BasicTensor<T>& beta,
                                 BasicTensor<T>& running_mean,
                                 BasicTensor<T>& running_var,
                                 const BatchNormOptions& options, Mode mode,
                                 BatchNormCache<T>* cache) {
  require(x.rank() == 4, Errc::shape_mismatch,
          "batchnorm input must be [N,C,H,W], got " + x.shape().str());
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Shape channel{c};
  require_same_shape(gamma.shape(), channel, "batchnorm gamma");
  require_same_shape(beta.shape(), channel, "batchnorm beta");
  require_same_shape(running_mean.shape(), channel, "batchnorm running mean");
  require_same_shape(running_var.shape(), channel, "batchnorm running var");
  require(options.eps > 0.0, Errc::invalid_argument, "batchnorm eps must be > 0");
  if (mode == Mode::train)
    require(n * hw > 1, Errc::invalid_argument,
            "batchnorm in train mode needs more than one value per channel, got " +
                x.shape().str());

  BasicTensor<T> out(x.shape());
  BasicTensor<T> normalized(x.shape());
  std::vector<double> inv_std(c);
  const double count = static_cast<double>(n * hw);

  parallel_for(c, [&](std::size_t ch) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.data() + (b * c + ch) * hw;
        for (std::size_t k = 0; k < hw; ++k) s += p[k];
      }
      mean = s / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.data() + (b * c + ch) * hw;
        for (std::size_t k = 0; k < hw; ++k) {
          double d = p[k] - mean;
          ss += d * d;
        }
      }
      var = ss / count;
      running_mean[ch] = static_cast<T>((1.0 - options.momentum) * running_mean[ch] +
                                        options.momentum * mean);
      running_var[ch] = static_cast<T>((1.0 - options.momentum) * running_var[ch] +
                                       options.momentum * var);
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const double istd = 1.0 / std::sqrt(var + options.eps);
    inv_std[ch] = istd;
    const double g = gamma[ch], bt = beta[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) {
        double xh = (x[off + k] - mean) * istd;
        normalized[off + k] = static_cast<T>(xh);
        out[off + k] = static_cast<T>(g * xh + bt);
      }
    }
  });

  if (cache) {
    cache->mode = mode;
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& grad_out,
                                     const BasicTensor<T>& gamma,
                                     const BatchNormCache<T>& cache) {
  require_same_shape(grad_out.shape(), cache.normalized.shape(), "batchnorm backward");
  const std::size_t n = grad_out.dim(0), c = grad_out.dim(1),
                    hw = grad_out.dim(2) * grad_out.dim(3);
  const double count = static_cast<double>(n * hw);
  BatchNormGrads<T> grads{BasicTensor<T>(grad_out.shape()), BasicTensor<T>(Shape{c}),
                          BasicTensor<T>(Shape{c})};
  const BasicTensor<T>& xh = cache.normalized;

  parallel_for(c, [&](std::size_t ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) {
        sum_g += grad_out[off + k];
        sum_gx += static_cast<double>(grad_out[off + k]) * xh[off + k];
      }
    }
    grads.gamma[ch] = static_cast<T>(sum_gx);
    grads.beta[ch] = static_cast<T>(sum_g);
    const double scale = gamma[ch] * cache.inv_std[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t k = 0; k < hw; ++k) {
        double g = grad_out[off + k];
        double dx = cache.mode == Mode::train
                        ? scale * (g - sum_g / count - xh[off + k] * sum_gx / count)
                        : scale * g;
        grads.x[off + k] = static_cast<T>(dx);
      }
    }
  });
  return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& out) {
  require_same_shape(grad_out.shape(), out.shape(), "relu backward");
  BasicTensor<T> g(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = out[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

template <typename T>
BasicTensor<T> tanh_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& out) {
  require_same_shape(grad_out.shape(), out.shape(), "tanh backward");
  BasicTensor<T> g(out.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    g[i] = grad_out[i] * (T(1) - out[i] * out[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr std::size_t kKernel = 4, kStride = 2, kPad = 1, kStemExtent = 4;
constexpr double kInitStd = 0.02;

std::string bn_name(std::size_t layer, const char* field) {
  return "bn" + std::to_string(layer) + "." + field;
}
std::string block_name(std::size_t block) {
  return "block" + std::to_string(block) + ".weight";
}

}  // namespace

std::size_t GeneratorConfig::blocks() const {
  return image_size == 64 ? 3 : 2;
}

std::size_t GeneratorConfig::stem_channels() const {
  return width << blocks();
}

void GeneratorConfig::validate() const {
  require(image_size == 32 || image_size == 64, Errc::invalid_argument,
          "image size must be 32 or 64, got " + std::to_string(image_size));
  require(latent_dim >= 1, Errc::invalid_argument, "latent dimension must be >= 1");
  require(channels == 1 || channels == 3, Errc::invalid_argument,
          "channels must be 1 or 3, got " + std::to_string(channels));
  require(width >= 1, Errc::invalid_argument, "generator width must be >= 1");
}

template <typename T>
std::vector<NamedTensor<T>> GeneratorParams<T>::layout(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<NamedTensor<T>> out;
  auto add_bn = [&](std::size_t layer, std::size_t ch) {
    out.push_back({bn_name(layer, "gamma"), BasicTensor<T>::ones(Shape{ch}), true});
    out.push_back({bn_name(layer, "beta"), BasicTensor<T>::zeros(Shape{ch}), true});
    out.push_back({bn_name(layer, "running_mean"), BasicTensor<T>::zeros(Shape{ch}), false});
    out.push_back({bn_name(layer, "running_var"), BasicTensor<T>::ones(Shape{ch}), false});
  };
  std::size_t ch = cfg.stem_channels();
  out.push_back({"stem.weight",
                 BasicTensor<T>(Shape{cfg.latent_dim, ch * kStemExtent * kStemExtent}), true});
  add_bn(0, ch);
  for (std::size_t b = 1; b <= cfg.blocks(); ++b) {
    out.push_back({block_name(b), BasicTensor<T>(Shape{ch, ch / 2, kKernel, kKernel}), true});
    ch /= 2;
    add_bn(b, ch);
  }
  out.push_back({"out.weight", BasicTensor<T>(Shape{ch, cfg.channels, kKernel, kKernel}), true});
  return out;
}

template <typename T>
GeneratorParams<T> GeneratorParams<T>::init(const GeneratorConfig& config, Rng& rng) {
  GeneratorParams p;
  p.config_ = config;
  p.entries_ = layout(config);
  for (auto& e : p.entries_) {
    if (e.name.ends_with(".weight"))
      for (auto& v : e.value.values()) v = static_cast<T>(kInitStd * rng.normal());
  }
  return p;
}

template <typename T>
GeneratorParams<T> GeneratorParams<T>::zeros_like() const {
  GeneratorParams p;
  p.config_ = config_;
  for (const auto& e : entries_)
    p.entries_.push_back({e.name, BasicTensor<T>::zeros(e.value.shape()), e.trainable});
  return p;
}

template <typename T>
std::size_t GeneratorParams<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  fail(Errc::invalid_argument, "no generator parameter named '" + std::string(name) + "'");
}

template <typename T>
bool GeneratorParams<T>::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.name == name; });
}

template <typename T>
const BasicTensor<T>& GeneratorParams<T>::tensor(std::string_view name) const {
  return entries_[index_of(name)].value;
}

template <typename T>
BasicTensor<T>& GeneratorParams<T>::mutable_tensor(std::string_view name) {
  ++revision_;
  return entries_[index_of(name)].value;
}

template <typename T>
std::vector<NamedTensor<T>>& GeneratorParams<T>::mutable_entries() {
  ++revision_;
  return entries_;
}

template <typename T>
BasicTensor<T>& GeneratorParams<T>::running_stat(std::string_view name) {
  auto& e = entries_[index_of(name)];
  require(!e.trainable, Errc::invalid_argument,
          "'" + std::string(name) + "' is not a running statistic");
  return e.value;
}

template <typename T>
std::size_t GeneratorParams<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.value.size();
  return n;
}

namespace {

// Shared forward. `stats` receives running-stat updates in train mode.
template <typename T>
BasicTensor<T> forward_impl(const GeneratorParams<T>& p, GeneratorParams<T>* stats,
                            const BasicTensor<T>& z, Mode mode, LayerCache<T>* cache) {
  const GeneratorConfig& cfg = p.config();
  require(z.rank() == 2 && z.dim(1) == cfg.latent_dim, Errc::shape_mismatch,
          "generator expects codes [N," + std::to_string(cfg.latent_dim) + "], got " +
              z.shape().str());
  const std::size_t n = z.dim(0);
  const BatchNormOptions bn_options;

  auto norm = [&](const BasicTensor<T>& x, std::size_t layer) {
    BatchNormCache<T> bc;
    BasicTensor<T> y;
    const auto& gamma = p.tensor(bn_name(layer, "gamma"));
    const auto& beta = p.tensor(bn_name(layer, "beta"));
    if (mode == Mode::train) {
      y = batchnorm_forward(x, gamma, beta, stats->running_stat(bn_name(layer, "running_mean")),
                            stats->running_stat(bn_name(layer, "running_var")), bn_options,
                            mode, cache ? &bc : nullptr);
    } else {
      BasicTensor<T> rm = p.tensor(bn_name(layer, "running_mean"));
      BasicTensor<T> rv = p.tensor(bn_name(layer, "running_var"));
      y = batchnorm_forward(x, gamma, beta, rm, rv, bn_options, mode, cache ? &bc : nullptr);
    }
    if (cache) cache->norms.push_back(std::move(bc));
    return y;
  };

  const std::size_t stem = cfg.stem_channels();
  BasicTensor<T> h = matmul(z, p.tensor("stem.weight"))
                         .reshaped(Shape{n, stem, kStemExtent, kStemExtent});
  BasicTensor<T> a = relu(norm(h, 0));
  for (std::size_t b = 1; b <= cfg.blocks(); ++b) {
    BasicTensor<T> next = conv_transpose2d(a, p.tensor(block_name(b)), kStride, kPad);
    if (cache) cache->activations.push_back(std::move(a));
    a = relu(norm(next, b));
  }
  BasicTensor<T> images = tanh(conv_transpose2d(a, p.tensor("out.weight"), kStride, kPad));
  if (cache) {
    cache->activations.push_back(std::move(a));
    cache->params = &p;
    cache->revision = p.revision();
    cache->consumed = false;
    cache->mode = mode;
    cache->z = z;
    cache->images = images;
  }
  return images;
}

}  // namespace

template <typename T>
ForwardResult<T> generator_forward(GeneratorParams<T>& params, const BasicTensor<T>& z,
                                   Mode mode) {
  ForwardResult<T> result;
  result.images = forward_impl(params, &params, z, mode, &result.cache);
  return result;
}

template <typename T>
BasicTensor<T> generate(const GeneratorParams<T>& params, const BasicTensor<T>& z) {
  return forward_impl<T>(params, nullptr, z, Mode::eval, nullptr);
}

template <typename T>
GeneratorGrads<T> generator_backward(LayerCache<T>& cache, const BasicTensor<T>& grad_images,
                                     bool param_grads) {
  require(cache.params != nullptr, Errc::stale_cache, "generator cache is empty");
  require(!cache.consumed, Errc::stale_cache, "generator cache was already consumed");
  require(cache.params->revision() == cache.revision, Errc::stale_cache,
          "generator parameters changed since the forward pass");
  require_same_shape(grad_images.shape(), cache.images.shape(), "generator backward");
  cache.consumed = true;

  const GeneratorParams<T>& p = *cache.params;
  const GeneratorConfig& cfg = p.config();
  const std::size_t blocks = cfg.blocks();
  GeneratorGrads<T> grads{p.zeros_like(), {}};
  auto& ge = grads.params.mutable_entries();
  auto slot = [&](const std::string& name) -> BasicTensor<T>& {
    for (auto& e : ge)
      if (e.name == name) return e.value;
    fail(Errc::invalid_argument, "missing gradient slot " + name);
  };

  BasicTensor<T> g = tanh_backward(grad_images, cache.images);
  const BasicTensor<T>& last = cache.activations[blocks];
  if (param_grads)
    slot("out.weight") = conv2d_kernel_grad(g, last, kKernel, kKernel, kStride, kPad);
  g = conv2d(g, p.tensor("out.weight"), kStride, kPad);

  for (std::size_t b = blocks; b >= 1; --b) {
    g = relu_backward(g, cache.activations[b]);
    auto bn = batchnorm_backward(g, p.tensor(bn_name(b, "gamma")), cache.norms[b]);
    if (param_grads) {
      slot(bn_name(b, "gamma")) = std::move(bn.gamma);
      slot(bn_name(b, "beta")) = std::move(bn.beta);
      slot(block_name(b)) = conv2d_kernel_grad(bn.x, cache.activations[b - 1], kKernel,
                                               kKernel, kStride, kPad);
    }
    g = conv2d(bn.x, p.tensor(block_name(b)), kStride, kPad);
  }

  g = relu_backward(g, cache.activations[0]);
  auto bn = batchnorm_backward(g, p.tensor(bn_name(0, "gamma")), cache.norms[0]);
  const std::size_t n = cache.z.dim(0);
  BasicTensor<T> gh = bn.x.reshaped(Shape{n, bn.x.size() / n});
  if (param_grads) {
    slot(bn_name(0, "gamma")) = std::move(bn.gamma);
    slot(bn_name(0, "beta")) = std::move(bn.beta);
    slot("stem.weight") = matmul(transpose(cache.z), gh);
  }
  grads.z = matmul(gh, transpose(p.tensor("stem.weight")));
  return grads;
}

#define GLO_INSTANTIATE(T)                                                              \
  template struct BatchNormState<T>;                                                    \
  template BasicTensor<T> batchnorm_forward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                            const BasicTensor<T>&, BasicTensor<T>&,     \
                                            BasicTensor<T>&, const BatchNormOptions&,   \
                                            Mode, BatchNormCache<T>*);                  \
  template BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>&,                  \
                                                const BasicTensor<T>&,                  \
                                                const BatchNormCache<T>&);              \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                  \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);  \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                  \
  template BasicTensor<T> tanh_backward(const BasicTensor<T>&, const BasicTensor<T>&);  \
  template class GeneratorParams<T>;                                                    \
  template ForwardResult<T> generator_forward(GeneratorParams<T>&, const BasicTensor<T>&, \
                                              Mode);                                    \
  template BasicTensor<T> generate(const GeneratorParams<T>&, const BasicTensor<T>&);   \
  template GeneratorGrads<T> generator_backward(LayerCache<T>&, const BasicTensor<T>&, bool);

GLO_INSTANTIATE(float)
GLO_INSTANTIATE(double)

#undef GLO_INSTANTIATE

}  // namespace glo
