#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "glo/dataio.hpp"
#include "glo/eval.hpp"
#include "glo/latent_tools.hpp"
#include "glo/layers.hpp"
#include "glo/losses.hpp"
#include "glo/trainer.hpp"

namespace glo {

enum class CodeInit { gaussian, pca };

/// Run configuration read from `key = value` lines. Blank lines and lines
/// starting with '#' are ignored; unknown keys and repeated keys are errors.
/// Zero for latent_dim or pyramid_levels means "pick from the image
/// geometry" (see resolved()).
struct Config {
  // dataset
  std::string dataset;
  DatasetFormat dataset_format = DatasetFormat::idx;
  std::string labels;
  std::size_t channels = 1;
  std::size_t image_size = 32;
  std::size_t max_images = 0;  // 0 keeps every image
  std::size_t split_denominator = 32;

  // model
  std::size_t latent_dim = 0;
  std::size_t width = 64;

  // loss
  double weight_l2 = 1.0;
  double weight_lap1 = 1.0;
  std::size_t pyramid_levels = 0;

  // training
  double lr_theta = 1.0;
  double lr_z = 10.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
  CodeInit init = CodeInit::gaussian;
  std::size_t checkpoint_every = 0;

  // code recovery
  std::size_t recovery_steps = 500;
  double recovery_lr = 10.0;
  RecoveryInit recovery_init = RecoveryInit::zeros;

  // latent tools
  bool sample_project = false;
  InterpolationMode interpolation = InterpolationMode::linear;

  std::string out = "out";

  /// Copy with automatic fields filled in: latent_dim 32 for 1-channel 32x32
  /// images, 64 for 3-channel 32x32, 256 for 64x64; pyramid_levels 3 for
  /// 32x32 and 4 for 64x64.
  Config resolved() const;
  void validate() const;

  GeneratorConfig generator() const;
  LossConfig loss() const;
  TrainConfig train() const;
  RecoveryConfig recovery() const;

  /// Every key, one per line, in a form parse_config reads back.
  std::string to_text() const;
};

Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

/// Applies one `key=value` assignment; throws on unknown keys or bad values.
void set_config_value(Config& config, std::string_view key, std::string_view value);

/// Help text listing every key with its default.
std::string config_reference();

}  // namespace glo
