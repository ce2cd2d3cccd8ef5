#include "glo/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace glo {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(Errc::invalid_argument, "config key '" + std::string(key) + "': '" + std::string(value) +
                                   "' is not " + expected);
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct Key {
  const char* name;
  const char* help;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, std::string_view, std::string_view)> set;
};

#define GLO_SIZE_KEY(field, help)                                                          \
  Key {                                                                                    \
    #field, help, [](const Config& c) { return std::to_string(c.field); },                 \
        [](Config& c, std::string_view k, std::string_view v) {                            \
          c.field = parse_int<std::size_t>(k, v);                                          \
        }                                                                                  \
  }
#define GLO_DOUBLE_KEY(field, help)                                                        \
  Key {                                                                                    \
    #field, help, [](const Config& c) { return fmt(c.field); },                            \
        [](Config& c, std::string_view k, std::string_view v) { c.field = parse_double(k, v); } \
  }
#define GLO_STRING_KEY(field, help)                                                        \
  Key {                                                                                    \
    #field, help, [](const Config& c) { return c.field; },                                 \
        [](Config& c, std::string_view, std::string_view v) { c.field = std::string(v); }  \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      GLO_STRING_KEY(dataset, "dataset path: IDX image file, PPM/PGM directory or raw file"),
      Key{"dataset_format", "idx | ppm-dir | raw",
          [](const Config& c) { return std::string(to_string(c.dataset_format)); },
          [](Config& c, std::string_view, std::string_view v) {
            c.dataset_format = parse_dataset_format(v);
          }},
      GLO_STRING_KEY(labels, "optional IDX label file"),
      GLO_SIZE_KEY(channels, "image channels for raw datasets (1 or 3)"),
      GLO_SIZE_KEY(image_size, "image side for raw datasets (32 or 64)"),
      GLO_SIZE_KEY(max_images, "use only the first N images; 0 uses all"),
      GLO_SIZE_KEY(split_denominator, "every k-th image (from index 0) is held out for test"),
      GLO_SIZE_KEY(latent_dim, "code dimension d; 0 picks 32 (gray 32px), 64 (color 32px), 256 (64px)"),
      GLO_SIZE_KEY(width, "channels of the last hidden generator block"),
      GLO_DOUBLE_KEY(weight_l2, "weight of the squared-error loss"),
      GLO_DOUBLE_KEY(weight_lap1, "weight of the Laplacian-pyramid L1 loss"),
      GLO_SIZE_KEY(pyramid_levels, "pyramid levels J; 0 picks 3 (32px) or 4 (64px)"),
      GLO_DOUBLE_KEY(lr_theta, "generator learning rate"),
      GLO_DOUBLE_KEY(lr_z, "code learning rate"),
      GLO_SIZE_KEY(batch_size, "images per SGD step (>= 2)"),
      GLO_SIZE_KEY(epochs, "training epochs"),
      Key{"seed", "RNG seed for initialization and shuffling",
          [](const Config& c) { return std::to_string(c.seed); },
          [](Config& c, std::string_view k, std::string_view v) {
            c.seed = parse_int<std::uint64_t>(k, v);
          }},
      Key{"init", "code initialization: gaussian | pca",
          [](const Config& c) { return std::string(c.init == CodeInit::pca ? "pca" : "gaussian"); },
          [](Config& c, std::string_view k, std::string_view v) {
            if (v == "gaussian") c.init = CodeInit::gaussian;
            else if (v == "pca") c.init = CodeInit::pca;
            else bad_value(k, v, "gaussian or pca");
          }},
      GLO_SIZE_KEY(checkpoint_every, "write a checkpoint every k epochs; 0 only at the end"),
      GLO_SIZE_KEY(recovery_steps, "SGD steps when recovering codes of unseen images"),
      GLO_DOUBLE_KEY(recovery_lr, "learning rate for code recovery"),
      Key{"recovery_init", "initial recovered code: zeros | gaussian | pca-projection",
          [](const Config& c) -> std::string {
            switch (c.recovery_init) {
              case RecoveryInit::zeros: return "zeros";
              case RecoveryInit::gaussian: return "gaussian";
              case RecoveryInit::pca_projection: return "pca-projection";
            }
            return "?";
          },
          [](Config& c, std::string_view k, std::string_view v) {
            if (v == "zeros") c.recovery_init = RecoveryInit::zeros;
            else if (v == "gaussian") c.recovery_init = RecoveryInit::gaussian;
            else if (v == "pca-projection") c.recovery_init = RecoveryInit::pca_projection;
            else bad_value(k, v, "zeros, gaussian or pca-projection");
          }},
      Key{"sample_project", "project sampled codes onto the unit ball",
          [](const Config& c) { return std::string(c.sample_project ? "true" : "false"); },
          [](Config& c, std::string_view k, std::string_view v) {
            c.sample_project = parse_bool(k, v);
          }},
      Key{"interpolation", "linear | spherical",
          [](const Config& c) {
            return std::string(c.interpolation == InterpolationMode::spherical ? "spherical"
                                                                               : "linear");
          },
          [](Config& c, std::string_view k, std::string_view v) {
            if (v == "linear") c.interpolation = InterpolationMode::linear;
            else if (v == "spherical") c.interpolation = InterpolationMode::spherical;
            else bad_value(k, v, "linear or spherical");
          }},
      GLO_STRING_KEY(out, "output directory"),
  };
  return table;
}

#undef GLO_SIZE_KEY
#undef GLO_DOUBLE_KEY
#undef GLO_STRING_KEY

}  // namespace

void set_config_value(Config& config, std::string_view key, std::string_view value) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(config, key, value);
      return;
    }
  }
  fail(Errc::invalid_argument, "unknown config key '" + std::string(key) + "'");
}

Config parse_config(std::string_view text) {
  Config c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    require(eq != std::string_view::npos, Errc::invalid_argument,
            where + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    require(!key.empty(), Errc::invalid_argument, where + ": empty key");
    require(seen.insert(std::string(key)).second, Errc::invalid_argument,
            where + ": key '" + std::string(key) + "' repeated");
    try {
      set_config_value(c, key, value);
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

Config Config::resolved() const {
  Config c = *this;
  if (c.latent_dim == 0) c.latent_dim = c.image_size == 64 ? 256 : (c.channels == 3 ? 64 : 32);
  if (c.pyramid_levels == 0) c.pyramid_levels = c.image_size == 64 ? 4 : 3;
  return c;
}

void Config::validate() const {
  generator().validate();
  train().validate();
  recovery().validate();
  require(split_denominator >= 2, Errc::invalid_argument, "split_denominator must be >= 2");
}

GeneratorConfig Config::generator() const {
  const Config c = resolved();
  return {c.latent_dim, c.image_size, c.channels, c.width};
}

LossConfig Config::loss() const {
  return {weight_l2, weight_lap1, resolved().pyramid_levels};
}

TrainConfig Config::train() const {
  TrainConfig t;
  t.lr_theta = static_cast<float>(lr_theta);
  t.lr_z = static_cast<float>(lr_z);
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.loss = loss();
  t.seed = seed;
  t.checkpoint_every = checkpoint_every;
  return t;
}

RecoveryConfig Config::recovery() const {
  RecoveryConfig r;
  r.steps = recovery_steps;
  r.lr = static_cast<float>(recovery_lr);
  r.loss = loss();
  r.init = recovery_init;
  r.seed = seed;
  return r;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + "\n";
  return out;
}

std::string config_reference() {
  const Config defaults;
  std::string out;
  for (const auto& k : keys()) {
    out += "  ";
    out += k.name;
    out += " (default: ";
    const std::string v = k.get(defaults);
    out += v.empty() ? "none" : v;
    out += ")\n      ";
    out += k.help;
    out += "\n";
  }
  return out;
}

}  // namespace glo
