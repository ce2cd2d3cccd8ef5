// glo: command-line front end for training and inspecting GLO models.
//
// Exit status: 0 on success, 1 when inputs fail validation or a step fails,
// 2 on usage errors (unknown subcommand or flag, malformed flag value).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "glo/config.hpp"
#include "glo/dataio.hpp"
#include "glo/eval.hpp"
#include "glo/latent_tools.hpp"
#include "glo/trainer.hpp"

namespace fs = std::filesystem;
using namespace glo;

namespace {

struct Common {
  std::string config_path;
  std::string ckpt_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

struct Args {
  std::size_t n = 16;
  std::size_t cols = 8;
  std::size_t i = 0, j = 1;
  std::size_t steps = 8;
  std::size_t trav_steps = 7;
  std::size_t k = 1;
  double span = 3.0;
  std::string split = "both";
  std::string mode;
  std::string a, b, c;
};

Config apply_overrides(Config cfg, const Common& common) {
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, Errc::invalid_argument,
            "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (common.seed) cfg.seed = *common.seed;
  if (!common.out.empty()) cfg.out = common.out;
  return cfg.resolved();
}

Config config_from_file(const Common& common) {
  Config cfg = common.config_path.empty() ? Config{} : load_config(common.config_path);
  cfg = apply_overrides(cfg, common);
  cfg.validate();
  return cfg;
}

struct Loaded {
  Config cfg;
  Checkpoint ckpt;
};

// The checkpoint's own configuration, with command-line overrides on top.
Loaded load_model(const Common& common) {
  require(!common.ckpt_path.empty(), Errc::invalid_argument, "--ckpt is required");
  Loaded m;
  m.ckpt = load_checkpoint(common.ckpt_path);
  m.cfg = apply_overrides(parse_config(m.ckpt.config_text), common);
  require(m.ckpt.table.size() > 0, Errc::invalid_argument,
          "checkpoint '" + common.ckpt_path + "' has no code table");
  return m;
}

struct SplitData {
  Tensor train, test;
  std::vector<std::size_t> train_index, test_index;  // dataset indices
};

SplitData load_split(const Config& cfg) {
  require(!cfg.dataset.empty(), Errc::invalid_argument, "config key 'dataset' is not set");
  std::optional<fs::path> labels;
  if (!cfg.labels.empty()) labels = cfg.labels;
  Dataset ds = load_dataset(cfg.dataset, cfg.dataset_format, cfg.channels, cfg.image_size,
                            labels);
  Tensor images = ds.images;
  if (cfg.max_images > 0 && cfg.max_images < images.dim(0))
    images = images.slice(0, cfg.max_images);
  require(images.dim(1) == cfg.channels && images.dim(2) == cfg.image_size,
          Errc::shape_mismatch,
          "dataset images are " + images.shape().str() + " but the config says channels=" +
              std::to_string(cfg.channels) + ", image_size=" + std::to_string(cfg.image_size));
  SplitData s;
  SplitIndices idx = split(images.dim(0), cfg.split_denominator);
  require(!idx.train.empty(), Errc::invalid_argument, "dataset has no training images");
  s.train = gather_rows(images, idx.train);
  if (!idx.test.empty()) s.test = gather_rows(images, idx.test);
  s.train_index = std::move(idx.train);
  s.test_index = std::move(idx.test);
  return s;
}

fs::path out_path(const Config& cfg, const std::string& name) {
  fs::create_directories(cfg.out);
  return fs::path(cfg.out) / name;
}

std::string image_ext(const Config& cfg) {
  return cfg.channels == 1 ? ".pgm" : ".ppm";
}

void say(const std::string& line) {
  std::cout << line << '\n' << std::flush;
}

std::vector<std::size_t> parse_index_list(const std::string& text, std::size_t limit,
                                          const char* flag) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    std::size_t value = 0;
    std::size_t used = 0;
    try {
      value = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(!item.empty() && used == item.size(), Errc::invalid_argument,
            std::string(flag) + ": '" + item + "' is not an index");
    require(value < limit, Errc::invalid_argument,
            std::string(flag) + ": index " + item + " out of range for " +
                std::to_string(limit) + " training images");
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

void check_code_index(std::size_t i, const CodeTable& table, const char* flag) {
  require(i < table.size(), Errc::invalid_argument,
          std::string(flag) + " " + std::to_string(i) + " out of range for " +
              std::to_string(table.size()) + " training images");
}

// ---------------------------------------------------------------------------

int cmd_train(const Common& common) {
  require(!common.config_path.empty(), Errc::invalid_argument, "--config is required");
  const Config cfg = config_from_file(common);
  const SplitData data = load_split(cfg);
  const GeneratorConfig gc = cfg.generator();
  Rng init_rng(cfg.seed);
  GeneratorParams<float> params = GeneratorParams<float>::init(gc, init_rng);
  CodeTable table = cfg.init == CodeInit::pca
                        ? CodeTable::init_pca(data.train, gc.latent_dim)
                        : CodeTable::init_gaussian(init_rng, data.train.dim(0), gc.latent_dim);
  const std::string config_text = cfg.to_text();
  say("training on " + std::to_string(data.train.dim(0)) + " images (" +
      std::to_string(data.test_index.size()) + " held out), d=" + std::to_string(gc.latent_dim));

  TrainHooks hooks;
  hooks.on_epoch = [](const EpochStats& e) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f psnr %.3f dB (%.1f s)", e.epoch, e.loss,
                  e.psnr, e.seconds);
    say(buf);
  };
  hooks.on_checkpoint = [&](std::size_t epoch) {
    save_checkpoint(out_path(cfg, "epoch-" + std::to_string(epoch) + ".glo"),
                    {config_text, params, table});
  };
  const TrainReport report = train(data.train, params, table, cfg.train(), hooks);

  const fs::path model = out_path(cfg, "model.glo");
  save_checkpoint(model, {config_text, params, table});
  write_text(out_path(cfg, "train_report.csv"), report.to_csv());
  const std::size_t show = std::min<std::size_t>(16, data.train.dim(0));
  std::vector<std::size_t> first(show);
  std::iota(first.begin(), first.end(), 0);
  write_image_grid(generate(params, table.rows(first)), 8,
                   out_path(cfg, "train_recon" + image_ext(cfg)));
  say("wrote " + model.string());
  return 0;
}

int cmd_sample(const Common& common, const Args& args) {
  const Loaded m = load_model(common);
  require(args.n >= 1, Errc::invalid_argument, "--n must be >= 1");
  const GaussianModel g = fit_gaussian(m.ckpt.table);
  Rng rng(m.cfg.seed);
  const Tensor z = sample(g, rng, args.n, m.cfg.sample_project);
  const fs::path path = out_path(m.cfg, "samples" + image_ext(m.cfg));
  write_image_grid(generate(m.ckpt.params, z), args.cols, path);
  say("wrote " + path.string());
  return 0;
}

int cmd_reconstruct(const Common& common, const Args& args) {
  const Loaded m = load_model(common);
  require(args.split == "train" || args.split == "test", Errc::invalid_argument,
          "--split must be train or test for reconstruct");
  const SplitData data = load_split(m.cfg);
  const Tensor& images = args.split == "train" ? data.train : data.test;
  require(!images.empty(), Errc::invalid_argument, "the " + args.split + " split is empty");
  const std::size_t n = std::min(args.n, images.dim(0));
  require(n >= 1, Errc::invalid_argument, "--n must be >= 1");
  const Tensor targets = images.slice(0, n);
  Tensor recon;
  if (args.split == "train") {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    recon = generate(m.ckpt.params, m.ckpt.table.rows(rows));
  } else {
    const auto results = recover_codes(m.ckpt.params, targets, m.cfg.recovery());
    Tensor codes(Shape{n, m.ckpt.table.dim()});
    for (std::size_t i = 0; i < n; ++i) codes.set_slice(i, results[i].code);
    recon = generate(m.ckpt.params, codes);
  }
  const std::string stem = "reconstruct-" + args.split;
  write_image_grid(targets, args.cols, out_path(m.cfg, stem + "-targets" + image_ext(m.cfg)));
  write_image_grid(recon, args.cols, out_path(m.cfg, stem + image_ext(m.cfg)));
  say("mean psnr " + std::to_string(mean_psnr(targets, recon, kUnitRangeMax)) + " dB over " +
      std::to_string(n) + " " + args.split + " images");
  return 0;
}

int cmd_interpolate(const Common& common, const Args& args) {
  const Loaded m = load_model(common);
  check_code_index(args.i, m.ckpt.table, "--i");
  check_code_index(args.j, m.ckpt.table, "--j");
  require(args.steps >= 2, Errc::invalid_argument, "--steps must be >= 2");
  InterpolationMode mode = m.cfg.interpolation;
  if (args.mode == "linear") mode = InterpolationMode::linear;
  else if (args.mode == "spherical") mode = InterpolationMode::spherical;
  const Tensor z =
      interpolate(m.ckpt.table.row(args.i), m.ckpt.table.row(args.j), args.steps, mode);
  const fs::path path = out_path(m.cfg, "interpolate" + image_ext(m.cfg));
  write_image_grid(generate(m.ckpt.params, z), args.steps, path);
  say("wrote " + path.string());
  return 0;
}

int cmd_arith(const Common& common, const Args& args) {
  const Loaded m = load_model(common);
  const CodeTable& table = m.ckpt.table;
  const auto ia = parse_index_list(args.a, table.size(), "--a");
  const auto ib = parse_index_list(args.b, table.size(), "--b");
  const auto ic = parse_index_list(args.c, table.size(), "--c");
  const Tensor za = table.rows(ia), zb = table.rows(ib), zc = table.rows(ic);
  const std::size_t d = table.dim();
  // Columns: mean(a), mean(b), mean(c), result; group means shown projected.
  Tensor z(Shape{4, d});
  z.set_slice(0, arithmetic(za, za, za));
  z.set_slice(1, arithmetic(zb, zb, zb));
  z.set_slice(2, arithmetic(zc, zc, zc));
  z.set_slice(3, arithmetic(za, zb, zc));
  const fs::path path = out_path(m.cfg, "arith" + image_ext(m.cfg));
  write_image_grid(generate(m.ckpt.params, z), 4, path);
  say("wrote " + path.string());
  return 0;
}

int cmd_traverse(const Common& common, const Args& args) {
  const Loaded m = load_model(common);
  const CodeTable& table = m.ckpt.table;
  require(args.k >= 1 && args.k <= std::min(table.dim(), table.size() - 1),
          Errc::invalid_argument,
          "--k must be in 1.." + std::to_string(std::min(table.dim(), table.size() - 1)));
  require(args.trav_steps >= 1, Errc::invalid_argument, "--steps must be >= 1");
  const PcaModel model = pca(table.codes(), args.k);
  const Tensor z = principal_traversal(model, args.k, args.span, args.trav_steps);
  const fs::path path = out_path(m.cfg, "traverse" + image_ext(m.cfg));
  write_image_grid(generate(m.ckpt.params, z), args.trav_steps, path);
  say("wrote " + path.string());
  return 0;
}

std::vector<Split> splits_of(const std::string& flag) {
  if (flag == "train") return {Split::train};
  if (flag == "test") return {Split::test};
  require(flag == "both", Errc::invalid_argument, "--split must be train, test or both");
  return {Split::train, Split::test};
}

// Rewrites split-local positions into dataset indices.
void to_dataset_indices(PsnrReport& report, const SplitData& data) {
  const auto& map = report.split == Split::train ? data.train_index : data.test_index;
  for (auto& e : report.entries) e.index = map[e.index];
}

std::vector<std::size_t> first_positions(std::size_t available, std::size_t limit) {
  std::vector<std::size_t> out(limit == 0 ? available : std::min(limit, available));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

void emit_report(const Config& cfg, const PsnrReport& report, const std::string& prefix) {
  const fs::path path =
      out_path(cfg, prefix + "-" + std::string(to_string(report.split)) + ".csv");
  write_text(path, report.to_csv());
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %s mean psnr %.3f dB over %zu images -> %s",
                report.method.c_str(), std::string(to_string(report.split)).c_str(),
                report.mean(), report.entries.size(), path.string().c_str());
  say(buf);
}

int cmd_eval_psnr(const Common& common, const Args& args, std::size_t limit) {
  const Loaded m = load_model(common);
  const SplitData data = load_split(m.cfg);
  require(m.ckpt.table.size() == data.train.dim(0), Errc::shape_mismatch,
          "checkpoint has " + std::to_string(m.ckpt.table.size()) + " codes but the dataset has " +
              std::to_string(data.train.dim(0)) + " training images");
  for (Split s : splits_of(args.split)) {
    const Tensor& images = s == Split::train ? data.train : data.test;
    if (images.empty()) continue;
    const auto pos = first_positions(images.dim(0), limit);
    PsnrReport r = reconstruction_report(m.ckpt.params, m.ckpt.table, images, pos, s,
                                         m.cfg.recovery());
    to_dataset_indices(r, data);
    emit_report(m.cfg, r, "psnr");
  }
  return 0;
}

int cmd_pca_baseline(const Common& common, const Args& args, std::size_t limit) {
  const Config cfg = common.ckpt_path.empty() ? config_from_file(common) : load_model(common).cfg;
  const SplitData data = load_split(cfg);
  const std::size_t n = data.train.dim(0);
  const PcaModel model = pca(data.train.reshaped(Shape{n, data.train.size() / n}),
                             cfg.generator().latent_dim);
  for (Split s : splits_of(args.split)) {
    const Tensor& images = s == Split::train ? data.train : data.test;
    if (images.empty()) continue;
    PsnrReport r = pca_baseline_report(model, images, first_positions(images.dim(0), limit), s);
    to_dataset_indices(r, data);
    emit_report(cfg, r, "pca-psnr");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative latent optimization: train a generator and per-image codes, then "
               "sample, reconstruct and edit in code space.\n\nConfig keys:\n" +
               config_reference()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  Args args;
  std::size_t limit = 0;

  auto add_common = [&](CLI::App* sub, bool config, bool ckpt) {
    if (config)
      sub->add_option("--config", common.config_path, "key=value configuration file");
    if (ckpt)
      sub->add_option("--ckpt", common.ckpt_path, "GLO1 checkpoint written by train");
    sub->add_option("--out", common.out,
                    "output directory (default: the config's 'out', initially \"out\")");
    sub->add_option("--seed", common.seed, "override the config seed (default: config, 1)");
    sub->add_option("--set", common.overrides, "override a config key: --set key=value");
  };

  auto* train = app.add_subcommand("train", "train generator and codes on a dataset");
  add_common(train, true, false);
  train->footer("Config keys:\n" + config_reference());

  auto* sample = app.add_subcommand("sample", "draw codes from a Gaussian fitted to the codes");
  add_common(sample, false, true);
  sample->add_option("--n", args.n, "number of samples")->capture_default_str();
  sample->add_option("--cols", args.cols, "grid columns")->capture_default_str();

  auto* recon = app.add_subcommand("reconstruct", "write targets and reconstructions as grids");
  add_common(recon, false, true);
  recon->add_option("--split", args.split, "train or test (default: train)");
  recon->add_option("--n", args.n, "number of images")->capture_default_str();
  recon->add_option("--cols", args.cols, "grid columns")->capture_default_str();

  auto* interp = app.add_subcommand("interpolate", "decode codes between two training images");
  add_common(interp, false, true);
  interp->add_option("--i", args.i, "first training image")->capture_default_str();
  interp->add_option("--j", args.j, "second training image")->capture_default_str();
  interp->add_option("--steps", args.steps, "frames, including both ends")
      ->capture_default_str();
  interp->add_option("--mode", args.mode, "linear or spherical (default: config, linear)")
      ->check(CLI::IsMember({"linear", "spherical"}));

  auto* arith = app.add_subcommand("arith", "decode mean(a) - mean(b) + mean(c)");
  add_common(arith, false, true);
  arith->add_option("--a", args.a, "comma-separated training image indices")->required();
  arith->add_option("--b", args.b, "comma-separated training image indices")->required();
  arith->add_option("--c", args.c, "comma-separated training image indices")->required();

  auto* trav = app.add_subcommand("traverse", "walk from the mean code along a principal axis");
  add_common(trav, false, true);
  trav->add_option("--k", args.k, "principal axis, 1-based")->capture_default_str();
  trav->add_option("--span", args.span, "walk to +-span standard deviations")
      ->capture_default_str();
  trav->add_option("--steps", args.trav_steps, "frames (odd counts put the mean in the middle)")
      ->capture_default_str();

  auto* evalp = app.add_subcommand("eval-psnr", "per-image pSNR reports for the model");
  add_common(evalp, false, true);
  evalp->add_option("--split", args.split, "train, test or both")->capture_default_str();
  evalp->add_option("--n", limit, "evaluate the first n images of each split; 0 = all")
      ->capture_default_str();

  auto* pcab = app.add_subcommand("pca-baseline", "pSNR of PCA with as many components as d");
  add_common(pcab, true, true);
  pcab->add_option("--split", args.split, "train, test or both")->capture_default_str();
  pcab->add_option("--n", limit, "evaluate the first n images of each split; 0 = all")
      ->capture_default_str();

  // Values shown as defaults for reconstruct differ from the shared struct.
  recon->preparse_callback([&](std::size_t) { args.split = "train"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(common);
    if (*sample) return cmd_sample(common, args);
    if (*recon) return cmd_reconstruct(common, args);
    if (*interp) return cmd_interpolate(common, args);
    if (*arith) return cmd_arith(common, args);
    if (*trav) return cmd_traverse(common, args);
    if (*evalp) return cmd_eval_psnr(common, args, limit);
    if (*pcab) return cmd_pca_baseline(common, args, limit);
  } catch (const Error& e) {
    std::cerr << "glo: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "glo: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
