// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Every threshold lives in the constants
// below; nothing is read from the environment.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fuzz.hpp"
#include "glo/config.hpp"
#include "glo/dataio.hpp"
#include "glo/eval.hpp"
#include "glo/latent_tools.hpp"
#include "glo/losses.hpp"
#include "glo/ops.hpp"
#include "glo/trainer.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace glo;

namespace {

// 1. Gradient suite
constexpr double kFdStep = 1e-3;
constexpr double kLayerGradTol = 1e-4;
constexpr double kLossGradTol = 1e-3;
constexpr double kGradSuiteSeconds = 120.0;
// 2. Oracle equivalence
constexpr int kOracleTrials = 100;
constexpr double kOracleTol = 1e-5;
constexpr double kEigenvalueTol = 1e-6;  // relative to the leading eigenvalue
// 3. Invariants
constexpr int kMetricTriples = 200;
constexpr double kTriangleSlack = 1e-6;  // relative, float rounding
constexpr double kPyramidTol = 1e-5;
// 4. GLO vs PCA on MNIST
constexpr std::size_t kMnistLatent = 32;
constexpr std::size_t kMnistEpochs = 50;
constexpr double kMnistMarginDb = 2.0;
// 5. Self-inversion
constexpr std::size_t kInversionImages = 16;
constexpr std::size_t kInversionSteps = 500;
constexpr double kInversionDb = 40.0;
// 6. Latent behaviour
constexpr std::size_t kCovDraws = 10000;
constexpr double kCovFrobeniusTol = 0.1;
// 7. Overfit one image
constexpr float kOverfitLrTheta = 0.01f;
constexpr float kOverfitLrZ = 0.1f;
constexpr std::size_t kOverfitSteps = 500;
constexpr double kOverfitDb = 35.0;
// 8. Fuzz
constexpr std::size_t kFuzzInputs = 100000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

void progress(const std::string& line) { std::cerr << "  .. " << line << '\n' << std::flush; }

// ---------------------------------------------------------------------------
// 1. Gradient suite

struct Worst {
  std::string name;
  double ratio = 0.0;  // error / tolerance
  bool pass = true;
  void add(const std::string& what, double err, double tol) {
    const double r = err / tol;
    if (!(err < tol)) pass = false;
    if (!(r <= ratio)) {
      ratio = r;
      name = what;
    }
  }
};

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  Worst w;

  {  // conv2d and its transpose, at the generator's geometry
    const TensorD x = oracle::random_tensor(rng, Shape{2, 3, 8, 8});
    const TensorD k = oracle::random_tensor(rng, Shape{4, 3, 4, 4});
    const TensorD r = oracle::random_tensor(rng, Shape{2, 4, 4, 4});
    const auto f_x = [&](const TensorD& v) { return dot(conv2d(v, k, 2, 1), r); };
    const auto f_k = [&](const TensorD& v) { return dot(conv2d(x, v, 2, 1), r); };
    w.add("conv2d/input",
          oracle::rel_err(oracle::as_doubles(conv2d_input_grad(r, k, 8, 8, 2, 1)),
                          oracle::numeric_gradient(f_x, x, kFdStep)),
          kLayerGradTol);
    w.add("conv2d/kernel",
          oracle::rel_err(oracle::as_doubles(conv2d_kernel_grad(x, r, 4, 4, 2, 1)),
                          oracle::numeric_gradient(f_k, k, kFdStep)),
          kLayerGradTol);
    // convT(y, k) maps [2,4,4,4] -> [2,3,8,8]; its adjoint is conv2d.
    const TensorD y = r;
    const TensorD s = oracle::random_tensor(rng, x.shape());
    const auto g_y = [&](const TensorD& v) { return dot(conv_transpose2d(v, k, 2, 1), s); };
    const auto g_k = [&](const TensorD& v) { return dot(conv_transpose2d(y, v, 2, 1), s); };
    w.add("conv_transpose2d/input",
          oracle::rel_err(oracle::as_doubles(conv2d(s, k, 2, 1)),
                          oracle::numeric_gradient(g_y, y, kFdStep)),
          kLayerGradTol);
    w.add("conv_transpose2d/kernel",
          oracle::rel_err(oracle::as_doubles(conv2d_kernel_grad(s, y, 4, 4, 2, 1)),
                          oracle::numeric_gradient(g_k, k, kFdStep)),
          kLayerGradTol);
  }

  for (Mode mode : {Mode::train, Mode::eval}) {  // batch norm
    const std::string tag = mode == Mode::train ? "train" : "eval";
    const TensorD x = oracle::random_tensor(rng, Shape{3, 2, 3, 3});
    const TensorD r = oracle::random_tensor(rng, x.shape());
    const TensorD gamma(Shape{2}, std::vector<double>{1.3, -0.7});
    const TensorD beta(Shape{2}, std::vector<double>{0.2, 0.1});
    auto f = [&](const TensorD& xx, const TensorD& g, const TensorD& b) {
      TensorD rm(Shape{2}, std::vector<double>{0.1, -0.2});
      TensorD rv(Shape{2}, std::vector<double>{0.8, 1.5});
      return dot(batchnorm_forward(xx, g, b, rm, rv, BatchNormOptions{}, mode,
                                   static_cast<BatchNormCache<double>*>(nullptr)),
                 r);
    };
    TensorD rm(Shape{2}, std::vector<double>{0.1, -0.2});
    TensorD rv(Shape{2}, std::vector<double>{0.8, 1.5});
    BatchNormCache<double> cache;
    batchnorm_forward(x, gamma, beta, rm, rv, BatchNormOptions{}, mode, &cache);
    const auto g = batchnorm_backward(r, gamma, cache);
    w.add("batchnorm/" + tag + "/x",
          oracle::rel_err(oracle::as_doubles(g.x),
                          oracle::numeric_gradient([&](const TensorD& v) { return f(v, gamma, beta); },
                                                   x, kFdStep)),
          kLayerGradTol);
    w.add("batchnorm/" + tag + "/gamma",
          oracle::rel_err(oracle::as_doubles(g.gamma),
                          oracle::numeric_gradient([&](const TensorD& v) { return f(x, v, beta); },
                                                   gamma, kFdStep)),
          kLayerGradTol);
    w.add("batchnorm/" + tag + "/beta",
          oracle::rel_err(oracle::as_doubles(g.beta),
                          oracle::numeric_gradient([&](const TensorD& v) { return f(x, gamma, v); },
                                                   beta, kFdStep)),
          kLayerGradTol);
  }

  {  // pointwise activations
    const TensorD x = oracle::random_tensor(rng, Shape{4, 8}, 2.0);
    const TensorD r = oracle::random_tensor(rng, x.shape());
    const auto nr = oracle::numeric_gradient(
        [&](const TensorD& v) { return oracle::Piecewise{dot(relu(v), r), gradcheck::positive_mask(v)}; },
        x, kFdStep);
    w.add("relu", oracle::masked_rel_err(oracle::as_doubles(relu_backward(r, relu(x))), nr),
          kLayerGradTol);
    const auto nt =
        oracle::numeric_gradient([&](const TensorD& v) { return dot(glo::tanh(v), r); }, x, kFdStep);
    w.add("tanh", oracle::rel_err(oracle::as_doubles(tanh_backward(r, glo::tanh(x))), nt),
          kLayerGradTol);
  }

  {  // losses
    const TensorD x = oracle::random_tensor(rng, Shape{2, 1, 16, 16});
    const TensorD y = oracle::random_tensor(rng, x.shape());
    w.add("l2",
          oracle::rel_err(oracle::as_doubles(l2_loss(x, y).grad),
                          oracle::numeric_gradient([&](const TensorD& v) { return l2_loss(v, y).value; },
                                                   x, kFdStep)),
          kLossGradTol);
    auto signs = [&](const TensorD& v) {
      const auto p = build_pyramid(sub(v, y), 3);
      std::vector<bool> s;
      for (const auto& l : p.levels)
        for (double e : l.values()) s.push_back(e > 0.0);
      for (double e : p.lowpass.values()) s.push_back(e > 0.0);
      return s;
    };
    const auto nl = oracle::numeric_gradient(
        [&](const TensorD& v) { return oracle::Piecewise{lap1_loss(v, y, 3).value, signs(v)}; }, x,
        kFdStep);
    w.add("lap1", oracle::masked_rel_err(oracle::as_doubles(lap1_loss(x, y, 3).grad), nl),
          kLossGradTol);
  }

  for (Mode mode : {Mode::train, Mode::eval}) {  // composed generator
    const std::string tag = mode == Mode::train ? "generator/train/" : "generator/eval/";
    double base_err = 1.0;
    for (const auto& r : gradcheck::generator(mode, mode == Mode::train ? 21 : 22, kFdStep, &base_err))
      w.add(tag + r.name, r.rel_err, kLayerGradTol);
    w.add(tag + "masked forward", base_err, 1e-14);
  }

  const double secs = seconds_since(t0);
  const bool fast = secs < kGradSuiteSeconds;
  return {w.pass && fast, "worst " + w.name + " at " + fmt("%.3g", w.ratio) +
                              " x tolerance; " + fmt("%.1f", secs) + " s (limit " +
                              fmt("%.0f", kGradSuiteSeconds) + " s)"};
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(static_cast<std::uint32_t>(hi - lo + 1));
}

Outcome oracle_equivalence() {
  Rng rng(2002);
  double mm = 0.0, cv = 0.0, ct = 0.0, eig = 0.0, vec = 0.0;
  for (int t = 0; t < kOracleTrials; ++t) {
    const std::size_t m = pick(rng, 1, 16), k = pick(rng, 1, 16), n = pick(rng, 1, 16);
    const TensorD a = oracle::random_tensor(rng, Shape{m, k});
    const TensorD b = oracle::random_tensor(rng, Shape{k, n});
    mm = std::max(mm, oracle::rel_err(matmul(a.cast<float>(), b.cast<float>()), oracle::matmul(a, b)));
  }
  for (int t = 0; t < kOracleTrials;) {
    const std::size_t stride = pick(rng, 1, 2), pad = pick(rng, 0, 2);
    const std::size_t kh = pick(rng, 1, 4), oh = pick(rng, 1, 5);
    const long h = static_cast<long>((oh - 1) * stride + kh) - 2 * static_cast<long>(pad);
    if (h < 1) continue;
    ++t;
    const std::size_t nb = pick(rng, 1, 3), c = pick(rng, 1, 4), f = pick(rng, 1, 4);
    const TensorD x = oracle::random_tensor(rng, Shape{nb, c, std::size_t(h), std::size_t(h)});
    const TensorD kern = oracle::random_tensor(rng, Shape{f, c, kh, kh});
    cv = std::max(cv, oracle::rel_err(conv2d(x.cast<float>(), kern.cast<float>(), stride, pad),
                                      oracle::conv2d(x, kern, stride, pad)));
  }
  for (int t = 0; t < kOracleTrials;) {
    const std::size_t stride = pick(rng, 1, 3), pad = pick(rng, 0, 1);
    const std::size_t kh = pick(rng, 2, 4), h = pick(rng, 1, 5);
    if ((h - 1) * stride + kh <= 2 * pad) continue;
    ++t;
    const std::size_t nb = pick(rng, 1, 3), c = pick(rng, 1, 4), f = pick(rng, 1, 4);
    const TensorD x = oracle::random_tensor(rng, Shape{nb, c, h, h});
    const TensorD kern = oracle::random_tensor(rng, Shape{c, f, kh, kh});
    ct = std::max(ct, oracle::rel_err(conv_transpose2d(x.cast<float>(), kern.cast<float>(), stride, pad),
                                      oracle::conv_transpose2d(x, kern, stride, pad)));
  }
  std::size_t vectors_compared = 0;
  for (int t = 0; t < kOracleTrials; ++t) {
    // Geometric column scales keep the spectrum separated.
    const std::size_t dim = pick(rng, 2, 8), n = 3 * dim + pick(rng, 0, 20);
    const std::size_t d = pick(rng, 1, dim);
    const TensorD raw = oracle::random_tensor(rng, Shape{n, dim});
    Tensor data(Shape{n, dim});
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        data.at(i, j) = static_cast<float>(raw.at(i, j) * std::pow(0.4, double(j)) + 0.3);
        rows[i][j] = data.at(i, j);
      }
    const auto [values, vecs] = oracle::jacobi_eigen(oracle::covariance(rows));
    const PcaModel model = pca(data, d);
    for (std::size_t c = 0; c < d; ++c) {
      eig = std::max(eig, std::abs(model.eigenvalues[c] - values[c]) / values[0]);
      // Eigenvectors are only defined for a separated eigenvalue.
      const double gap = std::min(c > 0 ? values[c - 1] - values[c] : values[0],
                                  c + 1 < dim ? values[c] - values[c + 1] : values[0]);
      if (gap < 1e-3 * values[0]) continue;
      ++vectors_compared;
      double dotp = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dotp += model.components.at(c, j) * vecs[c][j];
      std::vector<double> got(dim), want(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        got[j] = model.components.at(c, j);
        want[j] = (dotp < 0 ? -1.0 : 1.0) * vecs[c][j];
      }
      vec = std::max(vec, oracle::rel_err(got, want));
    }
  }
  const bool pass = mm < kOracleTol && cv < kOracleTol && ct < kOracleTol && vec < kOracleTol &&
                    eig < kEigenvalueTol;
  return {pass, "max rel err matmul " + fmt("%.2g", mm) + ", conv2d " + fmt("%.2g", cv) +
                    ", conv_transpose2d " + fmt("%.2g", ct) + ", PCA vectors " + fmt("%.2g", vec) +
                    " (" + std::to_string(vectors_compared) + " compared), PCA eigenvalues " +
                    fmt("%.2g", eig) + "; " + std::to_string(kOracleTrials) + " trials each"};
}

// ---------------------------------------------------------------------------
// 3. Invariants

std::uint32_t crc32_bytes(const std::vector<std::uint8_t>& b) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t v : b) {
    c ^= v;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return ~c;
}

// Small seeded training run; returns the encoded checkpoint.
std::vector<std::uint8_t> seeded_run(const Tensor& images) {
  const GeneratorConfig gc{8, 32, 1, 8};
  Rng rng(77);
  auto params = GeneratorParams<float>::init(gc, rng);
  CodeTable table = CodeTable::init_gaussian(rng, images.dim(0), gc.latent_dim);
  TrainConfig tc;
  tc.lr_theta = 1e-4f;
  tc.lr_z = 0.01f;
  tc.batch_size = 8;
  tc.epochs = 2;
  tc.loss = LossConfig::mse();
  tc.seed = 78;
  train(images, params, table, tc);
  return encode_checkpoint({"seed = 77\n", params, table});
}

Outcome invariants(const Tensor& mnist) {
  std::vector<std::string> failed;
  Rng rng(3003);

  {  // code norms after every update
    const Tensor images = mnist.slice(0, 16);
    const GeneratorConfig gc{8, 32, 1, 4};
    auto params = GeneratorParams<float>::init(gc, rng);
    CodeTable table = CodeTable::init_gaussian(rng, 16, gc.latent_dim);
    TrainConfig tc;
    tc.lr_theta = 1e-4f;
    tc.lr_z = 50.0f;  // large on purpose: most updates leave the ball
    tc.loss = LossConfig::mse();
    bool ok = true;
    for (int s = 0; s < 40; ++s) {
      std::vector<std::size_t> batch{std::size_t(s % 16), std::size_t((s + 5) % 16)};
      train_step(params, table, images, batch, tc);
      for (std::size_t i = 0; i < table.size(); ++i) ok &= squared_norm(table.row(i)) <= 1.0;
    }
    if (!ok) failed.push_back("code norm");
  }
  {  // projection idempotence
    bool ok = true;
    for (int t = 0; t < 10000; ++t) {
      const double scale = std::pow(10.0, 8.0 * rng.uniform() - 4.0);
      const Tensor z = oracle::random_tensor(rng, Shape{1 + rng.below(64)}, scale).cast<float>();
      const Tensor p = project_code(z);
      ok &= project_code(p) == p && squared_norm(p) <= 1.0;
    }
    if (!ok) failed.push_back("projection idempotence");
  }
  {  // Lap1 metric axioms
    bool ok = true;
    for (int t = 0; t < kMetricTriples; ++t) {
      const Tensor a = oracle::random_tensor(rng, Shape{1, 1, 32, 32}).cast<float>();
      const Tensor b = oracle::random_tensor(rng, a.shape()).cast<float>();
      const Tensor c = oracle::random_tensor(rng, a.shape()).cast<float>();
      const double ab = lap1_loss(a, b, 3).value, ba = lap1_loss(b, a, 3).value;
      const double bc = lap1_loss(b, c, 3).value, ac = lap1_loss(a, c, 3).value;
      ok &= lap1_loss(a, a, 3).value == 0.0 && ab > 0.0 && ab == ba &&
            ac <= (ab + bc) * (1.0 + kTriangleSlack);
    }
    if (!ok) failed.push_back("Lap1 metric axioms");
  }
  {  // pyramid perfect reconstruction
    double worst = 0.0;
    for (std::size_t j = 1; j <= 4; ++j) {
      const Tensor x = oracle::random_tensor(rng, Shape{2, 3, 64, 64}).cast<float>();
      worst = std::max(worst, oracle::rel_err(reconstruct_pyramid(build_pyramid(x, j)), x));
    }
    const Tensor digits = mnist.slice(0, 8);
    worst = std::max(worst, oracle::rel_err(reconstruct_pyramid(build_pyramid(digits, 3)), digits));
    if (!(worst < kPyramidTol)) failed.push_back("pyramid reconstruction " + fmt("%.2g", worst));
  }
  {  // checkpoint round trip
    const GeneratorConfig gc{32, 32, 1, 16};
    Checkpoint c{"latent_dim = 32\n", GeneratorParams<float>::init(gc, rng),
                 CodeTable::init_gaussian(rng, 50, 32)};
    const auto bytes = encode_checkpoint(c);
    const Checkpoint back = decode_checkpoint(bytes);
    bool ok = encode_checkpoint(back) == bytes && back.table.codes() == c.table.codes();
    for (std::size_t i = 0; i < c.params.entries().size(); ++i)
      ok &= back.params.entries()[i].value == c.params.entries()[i].value;
    if (!ok) failed.push_back("checkpoint round trip");
  }
  std::uint32_t h1 = 0, h2 = 0;
  {  // seeded runs
    const Tensor images = mnist.slice(0, 64);
    h1 = crc32_bytes(seeded_run(images));
    h2 = crc32_bytes(seeded_run(images));
    if (h1 != h2) failed.push_back("seeded run hashes");
  }
  std::string detail = "code norms, idempotence, Lap1 axioms (" + std::to_string(kMetricTriples) +
                       " triples), pyramid, checkpoint, seeded runs (crc " +
                       fmt("%.0f", static_cast<double>(h1)) + ")";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
  }
  return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 4-6. Desk-scale MNIST

struct MnistRun {
  Config cfg;
  Tensor train;
  GeneratorParams<float> params;
  CodeTable table;
  double glo_db = 0.0, pca_db = 0.0, seconds = 0.0;
};

MnistRun mnist_run(const Tensor& images) {
  MnistRun run;
  run.cfg = load_config(GLO_SOURCE_DIR "/configs/mnist.cfg");
  // Pinned by the criterion regardless of the config file.
  run.cfg.latent_dim = kMnistLatent;
  run.cfg.weight_l2 = 1.0;
  run.cfg.weight_lap1 = 0.0;
  run.cfg.epochs = kMnistEpochs;
  run.cfg = run.cfg.resolved();
  run.cfg.validate();

  const SplitIndices idx = split(images.dim(0), run.cfg.split_denominator);
  run.train = gather_rows(images, idx.train);
  const GeneratorConfig gc = run.cfg.generator();
  Rng rng(run.cfg.seed);
  run.params = GeneratorParams<float>::init(gc, rng);
  run.table = run.cfg.init == CodeInit::pca
                  ? CodeTable::init_pca(run.train, gc.latent_dim)
                  : CodeTable::init_gaussian(rng, run.train.dim(0), gc.latent_dim);

  const auto t0 = Clock::now();
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochStats& e) {
    if (e.epoch % 10 == 0)
      progress("epoch " + std::to_string(e.epoch) + " loss " + fmt("%.3f", e.loss) + " probe psnr " +
               fmt("%.2f", e.psnr));
  };
  train(run.train, run.params, run.table, run.cfg.train(), hooks);
  run.seconds = seconds_since(t0);

  std::vector<std::size_t> all(run.train.dim(0));
  std::iota(all.begin(), all.end(), 0);
  run.glo_db = reconstruction_report(run.params, run.table, run.train, all, Split::train,
                                     run.cfg.recovery())
                   .mean();
  const std::size_t n = run.train.dim(0);
  const PcaModel model = pca(run.train.reshaped(Shape{n, run.train.size() / n}), kMnistLatent);
  run.pca_db = pca_baseline_report(model, run.train, all, Split::train).mean();
  return run;
}

Outcome glo_vs_pca(const MnistRun& run) {
  const double margin = run.glo_db - run.pca_db;
  return {margin >= kMnistMarginDb,
          "train pSNR GLO " + fmt("%.2f", run.glo_db) + " dB vs PCA(d=32) " + fmt("%.2f", run.pca_db) +
              " dB, margin " + fmt("%.2f", margin) + " dB (need >= " + fmt("%.1f", kMnistMarginDb) +
              "); " + std::to_string(run.train.dim(0)) + " images, " +
              std::to_string(kMnistEpochs) + " epochs, lr " + fmt("%g", run.cfg.lr_theta) + "/" +
              fmt("%g", run.cfg.lr_z) + ", " + fmt("%.0f", run.seconds) + " s"};
}

Outcome self_inversion(const MnistRun& run) {
  std::vector<std::size_t> rows(kInversionImages);
  std::iota(rows.begin(), rows.end(), 0);
  const Tensor codes = run.table.rows(rows);
  const Tensor targets = generate(run.params, codes);
  RecoveryConfig rc = run.cfg.recovery();
  rc.steps = kInversionSteps;
  const auto results = recover_codes(run.params, targets, rc);
  double mean = 0.0, worst = 1e9;
  std::size_t perfect = 0;
  for (const auto& r : results) {
    mean += r.psnr.db / static_cast<double>(results.size());
    worst = std::min(worst, r.psnr.db);
    perfect += r.psnr.perfect_match;
  }
  return {mean > kInversionDb, "mean recovered pSNR " + fmt("%.2f", mean) + " dB (need > " +
                                   fmt("%.0f", kInversionDb) + "), worst " + fmt("%.2f", worst) +
                                   " dB, " + std::to_string(perfect) + " exact; " +
                                   std::to_string(kInversionSteps) + " steps at lr " +
                                   fmt("%g", rc.lr)};
}

Outcome latent_behaviour(const MnistRun& run) {
  std::vector<std::string> failed;
  const CodeTable& table = run.table;

  const Tensor za = table.row(0), zb = table.row(1);
  const Tensor path = interpolate(za, zb, 8);
  const Tensor frames = generate(run.params, path);
  const Tensor ends = generate(run.params, table.rows(std::vector<std::size_t>{0, 1}));
  if (!(path.slice(0) == za && path.slice(7) == zb)) failed.push_back("endpoint codes");
  if (!(frames.slice(0) == ends.slice(0) && frames.slice(7) == ends.slice(1)))
    failed.push_back("endpoint images");

  const PcaModel model = pca(table.codes(), 4);
  const Tensor walk = principal_traversal(model, 1, 3.0, 7);
  const Tensor mean_code = project_code(model.mean).reshaped(Shape{1, table.dim()});
  const Tensor walk_images = generate(run.params, walk);
  if (!(walk.slice(3) == mean_code.slice(0))) failed.push_back("traversal centre code");
  if (!(walk_images.slice(3) == generate(run.params, mean_code).slice(0)))
    failed.push_back("traversal centre image");

  const GaussianModel g = fit_gaussian(table);
  Rng rng(6006);
  const Tensor draws = sample(g, rng, kCovDraws);
  const std::size_t d = table.dim();
  std::vector<std::vector<double>> rows(kCovDraws, std::vector<double>(d));
  for (std::size_t i = 0; i < kCovDraws; ++i)
    for (std::size_t k = 0; k < d; ++k) rows[i][k] = draws.at(i, k);
  const auto emp = oracle::covariance(rows);
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      const double diff = emp[a][b] - g.cov.at(a, b);
      num += diff * diff;
      den += static_cast<double>(g.cov.at(a, b)) * g.cov.at(a, b);
    }
  const double frob = std::sqrt(num / den);
  if (!(frob < kCovFrobeniusTol)) failed.push_back("sample covariance");

  std::string detail = "interpolation endpoints and traversal centre bit-exact; sample covariance "
                       "Frobenius rel err " +
                       fmt("%.3f", frob) + " over " + std::to_string(kCovDraws) + " draws";
  if (!failed.empty()) {
    detail += "; failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
  }
  return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 7. Overfit one image

struct OverfitResult {
  double best_db = 0.0;
  std::size_t best_step = 0;
  double final_db = 0.0;
};

// Best train-mode pSNR over `steps` joint updates on one image. The loss
// returned by train_step is the squared error summed over the image.
OverfitResult overfit_one(const Tensor& image, float lr_theta, float lr_z, std::size_t steps) {
  const GeneratorConfig gc{kMnistLatent, 32, 1, 64};
  Rng rng(1);
  auto params = GeneratorParams<float>::init(gc, rng);
  CodeTable table = CodeTable::init_gaussian(rng, 1, gc.latent_dim);
  TrainConfig tc;
  tc.lr_theta = lr_theta;
  tc.lr_z = lr_z;
  tc.loss = LossConfig::mse();
  const std::vector<std::size_t> batch{0};
  OverfitResult out;
  for (std::size_t s = 1; s <= steps + 1; ++s) {
    const double sse = train_step(params, table, image, batch, tc);
    // Loss before update s is the fit after s - 1 updates.
    const double db = sse > 0 ? 20.0 * std::log10(kUnitRangeMax / std::sqrt(sse / image.size()))
                              : kPerfectMatchDb;
    if (db > out.best_db) {
      out.best_db = db;
      out.best_step = s - 1;
    }
    out.final_db = db;
  }
  return out;
}

Outcome overfit(const Tensor& mnist) {
  const Tensor image = mnist.slice(0, 1);
  const OverfitResult r = overfit_one(image, kOverfitLrTheta, kOverfitLrZ, kOverfitSteps);
  // Not part of the verdict: the same run with both rates divided by 100,
  // inside the stable range for a loss summed over pixels, to show where
  // the shortfall comes from.
  const OverfitResult scaled =
      overfit_one(image, kOverfitLrTheta / 100, kOverfitLrZ / 100, kOverfitSteps);
  return {r.best_db > kOverfitDb,
          "lr " + fmt("%g", kOverfitLrTheta) + "/" + fmt("%g", kOverfitLrZ) + ": best train pSNR " +
              fmt("%.2f", r.best_db) + " dB at step " + std::to_string(r.best_step) + ", final " +
              fmt("%.2f", r.final_db) + " dB (need > " + fmt("%.0f", kOverfitDb) + " within " +
              std::to_string(kOverfitSteps) + " steps); for reference, lr " +
              fmt("%g", kOverfitLrTheta / 100) + "/" + fmt("%g", kOverfitLrZ / 100) + " reaches " +
              fmt("%.2f", scaled.best_db) + " dB"};
}

// ---------------------------------------------------------------------------
// 8. Fuzz

Outcome fuzz_gate() {
  const fuzz::Stats s = fuzz::run(8008, kFuzzInputs);
  std::size_t rejected = 0;
  for (const auto& [code, n] : s.rejected) rejected += n;
  std::string detail = std::to_string(s.runs) + " inputs: " + std::to_string(s.accepted) +
                       " accepted, " + std::to_string(rejected) + " structured rejections, " +
                       std::to_string(s.unstructured) + " other failures";
  if (s.unstructured) detail += " (first: " + s.first_unstructured + ")";
  return {s.unstructured == 0 && s.runs == kFuzzInputs, detail};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const Tensor mnist = load_idx(GLO_TEST_DATA_DIR "/mnist1k-images-idx3-ubyte").images;
  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& run) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  };

  report(1, "gradient suite", gradient_suite);
  report(2, "oracle equivalence", oracle_equivalence);
  report(3, "invariants", [&] { return invariants(mnist); });

  std::optional<MnistRun> run;
  auto need_run = [&]() -> const MnistRun& {
    if (!run) run = mnist_run(mnist);
    return *run;
  };
  report(4, "GLO vs PCA on MNIST", [&] { return glo_vs_pca(need_run()); });
  report(5, "self-inversion", [&] { return self_inversion(need_run()); });
  report(6, "latent behaviour", [&] { return latent_behaviour(need_run()); });
  report(7, "overfit one image", [&] { return overfit(mnist); });
  report(8, "parser fuzz", fuzz_gate);

  std::printf("%d of 8 criteria passed in %.0f s\n", 8 - failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
