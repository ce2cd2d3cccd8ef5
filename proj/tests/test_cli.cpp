#include <doctest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glo/dataio.hpp"
#include "glo/ops.hpp"

using namespace glo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A 15-image dataset and a tiny model config in a fresh directory; the
// trained checkpoint is shared by every case.
class Fixture {
 public:
  static Fixture& get() {
    static Fixture f;
    return f;
  }

  Run glo(const std::string& args) const {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + GLO_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string common() const {
    return "--ckpt \"" + (dir / "run" / "model.glo").string() + "\" --out \"" +
           (dir / "run").string() + "\"";
  }

  fs::path dir;
  Run trained;

 private:
  Fixture() {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    dir = fs::temp_directory_path() / ("glo-cli-" + std::to_string(stamp));
    fs::create_directories(dir);
    Rng rng(1);
    IdxArray images{{15, 28, 28}, std::vector<std::uint8_t>(15 * 28 * 28)};
    for (std::size_t i = 0; i < images.data.size(); ++i)
      images.data[i] = static_cast<std::uint8_t>((i / 28 + i % 28 + 17 * (i / 784)) % 256);
    save_idx(dir / "images", images);
    write_text(dir / "run.cfg",
               "dataset = " + (dir / "images").string() +
                   "\nwidth = 4\nlatent_dim = 8\nepochs = 2\nbatch_size = 2\n"
                   "split_denominator = 3\nlr_theta = 0.0001\nlr_z = 1\n"
                   "recovery_steps = 3\nrecovery_lr = 0.01\nweight_lap1 = 0\n");
    trained = glo("train --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                  (dir / "run").string() + "\"");
  }
  ~Fixture() { fs::remove_all(dir); }
};

// Tile (r, c) of a grid of S x S gray images.
std::vector<std::uint8_t> tile(const PnmImage& grid, std::size_t s, std::size_t r,
                               std::size_t c) {
  std::vector<std::uint8_t> out;
  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) {
      const std::size_t gy = kGridGutter + r * (s + kGridGutter) + y;
      const std::size_t gx = kGridGutter + c * (s + kGridGutter) + x;
      out.push_back(grid.pixels[gy * grid.width + gx]);
    }
  return out;
}

}  // namespace

TEST_CASE("train writes a loadable checkpoint and its reports") {
  const Fixture& f = Fixture::get();
  INFO(f.trained.err);
  REQUIRE(f.trained.status == 0);
  const Checkpoint c = load_checkpoint(f.dir / "run" / "model.glo");
  CHECK(c.table.size() == 10);  // 15 images, every third held out
  CHECK(c.table.dim() == 8);
  CHECK(c.params.config().width == 4);
  CHECK(fs::exists(f.dir / "run" / "train_recon.pgm"));
  const std::string csv = slurp(f.dir / "run" / "train_report.csv");
  CHECK(csv.rfind("epoch,loss,psnr,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(f.trained.out.find("epoch 2") != std::string::npos);
}

TEST_CASE("sample writes a 4x4 grid") {
  const Fixture& f = Fixture::get();
  const Run r = f.glo("sample " + f.common() + " --n 16 --cols 4");
  INFO(r.err);
  REQUIRE(r.status == 0);
  const PnmImage g = parse_pnm(read_file(f.dir / "run" / "samples.pgm"));
  CHECK(g.width == 4 * 32 + 5 * kGridGutter);
  CHECK(g.height == 4 * 32 + 5 * kGridGutter);
}

TEST_CASE("interpolation endpoints decode the stored codes") {
  const Fixture& f = Fixture::get();
  const Run r = f.glo("interpolate " + f.common() + " --i 1 --j 3 --steps 5");
  INFO(r.err);
  REQUIRE(r.status == 0);
  const PnmImage g = parse_pnm(read_file(f.dir / "run" / "interpolate.pgm"));
  const Checkpoint c = load_checkpoint(f.dir / "run" / "model.glo");
  auto decoded = [&](std::size_t i) {
    const std::vector<std::size_t> row{i};
    return tensor_to_pnm(generate(c.params, c.table.rows(row)).slice(0)).pixels;
  };
  CHECK(tile(g, 32, 0, 0) == decoded(1));
  CHECK(tile(g, 32, 0, 4) == decoded(3));
}

TEST_CASE("reconstruct, arith, traverse and reports run") {
  const Fixture& f = Fixture::get();
  for (const std::string cmd :
       {"reconstruct --split train", "reconstruct --split test", "arith --a 0,1 --b 2 --c 3",
        "traverse --k 1 --steps 3", "eval-psnr", "pca-baseline --split train"}) {
    const Run r = f.glo(cmd + " " + f.common());
    INFO(cmd << ": " << r.err);
    CHECK(r.status == 0);
  }
  for (const char* file : {"reconstruct-train.pgm", "reconstruct-test-targets.pgm", "arith.pgm",
                           "traverse.pgm", "psnr-train.csv", "psnr-test.csv",
                           "pca-psnr-train.csv"})
    CHECK_MESSAGE(fs::exists(f.dir / "run" / file), file);
  // Dataset indices, not split positions: the test split is {0, 3}.
  const std::string test_csv = slurp(f.dir / "run" / "psnr-test.csv");
  CHECK(test_csv.find("\n0,test,") != std::string::npos);
  CHECK(test_csv.find("\n3,test,") != std::string::npos);
}

TEST_CASE("help lists subcommands and config defaults") {
  const Fixture& f = Fixture::get();
  const Run r = f.glo("--help");
  CHECK(r.status == 0);
  for (const char* word : {"train", "sample", "interpolate", "eval-psnr", "pca-baseline"})
    CHECK(r.out.find(word) != std::string::npos);
  const Run t = f.glo("train --help");
  CHECK(t.status == 0);
  CHECK(t.out.find("lr_theta (default: 1)") != std::string::npos);
}

TEST_CASE("exit codes separate usage errors from failures") {
  const Fixture& f = Fixture::get();
  CHECK(f.glo("bogus").status == 2);
  CHECK(f.glo("sample --n notanumber " + f.common()).status == 2);
  const Run missing = f.glo("sample --ckpt \"" + (f.dir / "nope.glo").string() + "\"");
  CHECK(missing.status == 1);
  CHECK(missing.err.rfind("glo: io:", 0) == 0);
  const Run range = f.glo("interpolate " + f.common() + " --i 0 --j 99");
  CHECK(range.status == 1);
  CHECK(range.err.find("invalid_argument") != std::string::npos);
  CHECK(f.glo("arith " + f.common() + " --a 0 --b x --c 1").status == 1);
  CHECK(f.glo("train --config \"" + (f.dir / "run.cfg").string() + "\" --set bogus=1").status == 1);
}
