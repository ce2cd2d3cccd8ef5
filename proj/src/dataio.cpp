#include "glo/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

namespace glo {

namespace fs = std::filesystem;

float byte_to_unit(std::uint8_t b) {
  return static_cast<float>(b * kByteScale + kByteOffset);
}

std::uint8_t unit_to_byte(float v) {
  const double x = std::clamp(static_cast<double>(v), -1.0, 1.0);
  return static_cast<std::uint8_t>(std::lround((x - kByteOffset) / kByteScale));
}

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::idx: return "idx";
    case DatasetFormat::ppm_dir: return "ppm-dir";
    case DatasetFormat::raw: return "raw";
  }
  return "?";
}

DatasetFormat parse_dataset_format(std::string_view text) {
  if (text == "idx") return DatasetFormat::idx;
  if (text == "ppm-dir") return DatasetFormat::ppm_dir;
  if (text == "raw") return DatasetFormat::raw;
  fail(Errc::invalid_argument,
       "unknown dataset format '" + std::string(text) + "' (expected idx, ppm-dir or raw)");
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  require(!in.bad(), Errc::io, "read error on '" + path.string() + "'");
  return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), Errc::io, "write error on '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, Errc::io, "cannot rename '" + tmp.string() + "' to '" + path.string() +
                             "': " + ec.message());
}

void write_text(const fs::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// ---------------------------------------------------------------------------
// IDX

namespace {

// Upper bound on payload bytes any parser will accept (1 GiB).
constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 30;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes, std::size_t rank) {
  require(bytes.size() >= 4, Errc::truncated, "IDX file shorter than its 4-byte magic");
  const std::uint32_t magic = read_be32(bytes.data());
  const std::uint32_t expected = 0x00000800u | static_cast<std::uint32_t>(rank);
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "IDX magic 0x%08X, expected 0x%08X", magic, expected);
    fail(Errc::bad_magic, buf);
  }
  const std::size_t header = 4 + 4 * rank;
  require(bytes.size() >= header, Errc::truncated, "IDX header truncated");
  IdxArray out;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint32_t d = read_be32(bytes.data() + 4 + 4 * i);
    require(d > 0, Errc::malformed_header, "IDX extent " + std::to_string(i) + " is zero");
    total *= d;
    require(total <= kMaxPayload, Errc::dim_overflow,
            "IDX extents describe more than 2^30 bytes");
    out.dims.push_back(d);
  }
  require(bytes.size() - header >= total, Errc::truncated,
          "IDX payload has " + std::to_string(bytes.size() - header) + " bytes, header says " +
              std::to_string(total));
  out.data.assign(bytes.begin() + header, bytes.begin() + header + total);
  return out;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  require(!array.dims.empty() && array.dims.size() <= 255, Errc::invalid_argument,
          "IDX rank must be in 1..255");
  std::uint64_t total = 1;
  for (auto d : array.dims) total *= d;
  require(total == array.data.size(), Errc::shape_mismatch,
          "IDX payload size does not match its extents");
  std::vector<std::uint8_t> out;
  put_be32(out, 0x00000800u | static_cast<std::uint32_t>(array.dims.size()));
  for (auto d : array.dims) put_be32(out, d);
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

Tensor idx_images(const IdxArray& array) {
  require(array.dims.size() == 3, Errc::shape_mismatch, "image IDX must have 3 extents");
  const std::size_t n = array.dims[0], h = array.dims[1], w = array.dims[2];
  require(h == w && (h == 28 || h == 32 || h == 64), Errc::unsupported_format,
          "IDX images must be 28x28, 32x32 or 64x64, got " + std::to_string(h) + "x" +
              std::to_string(w));
  const std::size_t s = h == 28 ? 32 : h, pad = (s - h) / 2;
  Tensor out(Shape{n, 1, s, s}, byte_to_unit(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(i, 0, y + pad, x + pad) = byte_to_unit(array.data[(i * h + y) * w + x]);
  return out;
}

IdxArray images_to_idx(const Tensor& images) {
  require(images.rank() == 4 && images.dim(1) == 1, Errc::shape_mismatch,
          "IDX images must be [N,1,H,W], got " + images.shape().str());
  IdxArray out;
  out.dims = {static_cast<std::uint32_t>(images.dim(0)), static_cast<std::uint32_t>(images.dim(2)),
              static_cast<std::uint32_t>(images.dim(3))};
  out.data.reserve(images.size());
  for (float v : images.values()) out.data.push_back(unit_to_byte(v));
  return out;
}

Dataset load_idx(const fs::path& images_path, const std::optional<fs::path>& labels_path) {
  const IdxArray arr = parse_idx(read_file(images_path), 3);
  Dataset ds;
  ds.images = idx_images(arr);
  ds.manifest = {images_path, DatasetFormat::idx, ds.images.dim(0), 1, ds.images.dim(2)};
  if (labels_path) {
    IdxArray labels = parse_idx(read_file(*labels_path), 1);
    require(labels.dims[0] == ds.manifest.count, Errc::shape_mismatch,
            "label file has " + std::to_string(labels.dims[0]) + " labels for " +
                std::to_string(ds.manifest.count) + " images");
    ds.labels = std::move(labels.data);
  }
  return ds;
}

void save_idx(const fs::path& path, const IdxArray& array) {
  write_file(path, encode_idx(array));
}

// ---------------------------------------------------------------------------
// PNM

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and comments, then reads a positive decimal integer.
  std::uint64_t number(const char* what) {
    for (;;) {
      require(pos_ < bytes_.size(), Errc::truncated,
              std::string("PNM header ends before the ") + what);
      const std::uint8_t c = bytes_[pos_];
      if (is_space(c)) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
    std::uint64_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_++] - '0');
      require(++digits <= 9, Errc::dim_overflow, std::string("PNM ") + what + " too large");
    }
    require(digits > 0, Errc::malformed_header, std::string("PNM ") + what + " is not a number");
    require(v > 0, Errc::malformed_header, std::string("PNM ") + what + " is zero");
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void raster_separator() {
    require(pos_ < bytes_.size(), Errc::truncated, "PNM header ends before the raster");
    require(is_space(bytes_[pos_]), Errc::malformed_header,
            "PNM maxval must be followed by whitespace");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PnmImage parse_pnm(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 2, Errc::truncated, "PNM file shorter than its magic");
  require(bytes[0] == 'P', Errc::bad_magic, "not a PNM file");
  PnmImage img;
  switch (bytes[1]) {
    case '5': img.channels = 1; break;
    case '6': img.channels = 3; break;
    case '1': case '2': case '3': case '4': case '7':
      fail(Errc::unsupported_format,
           std::string("PNM type P") + static_cast<char>(bytes[1]) +
               " is not supported (binary P5/P6 only)");
    default:
      fail(Errc::bad_magic, "not a PNM file");
  }
  HeaderReader r(bytes);
  r.skip(2);
  const std::uint64_t w = r.number("width");
  const std::uint64_t h = r.number("height");
  const std::uint64_t maxval = r.number("maxval");
  require(maxval == 255, Errc::unsupported_format,
          "PNM maxval " + std::to_string(maxval) + " is not supported (255 only)");
  const std::uint64_t total = w * h * img.channels;
  require(total <= kMaxPayload, Errc::dim_overflow, "PNM raster larger than 2^30 bytes");
  r.raster_separator();
  require(bytes.size() - r.pos() >= total, Errc::truncated,
          "PNM raster has " + std::to_string(bytes.size() - r.pos()) + " bytes, expected " +
              std::to_string(total));
  img.width = w;
  img.height = h;
  img.pixels.assign(bytes.begin() + r.pos(), bytes.begin() + r.pos() + total);
  return img;
}

std::vector<std::uint8_t> encode_pnm(const PnmImage& image) {
  require(image.channels == 1 || image.channels == 3, Errc::invalid_argument,
          "PNM images have 1 or 3 channels");
  require(image.pixels.size() == image.width * image.height * image.channels,
          Errc::shape_mismatch, "PNM raster size does not match its extents");
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Tensor pnm_to_tensor(const PnmImage& image) {
  const std::size_t c = image.channels, h = image.height, w = image.width;
  Tensor out(Shape{c, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k)
        out[(k * h + y) * w + x] = byte_to_unit(image.pixels[(y * w + x) * c + k]);
  return out;
}

PnmImage tensor_to_pnm(const Tensor& image) {
  require(image.rank() == 3 && (image.dim(0) == 1 || image.dim(0) == 3), Errc::shape_mismatch,
          "image must be [1|3,H,W], got " + image.shape().str());
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  PnmImage out{w, h, c, std::vector<std::uint8_t>(c * h * w)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k)
        out.pixels[(y * w + x) * c + k] = unit_to_byte(image[(k * h + y) * w + x]);
  return out;
}

Dataset load_ppm_dir(const fs::path& dir) {
  std::error_code ec;
  require(fs::is_directory(dir, ec), Errc::io, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm"))
      files.push_back(entry.path());
  }
  require(!files.empty(), Errc::invalid_argument,
          "no .pgm/.ppm/.pnm files in '" + dir.string() + "'");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<Tensor> images;
  for (const auto& f : files) {
    PnmImage img;
    try {
      img = parse_pnm(read_file(f));
    } catch (const Error& e) {
      fail(e.code(), f.filename().string() + ": " + e.what());
    }
    if (images.empty()) {
      require(img.width == img.height && (img.width == 32 || img.width == 64),
              Errc::unsupported_format,
              f.filename().string() + ": images must be 32x32 or 64x64, got " +
                  std::to_string(img.width) + "x" + std::to_string(img.height));
    } else {
      const Shape& first = images.front().shape();
      require(img.channels == first[0] && img.height == first[1] && img.width == first[2],
              Errc::shape_mismatch,
              f.filename().string() + " is " + std::to_string(img.channels) + "x" +
                  std::to_string(img.height) + "x" + std::to_string(img.width) +
                  ", earlier files are " + first.str());
    }
    images.push_back(pnm_to_tensor(img));
  }
  const Shape s = images.front().shape();
  Dataset ds;
  ds.images = Tensor(Shape{images.size(), s[0], s[1], s[2]});
  for (std::size_t i = 0; i < images.size(); ++i) ds.images.set_slice(i, images[i]);
  ds.manifest = {dir, DatasetFormat::ppm_dir, images.size(), s[0], s[1]};
  return ds;
}

Dataset load_raw(const fs::path& path, std::size_t channels, std::size_t size) {
  require(channels == 1 || channels == 3, Errc::invalid_argument,
          "raw datasets need channels 1 or 3");
  require(size == 32 || size == 64, Errc::invalid_argument, "raw datasets need size 32 or 64");
  const auto bytes = read_file(path);
  const std::size_t per = channels * size * size;
  require(!bytes.empty() && bytes.size() % per == 0, Errc::truncated,
          "raw file size " + std::to_string(bytes.size()) + " is not a positive multiple of " +
              std::to_string(per));
  const std::size_t n = bytes.size() / per;
  Dataset ds;
  ds.images = Tensor(Shape{n, channels, size, size});
  for (std::size_t i = 0; i < bytes.size(); ++i) ds.images[i] = byte_to_unit(bytes[i]);
  ds.manifest = {path, DatasetFormat::raw, n, channels, size};
  return ds;
}

Dataset load_dataset(const fs::path& path, DatasetFormat format, std::size_t channels,
                     std::size_t size, const std::optional<fs::path>& labels_path) {
  Dataset ds;
  switch (format) {
    case DatasetFormat::idx: ds = load_idx(path, labels_path); break;
    case DatasetFormat::ppm_dir: ds = load_ppm_dir(path); break;
    case DatasetFormat::raw: ds = load_raw(path, channels, size); break;
  }
  return ds;
}

SplitIndices split(std::size_t count, std::size_t denominator) {
  require(denominator >= 2, Errc::invalid_argument, "split denominator must be >= 2");
  SplitIndices out;
  for (std::size_t i = 0; i < count; ++i)
    (i % denominator == 0 ? out.test : out.train).push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Image output

PnmImage render_grid(const Tensor& images, std::size_t cols) {
  require(images.rank() == 4 && images.dim(0) >= 1, Errc::shape_mismatch,
          "image grid needs [N,C,H,W] with N >= 1, got " + images.shape().str());
  require(cols >= 1, Errc::invalid_argument, "image grid needs cols >= 1");
  const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  require(c == 1 || c == 3, Errc::shape_mismatch, "image grid needs 1 or 3 channels");
  cols = std::min(cols, n);
  const std::size_t rows = (n + cols - 1) / cols;
  PnmImage out;
  out.channels = c;
  out.width = cols * w + (cols + 1) * kGridGutter;
  out.height = rows * h + (rows + 1) * kGridGutter;
  out.pixels.assign(out.width * out.height * c, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y0 = kGridGutter + (i / cols) * (h + kGridGutter);
    const std::size_t x0 = kGridGutter + (i % cols) * (w + kGridGutter);
    const PnmImage tile = tensor_to_pnm(images.slice(i));
    for (std::size_t y = 0; y < h; ++y)
      std::memcpy(&out.pixels[((y0 + y) * out.width + x0) * c], &tile.pixels[y * w * c], w * c);
  }
  return out;
}

void write_image_grid(const Tensor& images, std::size_t cols, const fs::path& path) {
  write_file(path, encode_pnm(render_grid(images, cols)));
}

void write_image(const Tensor& image, const fs::path& path) {
  write_file(path, encode_pnm(tensor_to_pnm(image)));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'G', 'L', 'O', '1'};
constexpr std::uint32_t kMaxName = 256;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void bytes(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | bytes_[pos_ + k];
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32("tensor payload")); }
  void need(std::uint64_t n, const char* what) const {
    require(bytes_.size() - pos_ >= n, Errc::truncated,
            std::string("checkpoint truncated in ") + what);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_section(Writer& w, std::string_view name, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape().dims()) w.u32(static_cast<std::uint32_t>(d));
  for (float v : t.values()) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const GeneratorConfig& gc = ckpt.params.config();
  require(!ckpt.params.entries().empty(), Errc::invalid_argument,
          "checkpoint needs generator parameters");
  require(ckpt.table.size() == 0 || ckpt.table.dim() == gc.latent_dim, Errc::shape_mismatch,
          "code table dimension does not match the generator");
  Writer w;
  w.bytes({kMagic, 4});
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(gc.latent_dim));
  w.u32(static_cast<std::uint32_t>(gc.image_size));
  w.u32(static_cast<std::uint32_t>(gc.channels));
  w.u32(static_cast<std::uint32_t>(gc.width));
  w.u32(static_cast<std::uint32_t>(ckpt.config_text.size()));
  w.bytes(ckpt.config_text);
  const bool has_codes = ckpt.table.size() > 0;
  w.u32(static_cast<std::uint32_t>(ckpt.params.entries().size() + (has_codes ? 1 : 0)));
  for (const auto& e : ckpt.params.entries()) write_section(w, e.name, e.value);
  if (has_codes) write_section(w, kCodesSection, ckpt.table.codes());
  w.u32(crc_of(w.out));
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 4, Errc::truncated, "checkpoint shorter than its magic");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, Errc::bad_magic,
          "not a GLO1 checkpoint (bad magic)");
  Reader head(bytes.subspan(4));
  const std::uint32_t version = head.u32("version");
  require(version == kCheckpointVersion, Errc::version_mismatch,
          "checkpoint version " + std::to_string(version) + ", this build reads version " +
              std::to_string(kCheckpointVersion));
  require(bytes.size() >= 12, Errc::truncated, "checkpoint has no CRC");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const std::uint32_t stored = tail.u32("crc");
  const std::uint32_t actual = crc_of(body);
  if (stored != actual) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "checkpoint CRC mismatch: stored %08x, computed %08x", stored,
                  actual);
    fail(Errc::crc_mismatch, buf);
  }

  Reader r(body.subspan(8));
  GeneratorConfig gc;
  gc.latent_dim = r.u32("header");
  gc.image_size = r.u32("header");
  gc.channels = r.u32("header");
  gc.width = r.u32("header");
  try {
    gc.validate();
  } catch (const Error& e) {
    fail(Errc::malformed_header, std::string("checkpoint model header: ") + e.what());
  }
  Checkpoint ckpt;
  const std::uint32_t config_len = r.u32("config");
  ckpt.config_text = r.str(config_len, "config");

  const auto layout = GeneratorParams<float>::layout(gc);
  std::vector<std::optional<Tensor>> found(layout.size());
  std::optional<Tensor> codes;
  const std::uint32_t sections = r.u32("section count");
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::uint32_t name_len = r.u32("section name");
    require(name_len >= 1 && name_len <= kMaxName, Errc::malformed_header,
            "checkpoint section name length " + std::to_string(name_len));
    const std::string name = r.str(name_len, "section name");
    const std::uint32_t rank = r.u32("section rank");
    require(rank >= 1 && rank <= Shape::kMaxRank, Errc::malformed_header,
            "section '" + name + "' has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    std::uint64_t numel = 1;
    for (auto& d : dims) {
      d = r.u32("section shape");
      require(d >= 1, Errc::malformed_header, "section '" + name + "' has a zero extent");
      numel *= d;
      require(numel <= kMaxPayload, Errc::dim_overflow, "section '" + name + "' too large");
    }
    r.need(numel * 4, "section payload");
    Tensor t{Shape(std::span<const std::size_t>(dims))};
    for (auto& v : t.values()) v = r.f32();

    std::optional<Tensor>* slot = nullptr;
    if (name == kCodesSection) {
      slot = &codes;
    } else {
      auto it = std::find_if(layout.begin(), layout.end(),
                             [&](const auto& e) { return e.name == name; });
      require(it != layout.end(), Errc::unknown_section,
              "unknown checkpoint section '" + name + "'");
      require_same_shape(t.shape(), it->value.shape(), name.c_str());
      slot = &found[static_cast<std::size_t>(it - layout.begin())];
    }
    require(!slot->has_value(), Errc::malformed_header, "duplicate section '" + name + "'");
    *slot = std::move(t);
  }
  require(r.done(), Errc::malformed_header, "trailing bytes after the last section");

  Rng rng(0);
  ckpt.params = GeneratorParams<float>::init(gc, rng).zeros_like();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    require(found[i].has_value(), Errc::missing_section,
            "checkpoint lacks section '" + layout[i].name + "'");
    auto& e = ckpt.params.mutable_entries()[i];
    e.value = std::move(*found[i]);
  }
  if (codes) {
    require(codes->rank() == 2 && codes->dim(1) == gc.latent_dim, Errc::shape_mismatch,
            "codes section " + codes->shape().str() + " does not match latent dimension " +
                std::to_string(gc.latent_dim));
    ckpt.table = CodeTable(std::move(*codes));
  }
  return ckpt;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const fs::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace glo
