#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glo/latent_table.hpp"
#include "glo/layers.hpp"
#include "glo/tensor.hpp"

namespace glo {

// ---------------------------------------------------------------------------
// Pixel normalization: value = byte * kByteScale + kByteOffset, so 0 -> -1
// and 255 -> +1.

inline constexpr double kByteScale = 2.0 / 255.0;
inline constexpr double kByteOffset = -1.0;

float byte_to_unit(std::uint8_t b);
/// Clamps to [-1, 1] and rounds to the nearest byte. Inverts byte_to_unit
/// exactly on all 256 values.
std::uint8_t unit_to_byte(float v);

// ---------------------------------------------------------------------------
// Datasets

enum class DatasetFormat { idx, ppm_dir, raw };
std::string_view to_string(DatasetFormat format);
DatasetFormat parse_dataset_format(std::string_view text);

struct DatasetManifest {
  std::filesystem::path source;
  DatasetFormat format = DatasetFormat::idx;
  std::size_t count = 0;
  std::size_t channels = 0;
  std::size_t size = 0;
  double scale = kByteScale;
  double offset = kByteOffset;
};

struct Dataset {
  DatasetManifest manifest;
  Tensor images;                     // [N,C,S,S] in [-1,1]
  std::vector<std::uint8_t> labels;  // empty when none were loaded
};

/// Raw contents of an IDX file of unsigned bytes.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Big-endian IDX: two zero bytes, type 0x08 (unsigned byte), rank, then
/// rank u32 extents and the payload. `rank` is the required rank (3 for
/// images, 1 for labels). Errors: bad_magic, truncated, dim_overflow, and
/// malformed_header for zero extents.
IdxArray parse_idx(std::span<const std::uint8_t> bytes, std::size_t rank);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);

/// Images [N,1,S,S] from an image IDX file. 28x28 images are padded to
/// 32x32 with byte 0 (2 pixels each side); 32x32 and 64x64 load as is.
Tensor idx_images(const IdxArray& array);
/// Inverse of idx_images for unpadded [N,1,S,S] tensors.
IdxArray images_to_idx(const Tensor& images);

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt);
void save_idx(const std::filesystem::path& path, const IdxArray& array);

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct PnmImage {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Binary PGM (P5) or PPM (P6) with maxval 255. Header tokens may be
/// separated by any whitespace and '#' comments. Trailing bytes after the
/// raster are ignored.
PnmImage parse_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const PnmImage& image);

/// [C,S,S] <-> interleaved bytes. image_to_pnm clamps to [-1,1].
Tensor pnm_to_tensor(const PnmImage& image);
PnmImage tensor_to_pnm(const Tensor& image);

/// Every *.pgm / *.ppm / *.pnm file in `dir`, ordered by file name. All
/// files must share channels and a square size of 32 or 64.
Dataset load_ppm_dir(const std::filesystem::path& dir);

/// Headerless bytes, N*C*S*S with channel-planar images back to back.
Dataset load_raw(const std::filesystem::path& path, std::size_t channels, std::size_t size);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     std::size_t channels, std::size_t size,
                     const std::optional<std::filesystem::path>& labels_path = std::nullopt);

struct SplitIndices {
  std::vector<std::size_t> train, test;
};

/// Test indices are 0, denom, 2*denom, ...; train is the complement. Both
/// ascending.
SplitIndices split(std::size_t count, std::size_t denominator = 32);

// ---------------------------------------------------------------------------
// Image output

inline constexpr std::size_t kGridGutter = 2;

/// Tiles images [N,C,S,S] row-major on a black canvas with `kGridGutter`
/// pixels between and around tiles. The column count is min(cols, N); the
/// canvas is cols*S + (cols+1)*2 wide and rows*S + (rows+1)*2 high with
/// rows = ceil(N / cols).
PnmImage render_grid(const Tensor& images, std::size_t cols);
void write_image_grid(const Tensor& images, std::size_t cols, const std::filesystem::path& path);
/// Single image [C,S,S] as P5/P6, no border.
void write_image(const Tensor& image, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  std::string config_text;  // echoed key=value configuration
  GeneratorParams<float> params;
  CodeTable table;          // may be empty
};

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCodesSection = "codes";

/// GLO1 byte layout (integers u32 little-endian, floats IEEE-754 binary32
/// little-endian):
///
///   "GLO1" version latent_dim image_size channels width
///   config_len config_bytes
///   section_count { name_len name rank dims[rank] payload }...
///   crc32 of every preceding byte (zlib polynomial)
///
/// Sections are the generator tensors in layout order, then "codes" when
/// the table is non-empty.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Errors: truncated, bad_magic, version_mismatch, crc_mismatch,
/// unknown_section, missing_section, shape_mismatch, malformed_header.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary then renames over `path`.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace glo
