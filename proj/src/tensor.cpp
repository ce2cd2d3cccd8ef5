#include "glo/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace glo {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::bad_magic: return "bad_magic";
    case Errc::truncated: return "truncated";
    case Errc::dim_overflow: return "dim_overflow";
    case Errc::malformed_header: return "malformed_header";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::crc_mismatch: return "crc_mismatch";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::unknown_section: return "unknown_section";
    case Errc::missing_section: return "missing_section";
    case Errc::io: return "io";
    case Errc::non_finite: return "non_finite";
    case Errc::not_converged: return "not_converged";
    case Errc::not_positive_definite: return "not_positive_definite";
    case Errc::stale_cache: return "stale_cache";
  }
  return "unknown";
}

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  require(dims.size() <= kMaxRank, Errc::invalid_argument,
          "tensor rank " + std::to_string(dims.size()) + " exceeds 4");
  for (std::size_t d : dims)
    require(d > 0, Errc::invalid_argument, "tensor extents must be positive");
  std::copy(dims.begin(), dims.end(), dims_.begin());
  rank_ = dims.size();
}

std::size_t Shape::numel() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += ",";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    fail(Errc::shape_mismatch,
         std::string(what) + ": shape " + a.str() + " vs " + b.str());
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(shape), data_(std::move(data)) {
  require(data_.size() == shape_.numel(), Errc::shape_mismatch,
          "buffer of " + std::to_string(data_.size()) +
              " elements does not fit shape " + shape_.str());
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  require(shape.numel() == size(), Errc::shape_mismatch,
          "cannot reshape " + shape_.str() + " to " + shape.str());
  return BasicTensor(shape, data_);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::slice(std::size_t i) const {
  return slice(i, i + 1).reshaped(
      rank() == 1 ? Shape{1} : Shape(shape_.dims().subspan(1)));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::slice(std::size_t begin, std::size_t end) const {
  require(rank() >= 1 && begin < end && end <= shape_[0],
          Errc::invalid_argument,
          "slice [" + std::to_string(begin) + "," + std::to_string(end) +
              ") out of range for " + shape_.str());
  std::size_t row = size() / shape_[0];
  std::array<std::size_t, Shape::kMaxRank> dims{};
  std::copy(shape_.dims().begin(), shape_.dims().end(), dims.begin());
  dims[0] = end - begin;
  std::vector<T> out(data_.begin() + begin * row, data_.begin() + end * row);
  return BasicTensor(Shape(std::span<const std::size_t>(dims.data(), rank())),
                     std::move(out));
}

template <typename T>
void BasicTensor<T>::set_slice(std::size_t i, const BasicTensor& row) {
  require(rank() >= 1 && i < shape_[0], Errc::invalid_argument,
          "row index out of range");
  std::size_t n = size() / shape_[0];
  require(row.size() == n, Errc::shape_mismatch,
          "row of shape " + row.shape().str() + " does not fit " + shape_.str());
  std::copy(row.data_.begin(), row.data_.end(), data_.begin() + i * n);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& src,
                           std::span<const std::size_t> indices) {
  require(src.rank() >= 1 && !indices.empty(), Errc::invalid_argument,
          "gather_rows needs a non-empty index list");
  std::size_t row = src.size() / src.dim(0);
  std::array<std::size_t, Shape::kMaxRank> dims{};
  std::copy(src.shape().dims().begin(), src.shape().dims().end(), dims.begin());
  dims[0] = indices.size();
  std::vector<T> out;
  out.reserve(indices.size() * row);
  for (std::size_t i : indices) {
    require(i < src.dim(0), Errc::invalid_argument,
            "row index " + std::to_string(i) + " out of range for " +
                src.shape().str());
    out.insert(out.end(), src.data() + i * row, src.data() + (i + 1) * row);
  }
  return BasicTensor<T>(
      Shape(std::span<const std::size_t>(dims.data(), src.rank())),
      std::move(out));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template Tensor gather_rows(const Tensor&, std::span<const std::size_t>);
template TensorD gather_rows(const TensorD&, std::span<const std::size_t>);

}  // namespace glo
