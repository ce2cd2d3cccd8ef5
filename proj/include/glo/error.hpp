#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glo {

/// Failure categories. Each parser and numeric routine reports one of these
/// so callers (and tests) can tell e.g. a truncated file from a bad magic.
enum class Errc {
  shape_mismatch,
  invalid_argument,
  bad_magic,
  truncated,
  dim_overflow,
  malformed_header,
  unsupported_format,
  crc_mismatch,
  version_mismatch,
  unknown_section,
  missing_section,
  io,
  non_finite,
  not_converged,
  not_positive_definite,
  stale_cache,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace glo
