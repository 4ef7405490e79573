#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mflab {

enum class ErrorCode {
  shape,
  numeric,
  unsupported,
  config,
  input,
  degenerate_encoding,
  rank_deficiency,
  off_manifold,
  io,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library. `value` carries the offending
// number when there is one (non-finite loss, reconstruction residual, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<double> value = std::nullopt)
      : std::runtime_error(what), code_(code), value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::optional<double> value_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              std::optional<double> value = std::nullopt) {
  throw Error(code, what, value);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace mflab
