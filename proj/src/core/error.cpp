#include "mflab/error.hpp"

namespace mflab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::shape: return "shape";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::config: return "config";
    case ErrorCode::input: return "input";
    case ErrorCode::degenerate_encoding: return "degenerate_encoding";
    case ErrorCode::rank_deficiency: return "rank_deficiency";
    case ErrorCode::off_manifold: return "off_manifold";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace mflab
