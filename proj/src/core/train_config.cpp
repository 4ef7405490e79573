#include "mflab/train_config.hpp"

namespace mflab {

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorCode::config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::config, "batch size must be >= 1");
  require(learning_rate > 0.0, ErrorCode::config, "learning rate must be > 0");
  require(clip_norm > 0.0, ErrorCode::config, "clip norm must be > 0");
  require(!hidden.empty(), ErrorCode::config, "at least one hidden layer is required");
  for (auto h : hidden) require(h > 0, ErrorCode::config, "hidden layer widths must be > 0");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mflab
