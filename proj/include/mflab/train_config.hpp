#pragma once

#include <cstdint>
#include <vector>

#include "mflab/mlp.hpp"

namespace mflab {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{20, 20};
  Activation activation = Activation::elu;

  void validate() const;
};

// Mean training loss before the first update and after each epoch.
struct TrainLog {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

// splitmix64 step; derives independent streams from one user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace mflab
