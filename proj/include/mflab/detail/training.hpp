#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mflab/optim.hpp"
#include "mflab/train_config.hpp"

namespace mflab::detail {

// Minibatch Adam with global-norm clipping. `step(indices, grads)` fills
// `grads` (aligned with `params`) and returns the batch loss.
template <class StepFn>
void run_epochs(const ParamRefs& params, const TrainConfig& cfg, std::size_t n,
                std::mt19937_64& rng, TrainLog* log, StepFn&& step) {
  AdamState adam = AdamState::for_params(params, {cfg.learning_rate});
  GradBuffers grads = GradBuffers::zeros_like(params);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = std::min(cfg.batch_size, n);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t stop = std::min(n, start + bs);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const double loss = step(idx, grads);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::numeric, "non-finite training loss at epoch " + std::to_string(epoch), loss);
      }
      clip_global_norm(grads, cfg.clip_norm);
      adam_update(adam, params, grads);
      total += loss;
      ++batches;
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(batches));
  }
}

inline Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(m.data.begin() + static_cast<std::ptrdiff_t>(idx[i] * m.cols), m.cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
  }
  return out;
}

}  // namespace mflab::detail
