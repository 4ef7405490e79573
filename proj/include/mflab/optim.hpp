#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mflab/mlp.hpp"

namespace mflab {

// Ordered list of mutable parameter buffers making up one model. Trainers
// gather every network (and loose scalars) of a model into one of these so a
// single Adam state and a single global clip norm cover the whole model.
struct ParamRefs {
  std::vector<std::span<double>> blocks;

  void add(MlpParams& p);
  void add(std::span<double> s) { blocks.push_back(s); }
  void add(double& scalar) { blocks.emplace_back(&scalar, 1); }
};

struct GradBuffers {
  std::vector<std::vector<double>> blocks;

  static GradBuffers zeros_like(const ParamRefs& params);
  void assign(std::size_t first_block, const Grad& g);
  double norm() const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState for_params(const ParamRefs& params, AdamConfig cfg = {});
  static AdamState for_params(const MlpParams& params, AdamConfig cfg = {});
};

// In-place bias-corrected Adam update over aligned parameter/gradient blocks.
void adam_update(AdamState& state, const ParamRefs& params, const GradBuffers& grads);

// Value form for a single network.
std::pair<AdamState, MlpParams> adam_step(AdamState state, MlpParams params, const Grad& grad);

// Scale so that the global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(GradBuffers& grads, double max_norm);
Grad clip_grad_norm(Grad grad, double max_norm);

}  // namespace mflab
