#include "mflab/optim.hpp"

#include <cmath>
#include <string>

namespace mflab {

void ParamRefs::add(MlpParams& p) {
  for (auto b : p.blocks()) blocks.push_back(b);
}

GradBuffers GradBuffers::zeros_like(const ParamRefs& params) {
  GradBuffers g;
  g.blocks.reserve(params.blocks.size());
  for (auto b : params.blocks) g.blocks.emplace_back(b.size(), 0.0);
  return g;
}

void GradBuffers::assign(std::size_t first_block, const Grad& g) {
  const auto src = g.blocks();
  require(first_block + src.size() <= blocks.size(), ErrorCode::shape,
          "gradient blocks overflow the buffer list");
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto& dst = blocks[first_block + i];
    require(dst.size() == src[i].size(), ErrorCode::shape, "gradient block size mismatch");
    dst.assign(src[i].begin(), src[i].end());
  }
}

double GradBuffers::norm() const {
  double s = 0.0;
  for (const auto& b : blocks) {
    for (double v : b) s += v * v;
  }
  return std::sqrt(s);
}

AdamState AdamState::for_params(const ParamRefs& params, AdamConfig cfg) {
  AdamState s;
  s.config = cfg;
  for (auto b : params.blocks) {
    s.first_moment.emplace_back(b.size(), 0.0);
    s.second_moment.emplace_back(b.size(), 0.0);
  }
  return s;
}

AdamState AdamState::for_params(const MlpParams& params, AdamConfig cfg) {
  AdamState s;
  s.config = cfg;
  for (auto b : params.blocks()) {
    s.first_moment.emplace_back(b.size(), 0.0);
    s.second_moment.emplace_back(b.size(), 0.0);
  }
  return s;
}

void adam_update(AdamState& state, const ParamRefs& params, const GradBuffers& grads) {
  require(params.blocks.size() == grads.blocks.size() &&
              params.blocks.size() == state.first_moment.size(),
          ErrorCode::shape, "Adam state, parameters and gradients have different block counts");
  for (std::size_t b = 0; b < grads.blocks.size(); ++b) {
    require(params.blocks[b].size() == grads.blocks[b].size() &&
                params.blocks[b].size() == state.first_moment[b].size(),
            ErrorCode::shape, "Adam block " + std::to_string(b) + " size mismatch");
    for (double g : grads.blocks[b]) {
      if (!std::isfinite(g)) fail(ErrorCode::numeric, "non-finite gradient entry", g);
    }
  }
  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < grads.blocks.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    const auto& g = grads.blocks[b];
    auto p = params.blocks[b];
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

std::pair<AdamState, MlpParams> adam_step(AdamState state, MlpParams params, const Grad& grad) {
  ParamRefs refs;
  refs.add(params);
  GradBuffers g = GradBuffers::zeros_like(refs);
  g.assign(0, grad);
  adam_update(state, refs, g);
  return {std::move(state), std::move(params)};
}

double clip_global_norm(GradBuffers& grads, double max_norm) {
  require(max_norm > 0.0, ErrorCode::config, "clip norm must be positive");
  const double n = grads.norm();
  if (n > max_norm) {
    const double scale = max_norm / n;
    for (auto& b : grads.blocks) {
      for (double& v : b) v *= scale;
    }
  }
  return n;
}

Grad clip_grad_norm(Grad grad, double max_norm) {
  require(max_norm > 0.0, ErrorCode::config, "clip norm must be positive");
  const double n = grad.norm();
  if (n > max_norm) {
    const double scale = max_norm / n;
    for (auto b : grad.blocks()) {
      for (double& v : b) v *= scale;
    }
  }
  return grad;
}

}  // namespace mflab
