#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mflab/matrix.hpp"

namespace mflab {

// `square` lets a small net represent a quadratic exactly (test energies).
enum class Activation { relu, elu, swish, tanh, identity, square };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

double activate(Activation a, double x) noexcept;
// Derivative w.r.t. the pre-activation. relu'(0) is taken as 0.
double activate_derivative(Activation a, double x) noexcept;

// Affine map y = W x + b with W stored row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  double w(std::size_t o, std::size_t i) const { return weight[o * in + i]; }
  bool operator==(const DenseLayer&) const = default;
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  std::vector<Activation> hidden_activations;  // one per layer except the last
  Activation output_activation = Activation::identity;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  Activation activation_of(std::size_t layer) const {
    return layer + 1 == layers.size() ? output_activation : hidden_activations[layer];
  }

  // Throws shape error when widths do not chain or activation tags are missing,
  // numeric error when an entry is not finite.
  void validate() const;

  // Weight/bias buffers in layer order: w0, b0, w1, b1, ...
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  bool operator==(const MlpParams&) const = default;
};

// Same shape as MlpParams; partial derivatives of a scalar.
struct Grad {
  std::vector<DenseLayer> layers;

  static Grad zeros_like(const MlpParams& p);
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  double norm() const;
};

// Glorot-uniform weights, zero biases. `sizes` = {in, hidden..., out}.
MlpParams make_mlp(std::span<const std::size_t> sizes, Activation hidden, Activation output,
                   std::uint64_t seed);
MlpParams make_linear(const Matrix& weight, const Vector& bias,
                      Activation output = Activation::identity);

Vector mlp_forward(const MlpParams& params, std::span<const double> x);

// Pre- and post-activation values of every layer for one batch; post[0] is the input.
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x, ForwardCache* cache = nullptr);

struct BackwardResult {
  Grad grad;       // empty when parameter gradients were not requested
  Matrix input_grad;  // empty when not requested
};

// Reverse-mode pass given dL/d(outputs). `cache` must come from mlp_forward_batch.
BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& output_grad, bool want_params = true,
                            bool want_input = false);

// Forward-mode directional derivative J(z) * tangent.
Vector mlp_jvp(const MlpParams& params, std::span<const double> z, std::span<const double> tangent);

}  // namespace mflab
