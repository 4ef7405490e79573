#include "mflab/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mflab {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::swish: return "swish";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    case Activation::square: return "square";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::relu, Activation::elu, Activation::swish, Activation::tanh,
                 Activation::identity, Activation::square}) {
    if (to_string(a) == name) return a;
  }
  fail(ErrorCode::config, "unknown activation '" + std::string(name) + "'");
}

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::elu: return x > 0 ? x : std::expm1(x);
    case Activation::swish: return x * sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
    case Activation::square: return x * x;
  }
  return x;
}

double activate_derivative(Activation a, double x) noexcept {
  switch (a) {
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::elu: return x > 0 ? 1.0 : std::exp(x);
    case Activation::swish: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
    case Activation::square: return 2.0 * x;
  }
  return 1.0;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  require(!layers.empty(), ErrorCode::shape, "MLP has no layers");
  require(hidden_activations.size() + 1 == layers.size(), ErrorCode::shape,
          "MLP needs one activation tag per hidden layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require(l.weight.size() == l.in * l.out && l.bias.size() == l.out, ErrorCode::shape,
            "layer " + std::to_string(i) + " buffers do not match its declared shape");
    if (i > 0) {
      require(layers[i - 1].out == l.in, ErrorCode::shape,
              "layer " + std::to_string(i) + " input width does not chain");
    }
    for (double v : l.weight) {
      if (!std::isfinite(v)) fail(ErrorCode::numeric, "non-finite weight", v);
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) fail(ErrorCode::numeric, "non-finite bias", v);
    }
  }
}

namespace {

template <class Layers, class Span>
std::vector<Span> collect_blocks(Layers& layers) {
  std::vector<Span> out;
  out.reserve(layers.size() * 2);
  for (auto& l : layers) {
    out.emplace_back(l.weight);
    out.emplace_back(l.bias);
  }
  return out;
}

}  // namespace

std::vector<std::span<double>> MlpParams::blocks() {
  return collect_blocks<decltype(layers), std::span<double>>(layers);
}
std::vector<std::span<const double>> MlpParams::blocks() const {
  return collect_blocks<const decltype(layers), std::span<const double>>(layers);
}

Grad Grad::zeros_like(const MlpParams& p) {
  Grad g;
  g.layers.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    g.layers.push_back({l.in, l.out, std::vector<double>(l.weight.size(), 0.0),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

std::vector<std::span<double>> Grad::blocks() {
  return collect_blocks<decltype(layers), std::span<double>>(layers);
}
std::vector<std::span<const double>> Grad::blocks() const {
  return collect_blocks<const decltype(layers), std::span<const double>>(layers);
}

double Grad::norm() const {
  double s = 0.0;
  for (auto b : blocks()) {
    for (double v : b) s += v * v;
  }
  return std::sqrt(s);
}

MlpParams make_mlp(std::span<const std::size_t> sizes, Activation hidden, Activation output,
                   std::uint64_t seed) {
  require(sizes.size() >= 2, ErrorCode::config, "MLP needs at least input and output widths");
  std::mt19937_64 rng(seed);
  MlpParams p;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const std::size_t in = sizes[i];
    const std::size_t out = sizes[i + 1];
    require(in > 0 && out > 0, ErrorCode::config, "MLP layer widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    for (auto& w : layer.weight) w = dist(rng);
    p.layers.push_back(std::move(layer));
    if (i + 2 < sizes.size()) p.hidden_activations.push_back(hidden);
  }
  p.output_activation = output;
  return p;
}

MlpParams make_linear(const Matrix& weight, const Vector& bias, Activation output) {
  require(bias.size() == weight.rows, ErrorCode::shape, "bias length must equal weight rows");
  MlpParams p;
  p.layers.push_back({weight.cols, weight.rows, weight.data, bias});
  p.output_activation = output;
  return p;
}

Vector mlp_forward(const MlpParams& params, std::span<const double> x) {
  require(!params.layers.empty() && x.size() == params.input_dim(), ErrorCode::shape,
          "input length " + std::to_string(x.size()) + " does not match MLP input width " +
              std::to_string(params.input_dim()));
  Vector h(x.begin(), x.end());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    const Activation act = params.activation_of(li);
    Vector next(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.bias[o];
      const double* row = l.weight.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) s += row[i] * h[i];
      next[o] = activate(act, s);
    }
    h = std::move(next);
  }
  return h;
}

Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x, ForwardCache* cache) {
  require(!params.layers.empty() && x.cols == params.input_dim(), ErrorCode::shape,
          "batch width " + std::to_string(x.cols) + " does not match MLP input width " +
              std::to_string(params.input_dim()));
  if (cache) {
    cache->pre.clear();
    cache->post.clear();
    cache->post.push_back(x);
  }
  Matrix h = x;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    const Activation act = params.activation_of(li);
    Matrix pre(x.rows, l.out);
    Matrix post(x.rows, l.out);
    for (std::size_t n = 0; n < x.rows; ++n) {
      const double* hin = h.data.data() + n * l.in;
      for (std::size_t o = 0; o < l.out; ++o) {
        double s = l.bias[o];
        const double* row = l.weight.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * hin[i];
        pre(n, o) = s;
        post(n, o) = activate(act, s);
      }
    }
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->post.push_back(post);
    }
    h = std::move(post);
  }
  return h;
}

BackwardResult mlp_backward(const MlpParams& params, const ForwardCache& cache,
                            const Matrix& output_grad, bool want_params, bool want_input) {
  const std::size_t nl = params.layers.size();
  require(cache.pre.size() == nl && cache.post.size() == nl + 1, ErrorCode::shape,
          "forward cache does not belong to this MLP");
  const std::size_t batch = cache.post.front().rows;
  require(output_grad.rows == batch && output_grad.cols == params.output_dim(), ErrorCode::shape,
          "output gradient shape does not match forward batch");

  BackwardResult result;
  if (want_params) result.grad = Grad::zeros_like(params);

  Matrix delta = output_grad;  // dL/d(post) of the current layer
  for (std::size_t li = nl; li-- > 0;) {
    const auto& l = params.layers[li];
    const Activation act = params.activation_of(li);
    const Matrix& pre = cache.pre[li];
    const Matrix& in = cache.post[li];
    for (std::size_t k = 0; k < delta.data.size(); ++k) {
      delta.data[k] *= activate_derivative(act, pre.data[k]);
    }
    if (want_params) {
      auto& g = result.grad.layers[li];
      for (std::size_t n = 0; n < batch; ++n) {
        const double* d = delta.data.data() + n * l.out;
        const double* hin = in.data.data() + n * l.in;
        for (std::size_t o = 0; o < l.out; ++o) {
          g.bias[o] += d[o];
          double* grow = g.weight.data() + o * l.in;
          for (std::size_t i = 0; i < l.in; ++i) grow[i] += d[o] * hin[i];
        }
      }
    }
    if (li == 0 && !want_input) break;
    Matrix prev(batch, l.in);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* d = delta.data.data() + n * l.out;
      double* p = prev.data.data() + n * l.in;
      for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = l.weight.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) p[i] += d[o] * row[i];
      }
    }
    delta = std::move(prev);
  }
  if (want_input) result.input_grad = std::move(delta);
  return result;
}

Vector mlp_jvp(const MlpParams& params, std::span<const double> z, std::span<const double> tangent) {
  require(!params.layers.empty() && z.size() == params.input_dim() &&
              tangent.size() == params.input_dim(),
          ErrorCode::shape, "jvp point/tangent length does not match MLP input width");
  Vector h(z.begin(), z.end());
  Vector t(tangent.begin(), tangent.end());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    const Activation act = params.activation_of(li);
    Vector nh(l.out), nt(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.bias[o];
      double ds = 0.0;
      const double* row = l.weight.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) {
        s += row[i] * h[i];
        ds += row[i] * t[i];
      }
      nh[o] = activate(act, s);
      nt[o] = activate_derivative(act, s) * ds;
    }
    h = std::move(nh);
    t = std::move(nt);
  }
  return t;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::shape, "distance between vectors of unequal length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace mflab
