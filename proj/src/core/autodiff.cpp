#include "mflab/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace mflab::autodiff {

double Var::value() const { return tape_->value(*this); }

Var Tape::variable(double value) {
  values_.push_back(value);
  edge_begin_.push_back(static_cast<std::uint32_t>(edges_.size()));
  return Var(this, static_cast<std::uint32_t>(values_.size() - 1));
}

Var Tape::record(double value, std::span<const Var> parents, std::span<const double> partials) {
  for (std::size_t i = 0; i < parents.size(); ++i) {
    require(parents[i].tape_ == this, ErrorCode::input, "Var belongs to a different tape");
    edges_.push_back({parents[i].index_, partials[i]});
  }
  values_.push_back(value);
  edge_begin_.push_back(static_cast<std::uint32_t>(edges_.size() - parents.size()));
  return Var(this, static_cast<std::uint32_t>(values_.size() - 1));
}

std::vector<double> Tape::gradient(Var output) const {
  std::vector<double> adj(values_.size(), 0.0);
  adj[output.index_] = 1.0;
  for (std::size_t n = output.index_ + 1; n-- > 0;) {
    if (adj[n] == 0.0) continue;
    const std::size_t end = n + 1 < edge_begin_.size() ? edge_begin_[n + 1] : edges_.size();
    for (std::size_t e = edge_begin_[n]; e < end; ++e) {
      adj[edges_[e].parent] += adj[n] * edges_[e].partial;
    }
  }
  return adj;
}

namespace {

Tape& tape_of(Var a) { return *a.tape(); }

Var unary(Var a, double value, double partial) {
  const std::array<Var, 1> p{a};
  const std::array<double, 1> d{partial};
  return tape_of(a).record(value, p, d);
}

Var binary(Var a, Var b, double value, double da, double db) {
  const std::array<Var, 2> p{a, b};
  const std::array<double, 2> d{da, db};
  return tape_of(a).record(value, p, d);
}

}  // namespace

Var operator+(Var a, Var b) { return binary(a, b, a.value() + b.value(), 1.0, 1.0); }
Var operator-(Var a, Var b) { return binary(a, b, a.value() - b.value(), 1.0, -1.0); }
Var operator*(Var a, Var b) { return binary(a, b, a.value() * b.value(), b.value(), a.value()); }
Var operator/(Var a, Var b) {
  const double bv = b.value();
  return binary(a, b, a.value() / bv, 1.0 / bv, -a.value() / (bv * bv));
}
Var operator-(Var a) { return unary(a, -a.value(), -1.0); }
Var operator+(Var a, double c) { return unary(a, a.value() + c, 1.0); }
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return unary(a, a.value() - c, 1.0); }
Var operator-(double c, Var a) { return unary(a, c - a.value(), -1.0); }
Var operator*(Var a, double c) { return unary(a, a.value() * c, c); }
Var operator*(double c, Var a) { return a * c; }

Var exp(Var a) {
  const double e = std::exp(a.value());
  return unary(a, e, e);
}

Var log(Var a) { return unary(a, std::log(a.value()), 1.0 / a.value()); }

Var square(Var a) { return unary(a, a.value() * a.value(), 2.0 * a.value()); }

Var sum(std::span<const Var> xs) {
  require(!xs.empty(), ErrorCode::input, "sum of an empty list");
  double s = 0.0;
  for (auto x : xs) s += x.value();
  const std::vector<double> ones(xs.size(), 1.0);
  return tape_of(xs.front()).record(s, xs, ones);
}

Var logsumexp(std::span<const Var> xs) {
  require(!xs.empty(), ErrorCode::input, "logsumexp of an empty list");
  double m = -std::numeric_limits<double>::infinity();
  for (auto x : xs) m = std::max(m, x.value());
  if (!std::isfinite(m)) {
    const std::vector<double> zeros(xs.size(), 0.0);
    return tape_of(xs.front()).record(m, xs, zeros);
  }
  double s = 0.0;
  for (auto x : xs) s += std::exp(x.value() - m);
  const double lse = m + std::log(s);
  std::vector<double> softmax(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) softmax[i] = std::exp(xs[i].value() - lse);
  return tape_of(xs.front()).record(lse, xs, softmax);
}

LossAndGrad grad_scalar_loss(const MlpParams& params, const LossFn& loss_fn, const Matrix& batch) {
  ForwardCache cache;
  const Matrix out = mlp_forward_batch(params, batch, &cache);

  Tape tape;
  VarMatrix outputs{out.rows, out.cols, {}};
  outputs.data.reserve(out.data.size());
  for (double v : out.data) outputs.data.push_back(tape.variable(v));

  const Var loss = loss_fn(tape, outputs);
  const double value = loss.value();
  if (!std::isfinite(value)) fail(ErrorCode::numeric, "loss is not finite", value);

  LossAndGrad result{value, {}};
  if (loss.tape() != &tape) {
    result.grad = Grad::zeros_like(params);
    return result;
  }
  const auto adj = tape.gradient(loss);
  Matrix d_out(out.rows, out.cols);
  for (std::size_t k = 0; k < outputs.data.size(); ++k) d_out.data[k] = adj[outputs.data[k].index()];
  result.grad = mlp_backward(params, cache, d_out, true, false).grad;
  return result;
}

}  // namespace mflab::autodiff
