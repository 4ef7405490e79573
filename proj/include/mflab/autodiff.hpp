#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mflab/mlp.hpp"

namespace mflab::autodiff {

class Tape;

// Handle to a scalar node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  double value() const;
  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* t, std::uint32_t i) : tape_(t), index_(i) {}
  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

// Wengert list for scalar reverse mode. Nodes are appended in evaluation
// order, so a reverse sweep over the node array is a valid topological order.
class Tape {
 public:
  Var variable(double value);
  Var constant(double value) { return variable(value); }

  // Records a node whose local partials w.r.t. `parents` are `partials`.
  Var record(double value, std::span<const Var> parents, std::span<const double> partials);

  double value(Var v) const { return values_[v.index_]; }
  std::size_t size() const { return values_.size(); }

  // dOutput/dNode for every node on the tape.
  std::vector<double> gradient(Var output) const;

 private:
  struct Edge {
    std::uint32_t parent;
    double partial;
  };
  std::vector<double> values_;
  std::vector<std::uint32_t> edge_begin_;
  std::vector<Edge> edges_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sum(std::span<const Var> xs);
Var logsumexp(std::span<const Var> xs);

// Network outputs for a batch, lifted onto the tape (row-major, rows = samples).
struct VarMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Var> data;
  Var operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

using LossFn = std::function<Var(Tape&, const VarMatrix& outputs)>;

struct LossAndGrad {
  double loss = 0.0;
  Grad grad;
};

// Runs the batch through the network, evaluates `loss_fn` on the tape and
// back-propagates through both. Non-finite loss raises a numeric error.
LossAndGrad grad_scalar_loss(const MlpParams& params, const LossFn& loss_fn, const Matrix& batch);

}  // namespace mflab::autodiff
