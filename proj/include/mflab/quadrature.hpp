#pragma once

#include <functional>
#include <span>

#include "mflab/matrix.hpp"

namespace mflab {

// Nodes/weights for E[f(Z)], Z ~ N(0, 1) (probabilists' Hermite, Golub-Welsch).
// Weights sum to 1.
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};
QuadratureRule gauss_hermite_normal(std::size_t n);

// Composite trapezoid of samples on a uniform grid with spacing h.
double trapezoid(std::span<const double> values, double h);

Vector linspace(double lo, double hi, std::size_t n);

}  // namespace mflab
