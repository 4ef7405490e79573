#include "mflab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mflab {

QuadratureRule gauss_hermite_normal(std::size_t n) {
  require(n >= 1, ErrorCode::input, "quadrature needs at least one node");
  // Jacobi matrix of the monic probabilists' Hermite recurrence:
  // He_{k+1} = x He_k - k He_{k-1}.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
    jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    rule.nodes[i] = es.eigenvalues()(idx);
    const double v0 = es.eigenvectors()(0, idx);
    rule.weights[i] = v0 * v0;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

double trapezoid(std::span<const double> values, double h) {
  if (values.size() < 2) return 0.0;
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * h;
}

Vector linspace(double lo, double hi, std::size_t n) {
  require(n >= 2, ErrorCode::input, "linspace needs at least two points");
  Vector v(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + h * static_cast<double>(i);
  v.back() = hi;
  return v;
}

}  // namespace mflab
