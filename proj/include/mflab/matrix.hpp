#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mflab/error.hpp"

namespace mflab {

using Vector = std::vector<double>;

// Dense row-major matrix; rows are samples throughout the library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  static Matrix from_rows(const std::vector<Vector>& rows);

  bool operator==(const Matrix&) const = default;
};

inline Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    require(r.size() == m.cols, ErrorCode::shape, "ragged rows in Matrix::from_rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

double squared_distance(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace mflab
