#include "mflab/datasets.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "mflab/csv.hpp"

namespace mflab {

using std::numbers::pi;

TargetSpec TargetSpec::two_point(double w) {
  TargetSpec s;
  s.kind = TargetKind::two_point;
  s.weight = w;
  return s;
}

TargetSpec TargetSpec::von_mises_circle(double kappa, double radius) {
  TargetSpec s;
  s.kind = TargetKind::von_mises_circle;
  s.kappa = kappa;
  s.radius = radius;
  return s;
}

TargetSpec TargetSpec::spiral(double turns, double scale) {
  TargetSpec s;
  s.kind = TargetKind::spiral;
  s.turns = turns;
  s.scale = scale;
  return s;
}

void TargetSpec::validate() const {
  switch (kind) {
    case TargetKind::two_point:
      // w in {0, 1} is accepted: the degenerate single-atom case is a useful fixture.
      require(weight >= 0.0 && weight <= 1.0, ErrorCode::config, "two_point weight must lie in [0, 1]");
      break;
    case TargetKind::von_mises_circle:
      require(kappa >= 0.0 && std::isfinite(kappa), ErrorCode::config, "kappa must be >= 0");
      require(radius > 0.0 && std::isfinite(radius), ErrorCode::config, "radius must be > 0");
      break;
    case TargetKind::spiral:
      require(turns > 0.0 && scale > 0.0, ErrorCode::config, "spiral turns and scale must be > 0");
      break;
  }
}

std::string_view to_string(TargetKind k) noexcept {
  switch (k) {
    case TargetKind::two_point: return "two_point";
    case TargetKind::von_mises_circle: return "von_mises_circle";
    case TargetKind::spiral: return "spiral";
  }
  return "two_point";
}

TargetKind parse_target_kind(std::string_view name) {
  for (auto k : {TargetKind::two_point, TargetKind::von_mises_circle, TargetKind::spiral}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::config, "unknown target kind '" + std::string(name) + "'");
}

namespace {

std::array<double, 2> spiral_point(const TargetSpec& s, double t) {
  const double a = 2.0 * pi * s.turns * t;
  return {s.scale * t * std::cos(a), s.scale * t * std::sin(a)};
}

}  // namespace

Dataset sample_target(const TargetSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, ErrorCode::config, "sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds{Matrix(n, spec.ambient_dim()), spec, seed};
  for (std::size_t i = 0; i < n; ++i) {
    switch (spec.kind) {
      case TargetKind::two_point:
        ds.points(i, 0) = unif(rng) < spec.weight ? 1.0 : -1.0;
        break;
      case TargetKind::von_mises_circle: {
        const double theta = sample_von_mises_angle(spec.kappa, rng);
        ds.points(i, 0) = spec.radius * std::cos(theta);
        ds.points(i, 1) = spec.radius * std::sin(theta);
        break;
      }
      case TargetKind::spiral: {
        const auto p = spiral_point(spec, 0.1 + 0.9 * unif(rng));
        ds.points(i, 0) = p[0];
        ds.points(i, 1) = p[1];
        break;
      }
    }
  }
  return ds;
}

double bessel_i0(double kappa, std::size_t nodes) {
  // exp(k cos t) is even and 2 pi periodic, so the composite trapezoid rule on
  // [0, pi] converges geometrically.
  const double h = pi / static_cast<double>(nodes);
  double s = 0.5 * (std::exp(kappa) + std::exp(-kappa));
  for (std::size_t j = 1; j < nodes; ++j) s += std::exp(kappa * std::cos(h * static_cast<double>(j)));
  return s * h / pi;
}

double target_density_arclength(const TargetSpec& spec, double theta) {
  if (spec.kind != TargetKind::von_mises_circle) {
    fail(ErrorCode::unsupported, "arc-length density is only defined for the von Mises circle target");
  }
  spec.validate();
  return std::exp(spec.kappa * std::cos(theta)) / (2.0 * pi * spec.radius * bessel_i0(spec.kappa));
}

double manifold_residual(const TargetSpec& spec, std::span<const double> x) {
  require(x.size() == spec.ambient_dim(), ErrorCode::shape, "point dimension does not match target");
  switch (spec.kind) {
    case TargetKind::two_point:
      return distance_to_manifold(spec, x);
    case TargetKind::von_mises_circle:
      return std::abs(x[0] * x[0] + x[1] * x[1] - spec.radius * spec.radius);
    case TargetKind::spiral: {
      const double t = std::hypot(x[0], x[1]) / spec.scale;
      const auto p = spiral_point(spec, t);
      return std::hypot(x[0] - p[0], x[1] - p[1]);
    }
  }
  return 0.0;
}

double distance_to_manifold(const TargetSpec& spec, std::span<const double> x) {
  require(x.size() == spec.ambient_dim(), ErrorCode::shape, "point dimension does not match target");
  switch (spec.kind) {
    case TargetKind::two_point: {
      double d = std::numeric_limits<double>::infinity();
      if (spec.weight > 0.0) d = std::min(d, std::abs(x[0] - 1.0));
      if (spec.weight < 1.0) d = std::min(d, std::abs(x[0] + 1.0));
      return d;
    }
    case TargetKind::von_mises_circle:
      return std::abs(std::hypot(x[0], x[1]) - spec.radius);
    case TargetKind::spiral:
      fail(ErrorCode::unsupported, "distance to the spiral is not implemented");
  }
  return 0.0;
}

void write_points_csv(const Matrix& points, const std::filesystem::path& path) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < points.cols; ++j) header.push_back("x" + std::to_string(j + 1));
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < points.rows; ++i) w.row(points.row(i));
}

Matrix read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, path.string() + " is empty");
  std::size_t cols = 0;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      require(cell == "x" + std::to_string(cols + 1), ErrorCode::io,
              path.string() + ": header must be x1..xD");
      ++cols;
    }
  }
  Matrix m;
  m.cols = cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        m.data.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::io, path.string() + ": bad number '" + cell + "'");
      }
      ++c;
    }
    require(c == cols, ErrorCode::io, path.string() + ": row " + std::to_string(m.rows + 1) +
                                          " has " + std::to_string(c) + " columns");
    ++m.rows;
  }
  return m;
}

}  // namespace mflab
