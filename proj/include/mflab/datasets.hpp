#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "mflab/matrix.hpp"

namespace mflab {

enum class TargetKind { two_point, von_mises_circle, spiral };

// Ground-truth distribution P* on a known manifold.
//   two_point:        P* = (1-w) delta_{-1} + w delta_{+1}, D=1, d=0
//   von_mises_circle: angle ~ vM(0, kappa) mapped to the radius-r circle, D=2, d=1
//   spiral:           scale * t (cos 2 pi turns t, sin 2 pi turns t), t ~ U(0.1, 1), D=2, d=1
struct TargetSpec {
  TargetKind kind = TargetKind::two_point;
  double weight = 0.7;   // mass at +1
  double kappa = 1.0;
  double radius = 1.0;
  double turns = 1.5;
  double scale = 1.0;

  static TargetSpec two_point(double w);
  static TargetSpec von_mises_circle(double kappa, double radius = 1.0);
  static TargetSpec spiral(double turns, double scale);

  std::size_t ambient_dim() const { return kind == TargetKind::two_point ? 1 : 2; }
  std::size_t intrinsic_dim() const { return kind == TargetKind::two_point ? 0 : 1; }

  void validate() const;
  bool operator==(const TargetSpec&) const = default;
};

std::string_view to_string(TargetKind k) noexcept;
TargetKind parse_target_kind(std::string_view name);

struct Dataset {
  Matrix points;  // N x D
  TargetSpec spec;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.rows; }
  std::size_t dim() const { return points.cols; }
};

Dataset sample_target(const TargetSpec& spec, std::size_t n, std::uint64_t seed);

// Best-Fisher rejection sampler for vM(0, kappa); kappa == 0 is uniform.
template <class Rng>
double sample_von_mises_angle(double kappa, Rng& rng);

// Density of the circle target w.r.t. arc length:
// exp(kappa cos theta) / (2 pi r I0(kappa)).
double target_density_arclength(const TargetSpec& spec, double theta);

// Modified Bessel I0 via the periodic trapezoid rule on (1/pi) int_0^pi exp(k cos t) dt.
double bessel_i0(double kappa, std::size_t nodes = 4096);

// Residual of the manifold's defining equation at x (0 on the manifold).
double manifold_residual(const TargetSpec& spec, std::span<const double> x);

// Euclidean distance from x to the support of spec.
double distance_to_manifold(const TargetSpec& spec, std::span<const double> x);

// CSV with header x1..xD and one point per row.
void write_points_csv(const Matrix& points, const std::filesystem::path& path);
Matrix read_points_csv(const std::filesystem::path& path);

}  // namespace mflab

#include "mflab/detail/von_mises.ipp"
