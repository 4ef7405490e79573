#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "mflab/datasets.hpp"

namespace mflab {

// P* smoothed by an isotropic Gaussian of scale sigma: p(x) = int N(x - y; 0, sigma^2 I) dP*(y).
// two_point is an exact two-term mixture; the circle integrates over the angle with the
// periodic trapezoid rule on max(nodes, ceil(8 r / sigma)) nodes.
struct ConvolvedDensity {
  TargetSpec target;
  double sigma = 1.0;
  std::size_t nodes = 4096;

  std::size_t effective_nodes() const;
  void validate() const;
};

double convolved_density(const ConvolvedDensity& cd, std::span<const double> x);
// Log form, finite far into the tails where the density itself underflows.
double convolved_log_density(const ConvolvedDensity& cd, std::span<const double> x);
// Mean of log p over the rows of `points`.
double convolved_mean_log_likelihood(const ConvolvedDensity& cd, const Matrix& points);

struct ProfileRow {
  double sigma = 0.0;
  std::size_t point = 0;  // index into on_points, then off_points
  bool on_manifold = false;
  double log_density = 0.0;
  double density = 0.0;
};

struct DivergenceProfile {
  std::vector<double> sigmas;
  std::vector<ProfileRow> rows;  // sigma-major
  bool on_increasing = true;     // strict, every on-manifold point
  bool off_decreasing = true;    // strict, every off-manifold point
};

// Evaluates p_sigma at each point for a strictly decreasing sigma list. Off points
// must lie at least `min_distance` from the manifold.
DivergenceProfile divergence_profile(const TargetSpec& target, std::span<const double> sigmas,
                                     const Matrix& on_points, const Matrix& off_points,
                                     double min_distance = 1e-2);

void write_profile_csv(const DivergenceProfile& profile, const std::filesystem::path& path);

// Gaussian-smoothed mass left of `split` for a two_point target.
double split_mass(const TargetSpec& target, double sigma, double split);
// |P_sigma((-inf, split]) - (1 - w)|, split strictly between the atoms.
double weak_convergence_check(const TargetSpec& target, double sigma, double split);

using SigmaSchedule = std::function<double(std::size_t)>;
// sigma_t = 1 / sqrt(t), i.e. variance 1/t, for t >= 1.
double default_sigma_of_t(std::size_t t);

// Convolved density of `a` for even t and of `b` for odd t. Both targets must share
// the same support manifold.
double alternating_sequence_density(std::size_t t, std::span<const double> x, const TargetSpec& a,
                                    const TargetSpec& b, const SigmaSchedule& sigma_of_t);
double alternating_split_mass(std::size_t t, const TargetSpec& a, const TargetSpec& b,
                              const SigmaSchedule& sigma_of_t, double split);

}  // namespace mflab
