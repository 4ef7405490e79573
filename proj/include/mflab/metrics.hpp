#pragma once

#include <span>

#include "mflab/matrix.hpp"
#include "mflab/twostep.hpp"

namespace mflab {

struct GaussianMoments {
  Vector mean;
  Matrix covariance;  // unbiased (N - 1 divisor)
  std::size_t count = 0;

  void validate() const;
};

GaussianMoments fit_gaussian_moments(const Matrix& samples);

// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
double frechet_distance_sq(const GaussianMoments& a, const GaussianMoments& b);

struct StumpFit {
  double threshold = 0.0;
  double train_accuracy = 0.0;
};

// Threshold maximizing balanced training accuracy, in-distribution on the
// high side. Candidates are midpoints of consecutive sorted pooled values
// (smallest wins ties); the -inf/+inf sentinels are taken only when strictly
// better than every midpoint.
StumpFit fit_decision_stump(std::span<const double> train_in, std::span<const double> train_ood);

// (n_{I>T} + (n_I / n_O)(n_O - n_{O>T})) / (2 n_I), strict comparisons.
double ood_accuracy(std::span<const double> test_in, std::span<const double> test_ood, double threshold);

// Half the L1 distance between two densities tabulated on a uniform grid with spacing h.
double total_variation(std::span<const double> p, std::span<const double> q, double h);

struct CircleDensityError {
  double tv = 0.0;
  double max_abs = 0.0;
  std::size_t off_manifold_points = 0;
  Vector theta;
  Vector model_density;   // renormalized, per radian
  Vector target_density;  // per radian
};

// Compares the model's on-manifold density on an angle grid with the von Mises
// target. Grid points the learned manifold does not pass through (residual
// above tolerance) carry zero model density and are counted.
CircleDensityError density_error_on_circle(const TwoStepModel& model, double kappa, std::size_t grid_size,
                                           double radius = 1.0);

// TV between the histogram of sample angles atan2(x2, x1) on `bins` equal arcs and the
// von Mises bin masses. Measures a sampler whose density is not available in closed form.
double sample_angle_tv(const Matrix& samples, double kappa, std::size_t bins);

}  // namespace mflab
