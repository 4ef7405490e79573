#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <variant>

#include "mflab/gae.hpp"
#include "mflab/lowdim_density.hpp"

namespace mflab {

// Closed-form charts used as oracles for the change-of-variable machinery.
// G(z) = A z + offset, g(x) = A^+ (x - offset).
struct LinearChart {
  Matrix a;  // D x d, full column rank
  Vector offset;
};

// G(theta) = r (cos theta, sin theta), g(x) = atan2(x2, x1).
struct CircleChart {
  double radius = 1.0;
};

using Chart = std::variant<GaeModel, LinearChart, CircleChart>;

std::size_t chart_latent_dim(const Chart& c);
std::size_t chart_ambient_dim(const Chart& c);
Vector chart_encode(const Chart& c, std::span<const double> x);
Vector chart_decode(const Chart& c, std::span<const double> z);
Vector chart_decode_jvp(const Chart& c, std::span<const double> z, std::span<const double> tangent);

// Log-density supplied as a function (analytic oracles); cannot be sampled.
struct FunctionDensity {
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> log_density;
};

using LatentDensity = std::variant<GmmModel, EbmModel, FunctionDensity>;

enum class JacobianMode { forward, central_difference };

struct TwoStepModel {
  Chart chart;
  LatentDensity density;               // over standardized codes
  Standardization standardization;      // raw code z -> standardized u
  double recon_tolerance = 1e-8;       // max ||G(g(x)) - x|| accepted as on-manifold
  JacobianMode jacobian_mode = JacobianMode::forward;
  double fd_step = 1e-5;
  Grid1d ebm_grid;                      // normalization grid for a 1-d EBM (standardized coords)
  double ebm_log_normalizer = std::numeric_limits<double>::quiet_NaN();  // cached; NaN = recompute

  // Recomputes cached quantities after the density or grid changed.
  void refresh();

  std::size_t latent_dim() const { return chart_latent_dim(chart); }
  std::size_t ambient_dim() const { return chart_ambient_dim(chart); }
  void validate() const;
};

// Tolerance defaults to 3x the autoencoder's training RMSE.
TwoStepModel assemble_two_step(GaeModel gae, LatentDensity density, Standardization st);

struct JacobianReport {
  Matrix jacobian;       // D x d
  double gram_det = 0.0;  // det(J^T J)
  double log_volume = 0.0;  // -0.5 log det(J^T J)
};

// Jacobian of the decoder at raw code z (the true G, not the standardized one).
JacobianReport decoder_jacobian(const TwoStepModel& model, std::span<const double> z);
JacobianReport chart_jacobian(const Chart& chart, std::span<const double> z, JacobianMode mode,
                              double fd_step = 1e-5);

// log p_Z at a raw code: standardized density plus the affine log-Jacobian.
double latent_log_density(const TwoStepModel& model, std::span<const double> z);
// log density over standardized codes.
double standardized_log_density(const TwoStepModel& model, std::span<const double> u);

struct ManifoldDensity {
  Vector z;
  double residual = 0.0;
  double log_pz = 0.0;
  double log_volume = 0.0;
  double log_px = 0.0;
};

// log p_X(x) = log p_Z(g(x)) - 0.5 log det(J^T J) at g(x). Rejects inputs whose
// reconstruction residual exceeds the model tolerance.
ManifoldDensity evaluate_on_manifold(const TwoStepModel& model, std::span<const double> x);
double log_density_on_manifold(const TwoStepModel& model, std::span<const double> x);

// z ~ p_Z, un-standardize, decode.
Matrix sample_two_step(const TwoStepModel& model, std::size_t n, std::uint64_t seed);
Matrix sample_latent(const TwoStepModel& model, std::size_t n, std::uint64_t seed);

// Mean of -log p over standardized codes (cross-entropy part of the latent KL).
double kl_encoded(const TwoStepModel& model, const EncodedData& z_data);

}  // namespace mflab
