#pragma once

#include <cstdint>
#include <span>

#include "mflab/gae.hpp"
#include "mflab/mlp.hpp"
#include "mflab/train_config.hpp"

namespace mflab {

// Per-dimension affine map u = (z - mean) / std.
struct Standardization {
  Vector mean;
  Vector std;

  std::size_t dim() const { return mean.size(); }
  Vector apply(std::span<const double> z) const;
  Vector invert(std::span<const double> u) const;
  // log |det du/dz| = -sum log std
  double log_abs_det() const;

  static Standardization identity(std::size_t d);
};

struct EncodedData {
  Matrix z;  // standardized codes, N x d
  Standardization standardization;
  std::uint64_t gae_seed = 0;  // seed of the autoencoder that produced the codes

  Matrix raw() const;
};

// z_n = g(x_n), standardized per dimension. A zero-variance dimension raises
// degenerate_encoding (collapsed encoder).
EncodedData encode_dataset(const GaeModel& model, const Dataset& data);
EncodedData standardize(const Matrix& codes, std::uint64_t provenance = 0);

// ---------------------------------------------------------------------------
// Gaussian mixture with diagonal covariances.

struct GmmModel {
  Vector weights;     // k
  Matrix means;       // k x d
  Matrix variances;   // k x d

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.cols; }
  void validate() const;
};

GmmModel train_gmm(const EncodedData& z, std::size_t k, const TrainConfig& cfg, TrainLog* log = nullptr);
double gmm_log_density(const GmmModel& model, std::span<const double> z);
double gmm_mean_log_likelihood(const GmmModel& model, const Matrix& z);
// Posterior component probabilities for one point.
Vector gmm_responsibilities(const GmmModel& model, std::span<const double> z);
Matrix gmm_sample(const GmmModel& model, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Energy-based model trained with short-run Langevin negatives and a replay buffer.

struct LangevinConfig {
  std::size_t steps = 60;
  double step_size = 10.0;
  double noise_std = 0.005;
  double grad_clamp_low = -0.03;
  double grad_clamp_high = 0.03;

  void validate() const;
};

struct EbmConfig {
  LangevinConfig langevin;
  double regularization = 0.1;
  double reinit_probability = 0.05;
  std::size_t buffer_size = 8192;
  double init_range = 2.0;  // uniform reinit in [-range, range]^d

  void validate() const;
};

struct EbmModel {
  MlpParams energy;  // R^d -> R
  EbmConfig config;
  Matrix buffer;     // B x d

  std::size_t dim() const { return energy.input_dim(); }
};

EbmModel train_ebm(const EncodedData& z, const TrainConfig& cfg, const EbmConfig& ebm_cfg,
                   TrainLog* log = nullptr);

Vector ebm_energy(const EbmModel& model, const Matrix& z);

// z <- z - step_size * clamp(grad E(z)) + noise_std * xi, for the configured steps.
Matrix langevin_sample(const EbmModel& model, const Matrix& init, std::uint64_t seed);

// Energy normalized by trapezoid quadrature on `grid` (uniform). d = 1 only.
struct Grid1d {
  double lo = -6.0;
  double hi = 6.0;
  std::size_t nodes = 4096;
};
double ebm_log_normalizer_1d(const EbmModel& model, const Grid1d& grid);
double ebm_normalized_log_density_1d(const EbmModel& model, double z, const Grid1d& grid);

namespace detail {

// Contrastive-divergence loss mean E(pos) - mean E(neg) + alpha (mean E(pos)^2 + mean E(neg)^2);
// gradients w.r.t. the energy parameters written into `grad` (may be null).
double ebm_loss_and_grad(const MlpParams& energy, const Matrix& pos, const Matrix& neg,
                         double regularization, Grad* grad);

}  // namespace detail

}  // namespace mflab
