#pragma once

#include <cstdint>
#include <span>

#include "mflab/datasets.hpp"
#include "mflab/mlp.hpp"
#include "mflab/optim.hpp"
#include "mflab/train_config.hpp"

namespace mflab {

enum class GaeKind { ae, vae };

std::string_view to_string(GaeKind k) noexcept;
GaeKind parse_gae_kind(std::string_view name);

// Encoder g: R^D -> R^d and decoder G: R^d -> R^D. For a VAE, `encoder` and
// `decoder` are the mean heads; the encoder log-variance is a separate network
// and the decoder variance a single learnable scalar stored as its log.
struct GaeModel {
  GaeKind kind = GaeKind::ae;
  MlpParams encoder;
  MlpParams decoder;
  MlpParams encoder_logvar;
  double decoder_logvar = 0.0;
  std::size_t latent_dim = 0;
  std::size_t ambient_dim = 0;
  Activation activation = Activation::elu;
  std::uint64_t seed = 0;
  double train_rmse = 0.0;  // sqrt of the final mean squared reconstruction error

  double decoder_variance() const;
  void validate() const;

  // Single identity layer each way, D == d.
  static GaeModel identity(std::size_t dim);
};

GaeModel train_autoencoder(const Dataset& data, const TrainConfig& cfg, std::size_t latent_dim,
                           TrainLog* log = nullptr);
GaeModel train_vae(const Dataset& data, const TrainConfig& cfg, std::size_t latent_dim,
                   TrainLog* log = nullptr);

Vector encode(const GaeModel& model, std::span<const double> x);
Vector decode(const GaeModel& model, std::span<const double> z);
Matrix encode_batch(const GaeModel& model, const Matrix& x);
Matrix decode_batch(const GaeModel& model, const Matrix& z);

// Mean over points of ||G(g(x)) - x||^2.
double reconstruction_error(const GaeModel& model, const Matrix& points);
inline double reconstruction_error(const GaeModel& model, const Dataset& data) {
  return reconstruction_error(model, data.points);
}

// Monte-Carlo ELBO (mean per datum) with `samples` reparameterised draws each.
double vae_elbo(const GaeModel& model, const Matrix& points, std::size_t samples, std::uint64_t seed);

// Ancestral samples from the full generative model: z ~ N(0, I), x = G(z) + sigma eps.
Matrix sample_vae(const GaeModel& model, std::size_t n, std::uint64_t seed);

// p(x) = int N(x; G(z), sigma^2) N(z; 0, 1) dz by Gauss-Hermite quadrature. D = d = 1 only.
double vae_marginal_density_1d(const GaeModel& model, double x, std::size_t n_quad);

namespace detail {

// Parameter layouts used by the trainers (and by gradient-check tests):
//   ae:  encoder blocks, decoder blocks
//   vae: encoder, encoder_logvar, decoder blocks, then decoder_logvar
ParamRefs trainable_params(GaeModel& model);

double ae_loss_and_grad(const GaeModel& model, const Matrix& batch, GradBuffers* grads);

// -ELBO per datum with the reparameterisation noise `eps` (batch x d) supplied.
double vae_loss_and_grad(const GaeModel& model, const Matrix& batch, const Matrix& eps,
                         GradBuffers* grads);

}  // namespace detail

}  // namespace mflab
