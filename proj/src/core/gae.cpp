#include "mflab/gae.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mflab/detail/training.hpp"
#include "mflab/quadrature.hpp"

namespace mflab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

std::string_view to_string(GaeKind k) noexcept { return k == GaeKind::ae ? "ae" : "vae"; }

GaeKind parse_gae_kind(std::string_view name) {
  if (name == "ae") return GaeKind::ae;
  if (name == "vae") return GaeKind::vae;
  fail(ErrorCode::config, "unknown autoencoder kind '" + std::string(name) + "'");
}

double GaeModel::decoder_variance() const { return std::exp(decoder_logvar); }

void GaeModel::validate() const {
  encoder.validate();
  decoder.validate();
  require(encoder.input_dim() == ambient_dim && encoder.output_dim() == latent_dim, ErrorCode::shape,
          "encoder must map R^D to R^d");
  require(decoder.input_dim() == latent_dim && decoder.output_dim() == ambient_dim, ErrorCode::shape,
          "decoder must map R^d to R^D");
  if (kind == GaeKind::vae) {
    encoder_logvar.validate();
    require(encoder_logvar.input_dim() == ambient_dim && encoder_logvar.output_dim() == latent_dim,
            ErrorCode::shape, "encoder log-variance head must map R^D to R^d");
    require(std::isfinite(decoder_logvar), ErrorCode::numeric, "decoder log-variance is not finite");
  }
}

GaeModel GaeModel::identity(std::size_t dim) {
  Matrix eye(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) eye(i, i) = 1.0;
  GaeModel m;
  m.kind = GaeKind::ae;
  m.encoder = make_linear(eye, Vector(dim, 0.0));
  m.decoder = make_linear(eye, Vector(dim, 0.0));
  m.latent_dim = dim;
  m.ambient_dim = dim;
  m.activation = Activation::identity;
  return m;
}

Vector encode(const GaeModel& model, std::span<const double> x) { return mlp_forward(model.encoder, x); }
Vector decode(const GaeModel& model, std::span<const double> z) { return mlp_forward(model.decoder, z); }
Matrix encode_batch(const GaeModel& model, const Matrix& x) { return mlp_forward_batch(model.encoder, x); }
Matrix decode_batch(const GaeModel& model, const Matrix& z) { return mlp_forward_batch(model.decoder, z); }

double reconstruction_error(const GaeModel& model, const Matrix& points) {
  require(points.rows > 0, ErrorCode::input, "reconstruction error of an empty point set");
  const Matrix rec = decode_batch(model, encode_batch(model, points));
  double s = 0.0;
  for (std::size_t k = 0; k < rec.data.size(); ++k) {
    const double e = rec.data[k] - points.data[k];
    s += e * e;
  }
  return s / static_cast<double>(points.rows);
}

namespace detail {

ParamRefs trainable_params(GaeModel& model) {
  ParamRefs refs;
  refs.add(model.encoder);
  if (model.kind == GaeKind::vae) refs.add(model.encoder_logvar);
  refs.add(model.decoder);
  if (model.kind == GaeKind::vae) refs.add(model.decoder_logvar);
  return refs;
}

double ae_loss_and_grad(const GaeModel& model, const Matrix& batch, GradBuffers* grads) {
  const double inv_n = 1.0 / static_cast<double>(batch.rows);
  ForwardCache enc_cache, dec_cache;
  const Matrix z = mlp_forward_batch(model.encoder, batch, &enc_cache);
  const Matrix rec = mlp_forward_batch(model.decoder, z, &dec_cache);
  Matrix d_rec(rec.rows, rec.cols);
  double loss = 0.0;
  for (std::size_t k = 0; k < rec.data.size(); ++k) {
    const double e = rec.data[k] - batch.data[k];
    loss += e * e;
    d_rec.data[k] = 2.0 * e * inv_n;
  }
  loss *= inv_n;
  if (grads) {
    auto dec = mlp_backward(model.decoder, dec_cache, d_rec, true, true);
    auto enc = mlp_backward(model.encoder, enc_cache, dec.input_grad, true, false);
    grads->assign(0, enc.grad);
    grads->assign(enc.grad.layers.size() * 2, dec.grad);
  }
  return loss;
}

double vae_loss_and_grad(const GaeModel& model, const Matrix& batch, const Matrix& eps,
                         GradBuffers* grads) {
  const std::size_t n = batch.rows;
  const std::size_t d = model.latent_dim;
  const double dim_x = static_cast<double>(model.ambient_dim);
  require(eps.rows == n && eps.cols == d, ErrorCode::shape, "noise shape must be batch x d");
  const double inv_n = 1.0 / static_cast<double>(n);

  ForwardCache mu_cache, lv_cache, dec_cache;
  const Matrix mu = mlp_forward_batch(model.encoder, batch, &mu_cache);
  const Matrix lv = mlp_forward_batch(model.encoder_logvar, batch, &lv_cache);
  Matrix z(n, d);
  for (std::size_t k = 0; k < z.data.size(); ++k) z.data[k] = mu.data[k] + std::exp(0.5 * lv.data[k]) * eps.data[k];
  const Matrix mean = mlp_forward_batch(model.decoder, z, &dec_cache);

  const double dec_lv = model.decoder_logvar;
  const double inv_var = std::exp(-dec_lv);
  double sq = 0.0;
  Matrix d_mean(mean.rows, mean.cols);
  for (std::size_t k = 0; k < mean.data.size(); ++k) {
    const double e = batch.data[k] - mean.data[k];
    sq += e * e;
    d_mean.data[k] = -e * inv_var * inv_n;
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < mu.data.size(); ++k) {
    kl += 0.5 * (mu.data[k] * mu.data[k] + std::exp(lv.data[k]) - lv.data[k] - 1.0);
  }
  const double loss = inv_n * (0.5 * sq * inv_var + kl) + 0.5 * dim_x * (dec_lv + kLog2Pi);

  if (grads) {
    auto dec = mlp_backward(model.decoder, dec_cache, d_mean, true, true);
    Matrix d_mu(n, d), d_lv(n, d);
    for (std::size_t k = 0; k < z.data.size(); ++k) {
      const double dz = dec.input_grad.data[k];
      const double s = std::exp(0.5 * lv.data[k]);
      d_mu.data[k] = dz + mu.data[k] * inv_n;
      d_lv.data[k] = dz * 0.5 * s * eps.data[k] + 0.5 * (std::exp(lv.data[k]) - 1.0) * inv_n;
    }
    auto g_mu = mlp_backward(model.encoder, mu_cache, d_mu, true, false);
    auto g_lv = mlp_backward(model.encoder_logvar, lv_cache, d_lv, true, false);
    std::size_t block = 0;
    grads->assign(block, g_mu.grad);
    block += g_mu.grad.layers.size() * 2;
    grads->assign(block, g_lv.grad);
    block += g_lv.grad.layers.size() * 2;
    grads->assign(block, dec.grad);
    block += dec.grad.layers.size() * 2;
    grads->blocks[block][0] = -0.5 * sq * inv_var * inv_n + 0.5 * dim_x;
  }
  return loss;
}

}  // namespace detail

GaeModel train_autoencoder(const Dataset& data, const TrainConfig& cfg, std::size_t latent_dim,
                           TrainLog* log) {
  cfg.validate();
  require(latent_dim >= 1, ErrorCode::config, "latent dimension must be >= 1");
  require(data.size() > 0, ErrorCode::input, "cannot train on an empty dataset");
  const std::size_t dim = data.dim();

  GaeModel model;
  model.kind = GaeKind::ae;
  model.latent_dim = latent_dim;
  model.ambient_dim = dim;
  model.activation = cfg.activation;
  model.seed = cfg.seed;
  const auto enc_w = widths(dim, cfg.hidden, latent_dim);
  const auto dec_w = widths(latent_dim, {cfg.hidden.rbegin(), cfg.hidden.rend()}, dim);
  model.encoder = make_mlp(enc_w, cfg.activation, Activation::identity, derive_seed(cfg.seed, 1));
  model.decoder = make_mlp(dec_w, cfg.activation, Activation::identity, derive_seed(cfg.seed, 2));

  if (log) log->initial_loss = reconstruction_error(model, data.points);
  std::mt19937_64 rng(derive_seed(cfg.seed, 3));
  const ParamRefs params = detail::trainable_params(model);
  detail::run_epochs(params, cfg, data.size(), rng, log,
                     [&](const std::vector<std::size_t>& idx, GradBuffers& grads) {
                       return detail::ae_loss_and_grad(model, detail::gather_rows(data.points, idx), &grads);
                     });
  model.train_rmse = std::sqrt(reconstruction_error(model, data.points));
  return model;
}

GaeModel train_vae(const Dataset& data, const TrainConfig& cfg, std::size_t latent_dim, TrainLog* log) {
  cfg.validate();
  require(latent_dim >= 1, ErrorCode::config, "latent dimension must be >= 1");
  require(data.size() > 0, ErrorCode::input, "cannot train on an empty dataset");
  const std::size_t dim = data.dim();

  GaeModel model;
  model.kind = GaeKind::vae;
  model.latent_dim = latent_dim;
  model.ambient_dim = dim;
  model.activation = cfg.activation;
  model.seed = cfg.seed;
  const auto enc_w = widths(dim, cfg.hidden, latent_dim);
  const auto dec_w = widths(latent_dim, {cfg.hidden.rbegin(), cfg.hidden.rend()}, dim);
  model.encoder = make_mlp(enc_w, cfg.activation, Activation::identity, derive_seed(cfg.seed, 1));
  model.encoder_logvar = make_mlp(enc_w, cfg.activation, Activation::identity, derive_seed(cfg.seed, 4));
  model.decoder = make_mlp(dec_w, cfg.activation, Activation::identity, derive_seed(cfg.seed, 2));
  model.decoder_logvar = 0.0;

  if (log) log->initial_loss = -vae_elbo(model, data.points, 1, derive_seed(cfg.seed, 6));
  std::mt19937_64 rng(derive_seed(cfg.seed, 3));
  std::mt19937_64 noise_rng(derive_seed(cfg.seed, 5));
  std::normal_distribution<double> normal;
  const ParamRefs params = detail::trainable_params(model);
  detail::run_epochs(params, cfg, data.size(), rng, log,
                     [&](const std::vector<std::size_t>& idx, GradBuffers& grads) {
                       Matrix eps(idx.size(), latent_dim);
                       for (double& e : eps.data) e = normal(noise_rng);
                       return detail::vae_loss_and_grad(model, detail::gather_rows(data.points, idx), eps,
                                                        &grads);
                     });
  model.train_rmse = std::sqrt(reconstruction_error(model, data.points));
  return model;
}

double vae_elbo(const GaeModel& model, const Matrix& points, std::size_t samples, std::uint64_t seed) {
  require(model.kind == GaeKind::vae, ErrorCode::unsupported, "ELBO requires a VAE");
  require(samples >= 1 && points.rows > 0, ErrorCode::input, "ELBO needs points and samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Matrix eps(points.rows, model.latent_dim);
    for (double& e : eps.data) e = normal(rng);
    total += -detail::vae_loss_and_grad(model, points, eps, nullptr);
  }
  return total / static_cast<double>(samples);
}

Matrix sample_vae(const GaeModel& model, std::size_t n, std::uint64_t seed) {
  require(model.kind == GaeKind::vae, ErrorCode::unsupported, "sampling requires a VAE");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix z(n, model.latent_dim);
  for (double& v : z.data) v = normal(rng);
  Matrix x = decode_batch(model, z);
  const double sd = std::sqrt(model.decoder_variance());
  for (double& v : x.data) v += sd * normal(rng);
  return x;
}

double vae_marginal_density_1d(const GaeModel& model, double x, std::size_t n_quad) {
  if (model.ambient_dim != 1 || model.latent_dim != 1) {
    fail(ErrorCode::unsupported, "quadrature marginal density requires D = d = 1");
  }
  require(model.kind == GaeKind::vae, ErrorCode::unsupported, "marginal density requires a VAE");
  const auto rule = gauss_hermite_normal(n_quad);
  const double var = model.decoder_variance();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  double p = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double m = mlp_forward(model.decoder, std::span<const double>(&rule.nodes[k], 1))[0];
    p += rule.weights[k] * norm * std::exp(-0.5 * (x - m) * (x - m) / var);
  }
  return p;
}

}  // namespace mflab
