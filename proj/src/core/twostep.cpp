#include "mflab/twostep.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>

namespace mflab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  }
  return e;
}

void check_len(std::span<const double> v, std::size_t n, const char* what) {
  require(v.size() == n, ErrorCode::shape,
          std::string(what) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
}

}  // namespace

std::size_t chart_latent_dim(const Chart& c) {
  return std::visit(overloaded{[](const GaeModel& m) { return m.latent_dim; },
                               [](const LinearChart& l) { return l.a.cols; },
                               [](const CircleChart&) { return std::size_t{1}; }},
                    c);
}

std::size_t chart_ambient_dim(const Chart& c) {
  return std::visit(overloaded{[](const GaeModel& m) { return m.ambient_dim; },
                               [](const LinearChart& l) { return l.a.rows; },
                               [](const CircleChart&) { return std::size_t{2}; }},
                    c);
}

Vector chart_encode(const Chart& c, std::span<const double> x) {
  check_len(x, chart_ambient_dim(c), "point");
  return std::visit(
      overloaded{[&](const GaeModel& m) { return encode(m, x); },
                 [&](const LinearChart& l) {
                   const Eigen::MatrixXd a = to_eigen(l.a);
                   Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
                   for (std::size_t i = 0; i < x.size(); ++i) r(static_cast<Eigen::Index>(i)) = x[i] - l.offset[i];
                   const Eigen::VectorXd z = a.colPivHouseholderQr().solve(r);
                   return Vector(z.data(), z.data() + z.size());
                 },
                 [&](const CircleChart&) { return Vector{std::atan2(x[1], x[0])}; }},
      c);
}

Vector chart_decode(const Chart& c, std::span<const double> z) {
  check_len(z, chart_latent_dim(c), "code");
  return std::visit(overloaded{[&](const GaeModel& m) { return decode(m, z); },
                               [&](const LinearChart& l) {
                                 Vector x = l.offset;
                                 for (std::size_t i = 0; i < l.a.rows; ++i) {
                                   for (std::size_t j = 0; j < l.a.cols; ++j) x[i] += l.a(i, j) * z[j];
                                 }
                                 return x;
                               },
                               [&](const CircleChart& cc) {
                                 return Vector{cc.radius * std::cos(z[0]), cc.radius * std::sin(z[0])};
                               }},
                    c);
}

Vector chart_decode_jvp(const Chart& c, std::span<const double> z, std::span<const double> tangent) {
  check_len(z, chart_latent_dim(c), "code");
  check_len(tangent, chart_latent_dim(c), "tangent");
  return std::visit(overloaded{[&](const GaeModel& m) { return mlp_jvp(m.decoder, z, tangent); },
                               [&](const LinearChart& l) {
                                 Vector t(l.a.rows, 0.0);
                                 for (std::size_t i = 0; i < l.a.rows; ++i) {
                                   for (std::size_t j = 0; j < l.a.cols; ++j) t[i] += l.a(i, j) * tangent[j];
                                 }
                                 return t;
                               },
                               [&](const CircleChart& cc) {
                                 return Vector{-cc.radius * std::sin(z[0]) * tangent[0],
                                               cc.radius * std::cos(z[0]) * tangent[0]};
                               }},
                    c);
}

void TwoStepModel::validate() const {
  const std::size_t d = latent_dim();
  require(standardization.dim() == d, ErrorCode::shape, "standardization dimension differs from latent dimension");
  for (double s : standardization.std) require(s > 0.0, ErrorCode::numeric, "standardization scale must be > 0");
  const std::size_t dd = std::visit(overloaded{[](const GmmModel& g) { return g.dim(); },
                                               [](const EbmModel& e) { return e.dim(); },
                                               [](const FunctionDensity& f) { return f.dim; }},
                                    density);
  require(dd == d, ErrorCode::shape, "latent density dimension differs from the decoder input dimension");
  require(recon_tolerance > 0.0, ErrorCode::config, "reconstruction tolerance must be > 0");
}

void TwoStepModel::refresh() {
  ebm_log_normalizer = std::numeric_limits<double>::quiet_NaN();
  if (const auto* e = std::get_if<EbmModel>(&density); e && e->dim() == 1) {
    ebm_log_normalizer = ebm_log_normalizer_1d(*e, ebm_grid);
  }
}

TwoStepModel assemble_two_step(GaeModel gae, LatentDensity density, Standardization st) {
  TwoStepModel m;
  m.recon_tolerance = std::max(3.0 * gae.train_rmse, 1e-8);
  m.chart = std::move(gae);
  m.density = std::move(density);
  m.standardization = std::move(st);
  m.validate();
  m.refresh();
  return m;
}

JacobianReport chart_jacobian(const Chart& chart, std::span<const double> z, JacobianMode mode, double fd_step) {
  const std::size_t d = chart_latent_dim(chart);
  const std::size_t dim = chart_ambient_dim(chart);
  check_len(z, d, "code");
  JacobianReport rep;
  rep.jacobian = Matrix(dim, d);
  Vector basis(d, 0.0);
  Vector zp(z.begin(), z.end()), zm(z.begin(), z.end());
  for (std::size_t j = 0; j < d; ++j) {
    Vector col;
    if (mode == JacobianMode::forward) {
      basis[j] = 1.0;
      col = chart_decode_jvp(chart, z, basis);
      basis[j] = 0.0;
    } else {
      zp[j] = z[j] + fd_step;
      zm[j] = z[j] - fd_step;
      const Vector hi = chart_decode(chart, zp);
      const Vector lo = chart_decode(chart, zm);
      zp[j] = zm[j] = z[j];
      col.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) col[i] = (hi[i] - lo[i]) / (2.0 * fd_step);
    }
    for (std::size_t i = 0; i < dim; ++i) rep.jacobian(i, j) = col[i];
  }

  const Matrix& jac = rep.jacobian;
  auto gram = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += jac(i, a) * jac(i, b);
    return s;
  };
  if (d == 1) {
    rep.gram_det = gram(0, 0);
  } else if (d == 2) {
    rep.gram_det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
  } else {
    const Eigen::MatrixXd j = to_eigen(jac);
    rep.gram_det = (j.transpose() * j).determinant();
  }
  if (!(rep.gram_det >= 1e-300)) {
    fail(ErrorCode::rank_deficiency, "decoder Jacobian is rank deficient (not an immersion here)", rep.gram_det);
  }
  rep.log_volume = -0.5 * std::log(rep.gram_det);
  return rep;
}

JacobianReport decoder_jacobian(const TwoStepModel& model, std::span<const double> z) {
  return chart_jacobian(model.chart, z, model.jacobian_mode, model.fd_step);
}

double standardized_log_density(const TwoStepModel& model, std::span<const double> u) {
  return std::visit(overloaded{[&](const GmmModel& g) { return gmm_log_density(g, u); },
                               [&](const EbmModel& e) {
                                 if (e.dim() != 1) {
                                   fail(ErrorCode::unsupported,
                                        "EBM density is only normalized for d = 1");
                                 }
                                 if (std::isnan(model.ebm_log_normalizer)) {
                                   return ebm_normalized_log_density_1d(e, u[0], model.ebm_grid);
                                 }
                                 return -mlp_forward(e.energy, u)[0] - model.ebm_log_normalizer;
                               },
                               [&](const FunctionDensity& f) {
                                 check_len(u, f.dim, "code");
                                 return f.log_density(u);
                               }},
                    model.density);
}

double latent_log_density(const TwoStepModel& model, std::span<const double> z) {
  const Vector u = model.standardization.apply(z);
  return standardized_log_density(model, u) + model.standardization.log_abs_det();
}

ManifoldDensity evaluate_on_manifold(const TwoStepModel& model, std::span<const double> x) {
  check_len(x, model.ambient_dim(), "point");
  ManifoldDensity out;
  out.z = chart_encode(model.chart, x);
  const Vector rec = chart_decode(model.chart, out.z);
  out.residual = std::sqrt(squared_distance(rec, x));
  if (!(out.residual <= model.recon_tolerance)) {
    fail(ErrorCode::off_manifold, "point is off the learned manifold (reconstruction residual above tolerance)",
         out.residual);
  }
  out.log_volume = decoder_jacobian(model, out.z).log_volume;
  out.log_pz = latent_log_density(model, out.z);
  out.log_px = out.log_pz + out.log_volume;
  return out;
}

double log_density_on_manifold(const TwoStepModel& model, std::span<const double> x) {
  return evaluate_on_manifold(model, x).log_px;
}

Matrix sample_latent(const TwoStepModel& model, std::size_t n, std::uint64_t seed) {
  Matrix u = std::visit(overloaded{[&](const GmmModel& g) { return gmm_sample(g, n, seed); },
                                   [&](const EbmModel& e) {
                                     require(e.buffer.rows > 0, ErrorCode::input, "EBM replay buffer is empty");
                                     std::mt19937_64 rng(seed);
                                     std::uniform_int_distribution<std::size_t> pick(0, e.buffer.rows - 1);
                                     Matrix init(n, e.dim());
                                     for (std::size_t i = 0; i < n; ++i) {
                                       const auto r = e.buffer.row(pick(rng));
                                       std::copy(r.begin(), r.end(), init.row(i).begin());
                                     }
                                     return langevin_sample(e, init, derive_seed(seed, 1));
                                   },
                                   [&](const FunctionDensity&) -> Matrix {
                                     fail(ErrorCode::unsupported, "function densities cannot be sampled");
                                   }},
                        model.density);
  for (std::size_t i = 0; i < u.rows; ++i) {
    const auto z = model.standardization.invert(u.row(i));
    std::copy(z.begin(), z.end(), u.row(i).begin());
  }
  return u;
}

Matrix sample_two_step(const TwoStepModel& model, std::size_t n, std::uint64_t seed) {
  const Matrix z = sample_latent(model, n, seed);
  if (const auto* gae = std::get_if<GaeModel>(&model.chart)) return decode_batch(*gae, z);
  Matrix x(n, model.ambient_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = chart_decode(model.chart, z.row(i));
    std::copy(r.begin(), r.end(), x.row(i).begin());
  }
  return x;
}

double kl_encoded(const TwoStepModel& model, const EncodedData& z_data) {
  require(z_data.z.rows > 0, ErrorCode::input, "no encoded points");
  if (const auto* e = std::get_if<EbmModel>(&model.density); e && e->dim() != 1) {
    fail(ErrorCode::unsupported, "unnormalized EBM at d > 1 has no cross-entropy");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < z_data.z.rows; ++i) s -= standardized_log_density(model, z_data.z.row(i));
  const double v = s / static_cast<double>(z_data.z.rows);
  if (!std::isfinite(v)) fail(ErrorCode::numeric, "cross-entropy is not finite", v);
  return v;
}

}  // namespace mflab
