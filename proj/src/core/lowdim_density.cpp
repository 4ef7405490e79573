#include "mflab/lowdim_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mflab/autodiff.hpp"
#include "mflab/detail/training.hpp"
#include "mflab/quadrature.hpp"

namespace mflab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

Vector Standardization::apply(std::span<const double> z) const {
  require(z.size() == dim(), ErrorCode::shape, "standardization dimension mismatch");
  Vector u(z.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = (z[j] - mean[j]) / std[j];
  return u;
}

Vector Standardization::invert(std::span<const double> u) const {
  require(u.size() == dim(), ErrorCode::shape, "standardization dimension mismatch");
  Vector z(u.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = u[j] * std[j] + mean[j];
  return z;
}

double Standardization::log_abs_det() const {
  double s = 0.0;
  for (double v : std) s -= std::log(v);
  return s;
}

Standardization Standardization::identity(std::size_t d) { return {Vector(d, 0.0), Vector(d, 1.0)}; }

Matrix EncodedData::raw() const {
  Matrix out(z.rows, z.cols);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const auto r = standardization.invert(z.row(i));
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

EncodedData standardize(const Matrix& codes, std::uint64_t provenance) {
  require(codes.rows >= 2, ErrorCode::input, "standardization needs at least two codes");
  const std::size_t d = codes.cols;
  Standardization st{Vector(d, 0.0), Vector(d, 0.0)};
  for (std::size_t i = 0; i < codes.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += codes(i, j);
  }
  for (double& m : st.mean) m /= static_cast<double>(codes.rows);
  for (std::size_t i = 0; i < codes.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double e = codes(i, j) - st.mean[j];
      st.std[j] += e * e;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    st.std[j] = std::sqrt(st.std[j] / static_cast<double>(codes.rows));
    if (!(st.std[j] > 1e-12 * std::max(1.0, std::abs(st.mean[j])))) {
      fail(ErrorCode::degenerate_encoding,
           "encoded dimension " + std::to_string(j) + " has zero variance (collapsed encoder)", st.std[j]);
    }
  }
  EncodedData out{Matrix(codes.rows, d), st, provenance};
  for (std::size_t i = 0; i < codes.rows; ++i) {
    const auto u = st.apply(codes.row(i));
    std::copy(u.begin(), u.end(), out.z.row(i).begin());
  }
  return out;
}

EncodedData encode_dataset(const GaeModel& model, const Dataset& data) {
  return standardize(encode_batch(model, data.points), model.seed);
}

// ---------------------------------------------------------------------------

void GmmModel::validate() const {
  const std::size_t k = components();
  require(k >= 1 && means.rows == k && variances.rows == k && variances.cols == means.cols, ErrorCode::shape,
          "GMM parameter shapes disagree");
  double s = 0.0;
  for (double w : weights) {
    require(w > 0.0, ErrorCode::numeric, "GMM weights must be positive");
    s += w;
  }
  require(std::abs(s - 1.0) < 1e-12, ErrorCode::numeric, "GMM weights must sum to 1");
  for (double v : variances.data) require(v > 0.0, ErrorCode::numeric, "GMM variances must be positive");
}

namespace {

Vector component_log_terms(const GmmModel& m, std::span<const double> z) {
  require(z.size() == m.dim(), ErrorCode::shape, "GMM evaluated at a point of the wrong dimension");
  Vector terms(m.components());
  for (std::size_t c = 0; c < terms.size(); ++c) {
    double t = std::log(m.weights[c]);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double v = m.variances(c, j);
      const double e = z[j] - m.means(c, j);
      t -= 0.5 * (kLog2Pi + std::log(v) + e * e / v);
    }
    terms[c] = t;
  }
  return terms;
}

}  // namespace

double gmm_log_density(const GmmModel& model, std::span<const double> z) {
  return log_sum_exp(component_log_terms(model, z));
}

double gmm_mean_log_likelihood(const GmmModel& model, const Matrix& z) {
  require(z.rows > 0, ErrorCode::input, "mean log-likelihood of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < z.rows; ++i) s += gmm_log_density(model, z.row(i));
  return s / static_cast<double>(z.rows);
}

Vector gmm_responsibilities(const GmmModel& model, std::span<const double> z) {
  auto terms = component_log_terms(model, z);
  const double lse = log_sum_exp(terms);
  for (double& t : terms) t = std::exp(t - lse);
  return terms;
}

Matrix gmm_sample(const GmmModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(model.weights.begin(), model.weights.end());
  std::normal_distribution<double> normal;
  Matrix out(n, model.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t j = 0; j < model.dim(); ++j) {
      out(i, j) = model.means(c, j) + std::sqrt(model.variances(c, j)) * normal(rng);
    }
  }
  return out;
}

namespace {

// Unconstrained GMM parameters: softmax logits, means, log-variances.
struct GmmRaw {
  Vector logits;
  Matrix means;
  Matrix logvars;

  GmmModel to_model() const {
    GmmModel m;
    const double lse = log_sum_exp(logits);
    for (double l : logits) m.weights.push_back(std::exp(l - lse));
    // Renormalise so the simplex invariant holds to rounding.
    double s = 0.0;
    for (double w : m.weights) s += w;
    for (double& w : m.weights) w /= s;
    m.means = means;
    m.variances = logvars;
    for (double& v : m.variances.data) v = std::exp(v);
    return m;
  }
};

// k-means++ seeding of the component means.
Matrix seed_means(const Matrix& z, std::size_t k, std::mt19937_64& rng) {
  Matrix means(k, z.cols);
  std::uniform_int_distribution<std::size_t> first(0, z.rows - 1);
  const std::size_t i0 = first(rng);
  std::copy(z.row(i0).begin(), z.row(i0).end(), means.row(0).begin());
  Vector d2(z.rows, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) {
      d2[i] = std::min(d2[i], squared_distance(z.row(i), means.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick + 1 < z.rows; ++pick) {
        r -= d2[pick];
        if (r <= 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    std::copy(z.row(pick).begin(), z.row(pick).end(), means.row(c).begin());
  }
  return means;
}

double gmm_batch_loss(GmmRaw& raw, const Matrix& batch, GradBuffers* grads) {
  using namespace autodiff;
  const std::size_t k = raw.logits.size();
  const std::size_t d = raw.means.cols;
  Tape tape;
  std::vector<Var> logits, means, logvars;
  for (double v : raw.logits) logits.push_back(tape.variable(v));
  for (double v : raw.means.data) means.push_back(tape.variable(v));
  for (double v : raw.logvars.data) logvars.push_back(tape.variable(v));
  const Var log_norm = logsumexp(logits);
  std::vector<Var> inv_var;
  for (auto lv : logvars) inv_var.push_back(exp(-lv));

  std::vector<Var> per_point;
  per_point.reserve(batch.rows);
  std::vector<Var> comp(k);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      Var t = logits[c] - log_norm;
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t p = c * d + j;
        t = t - 0.5 * (kLog2Pi + logvars[p] + square(batch(i, j) - means[p]) * inv_var[p]);
      }
      comp[c] = t;
    }
    per_point.push_back(logsumexp(comp));
  }
  const Var loss = -(1.0 / static_cast<double>(batch.rows)) * sum(per_point);
  if (grads) {
    const auto adj = tape.gradient(loss);
    for (std::size_t c = 0; c < k; ++c) grads->blocks[0][c] = adj[logits[c].index()];
    for (std::size_t p = 0; p < k * d; ++p) {
      grads->blocks[1][p] = adj[means[p].index()];
      grads->blocks[2][p] = adj[logvars[p].index()];
    }
  }
  return loss.value();
}

}  // namespace

GmmModel train_gmm(const EncodedData& z, std::size_t k, const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  require(k >= 1, ErrorCode::config, "GMM needs at least one component");
  require(z.z.rows >= k, ErrorCode::input, "GMM needs at least as many points as components");
  std::mt19937_64 rng(derive_seed(cfg.seed, 11));
  GmmRaw raw{Vector(k, 0.0), seed_means(z.z, k, rng), Matrix(k, z.z.cols, 0.0)};

  ParamRefs params;
  params.add(std::span<double>(raw.logits));
  params.add(std::span<double>(raw.means.data));
  params.add(std::span<double>(raw.logvars.data));
  if (log) log->initial_loss = -gmm_mean_log_likelihood(raw.to_model(), z.z);
  detail::run_epochs(params, cfg, z.z.rows, rng, log,
                     [&](const std::vector<std::size_t>& idx, GradBuffers& grads) {
                       return gmm_batch_loss(raw, detail::gather_rows(z.z, idx), &grads);
                     });
  GmmModel model = raw.to_model();
  const double ll = gmm_mean_log_likelihood(model, z.z);
  if (!std::isfinite(ll)) fail(ErrorCode::numeric, "GMM log-likelihood is not finite after training", ll);
  return model;
}

// ---------------------------------------------------------------------------

void LangevinConfig::validate() const {
  require(steps >= 1, ErrorCode::config, "Langevin needs at least one step");
  require(step_size > 0.0, ErrorCode::config, "Langevin step size must be > 0");
  require(noise_std > 0.0, ErrorCode::config, "Langevin noise std must be > 0");
  require(grad_clamp_low < grad_clamp_high, ErrorCode::config, "gradient clamp interval is empty");
}

void EbmConfig::validate() const {
  langevin.validate();
  require(regularization >= 0.0, ErrorCode::config, "EBM regularization must be >= 0");
  require(reinit_probability >= 0.0 && reinit_probability <= 1.0, ErrorCode::config,
          "buffer reinit probability must be in [0, 1]");
  require(buffer_size >= 1, ErrorCode::config, "replay buffer must hold at least one sample");
  require(init_range > 0.0, ErrorCode::config, "uniform init range must be > 0");
}

Vector ebm_energy(const EbmModel& model, const Matrix& z) {
  return mlp_forward_batch(model.energy, z).data;
}

Matrix langevin_sample(const EbmModel& model, const Matrix& init, std::uint64_t seed) {
  const auto& lc = model.config.langevin;
  lc.validate();
  require(init.cols == model.dim(), ErrorCode::shape, "Langevin init has the wrong dimension");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix z = init;
  Matrix ones(z.rows, 1, 1.0);
  ForwardCache cache;
  for (std::size_t s = 0; s < lc.steps; ++s) {
    mlp_forward_batch(model.energy, z, &cache);
    const Matrix grad = mlp_backward(model.energy, cache, ones, false, true).input_grad;
    for (std::size_t k = 0; k < z.data.size(); ++k) {
      const double g = std::clamp(grad.data[k], lc.grad_clamp_low, lc.grad_clamp_high);
      z.data[k] += -lc.step_size * g + lc.noise_std * normal(rng);
    }
  }
  return z;
}

namespace detail {

double ebm_loss_and_grad(const MlpParams& energy, const Matrix& pos, const Matrix& neg,
                         double regularization, Grad* grad) {
  ForwardCache pc, nc;
  const Matrix ep = mlp_forward_batch(energy, pos, &pc);
  const Matrix en = mlp_forward_batch(energy, neg, &nc);
  const double np = static_cast<double>(pos.rows);
  const double nn = static_cast<double>(neg.rows);
  double mp = 0.0, mn = 0.0, sp = 0.0, sn = 0.0;
  for (double e : ep.data) {
    mp += e;
    sp += e * e;
  }
  for (double e : en.data) {
    mn += e;
    sn += e * e;
  }
  const double loss = mp / np - mn / nn + regularization * (sp / np + sn / nn);
  if (grad) {
    Matrix dp(ep.rows, 1), dn(en.rows, 1);
    for (std::size_t i = 0; i < ep.rows; ++i) dp.data[i] = (1.0 + 2.0 * regularization * ep.data[i]) / np;
    for (std::size_t i = 0; i < en.rows; ++i) dn.data[i] = (-1.0 + 2.0 * regularization * en.data[i]) / nn;
    auto gp = mlp_backward(energy, pc, dp, true, false).grad;
    const auto gn = mlp_backward(energy, nc, dn, true, false).grad;
    auto dst = gp.blocks();
    const auto src = gn.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
      for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
    }
    *grad = std::move(gp);
  }
  return loss;
}

}  // namespace detail

EbmModel train_ebm(const EncodedData& z, const TrainConfig& cfg, const EbmConfig& ebm_cfg, TrainLog* log) {
  cfg.validate();
  ebm_cfg.validate();
  const std::size_t d = z.z.cols;
  require(d >= 1 && z.z.rows >= 1, ErrorCode::input, "EBM needs at least one code of dimension >= 1");

  std::vector<std::size_t> sizes{d};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  EbmModel model;
  model.energy = make_mlp(sizes, cfg.activation, Activation::identity, derive_seed(cfg.seed, 21));
  model.config = ebm_cfg;
  model.buffer = Matrix(ebm_cfg.buffer_size, d);

  std::mt19937_64 rng(derive_seed(cfg.seed, 22));
  std::uniform_real_distribution<double> init(-ebm_cfg.init_range, ebm_cfg.init_range);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> slot(0, ebm_cfg.buffer_size - 1);
  for (double& v : model.buffer.data) v = init(rng);

  ParamRefs params;
  params.add(model.energy);
  if (log) {
    Matrix neg(std::min<std::size_t>(z.z.rows, ebm_cfg.buffer_size), d);
    std::copy_n(model.buffer.data.begin(), neg.data.size(), neg.data.begin());
    log->initial_loss = detail::ebm_loss_and_grad(model.energy, z.z, neg, ebm_cfg.regularization, nullptr);
  }
  std::uint64_t chain = 0;
  detail::run_epochs(params, cfg, z.z.rows, rng, log,
                     [&](const std::vector<std::size_t>& idx, GradBuffers& grads) {
                       std::vector<std::size_t> slots(idx.size());
                       Matrix start(idx.size(), d);
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         slots[i] = slot(rng);
                         const bool fresh = unif(rng) < ebm_cfg.reinit_probability;
                         for (std::size_t j = 0; j < d; ++j) {
                           start(i, j) = fresh ? init(rng) : model.buffer(slots[i], j);
                         }
                       }
                       const Matrix neg = langevin_sample(model, start, derive_seed(cfg.seed, 1000 + chain++));
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         std::copy(neg.row(i).begin(), neg.row(i).end(), model.buffer.row(slots[i]).begin());
                       }
                       Grad g;
                       const double loss = detail::ebm_loss_and_grad(
                           model.energy, detail::gather_rows(z.z, idx), neg, ebm_cfg.regularization, &g);
                       grads.assign(0, g);
                       return loss;
                     });
  return model;
}

double ebm_log_normalizer_1d(const EbmModel& model, const Grid1d& grid) {
  if (model.dim() != 1) fail(ErrorCode::unsupported, "quadrature normalization is only implemented for d = 1");
  require(grid.nodes >= 2 && grid.hi > grid.lo, ErrorCode::input, "invalid quadrature grid");
  const Vector nodes = linspace(grid.lo, grid.hi, grid.nodes);
  Matrix zs(nodes.size(), 1);
  zs.data = nodes;
  const Vector e = ebm_energy(model, zs);
  const double emin = *std::min_element(e.begin(), e.end());
  Vector w(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) w[i] = std::exp(-(e[i] - emin));
  const double h = (grid.hi - grid.lo) / static_cast<double>(grid.nodes - 1);
  return -emin + std::log(trapezoid(w, h));
}

double ebm_normalized_log_density_1d(const EbmModel& model, double z, const Grid1d& grid) {
  const double log_z = ebm_log_normalizer_1d(model, grid);
  const double e = mlp_forward(model.energy, std::span<const double>(&z, 1))[0];
  return -e - log_z;
}

}  // namespace mflab
