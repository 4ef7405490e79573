#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mflab/metrics.hpp"
#include "mflab/twostep.hpp"

using namespace mflab;
using doctest::Approx;

namespace {

constexpr double kLogStdNormalAtZero = -0.91893853320467274;

FunctionDensity std_normal_1d() {
  return {1, [](std::span<const double> u) { return kLogStdNormalAtZero - 0.5 * u[0] * u[0]; }};
}

TwoStepModel analytic(Chart chart) {
  TwoStepModel m;
  m.chart = std::move(chart);
  m.density = std_normal_1d();
  m.standardization = Standardization::identity(1);
  m.validate();
  m.refresh();
  return m;
}

LinearChart axis_chart() {
  Matrix a(2, 1);
  a(0, 0) = 1.0;
  return {a, Vector{0.0, 0.0}};
}

TrainConfig ae_cfg(std::uint64_t seed, std::size_t batch, std::vector<std::size_t> hidden, Activation act) {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = batch;
  c.learning_rate = 1e-3;
  c.clip_norm = 10.0;
  c.hidden = std::move(hidden);
  c.activation = act;
  c.seed = seed;
  return c;
}

TrainConfig gmm_cfg(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 128;
  c.learning_rate = 1e-2;
  c.seed = seed;
  return c;
}

struct CircleModel {
  Dataset data = sample_target(TargetSpec::von_mises_circle(1.0), 1000, 21);
  EncodedData enc;
  TwoStepModel model;

  // Reference-run fixture: best of 3 autoencoder seeds by training RMSE.
  CircleModel() {
    GaeModel ae;
    for (std::uint64_t s = 0; s < 3; ++s) {
      GaeModel cand = train_autoencoder(data, ae_cfg(s, 8, {20, 20}, Activation::elu), 1);
      if (s == 0 || cand.train_rmse < ae.train_rmse) ae = std::move(cand);
    }
    enc = encode_dataset(ae, data);
    GmmModel g = train_gmm(enc, 4, gmm_cfg(0));
    model = assemble_two_step(std::move(ae), std::move(g), enc.standardization);
  }
};

const CircleModel& circle() {
  static const CircleModel m;
  return m;
}

}  // namespace

TEST_CASE("isometric linear chart") {
  const TwoStepModel m = analytic(axis_chart());
  const double z[] = {0.3};
  const JacobianReport j = decoder_jacobian(m, z);
  CHECK(j.jacobian(0, 0) == 1.0);
  CHECK(j.jacobian(1, 0) == 0.0);
  CHECK(j.gram_det == 1.0);
  CHECK(j.log_volume == 0.0);
  const double origin[] = {0.0, 0.0};
  CHECK(log_density_on_manifold(m, origin) == Approx(kLogStdNormalAtZero).epsilon(1e-12));
}

TEST_CASE("radius-2 circle chart divides by the chart speed") {
  const TwoStepModel m = analytic(CircleChart{2.0});
  const double z[] = {0.7};
  const JacobianReport j = decoder_jacobian(m, z);
  CHECK(j.gram_det == Approx(4.0).epsilon(1e-12));
  CHECK(j.log_volume == Approx(-std::log(2.0)).epsilon(1e-12));
  const double x[] = {2.0, 0.0};
  CHECK(std::exp(log_density_on_manifold(m, x)) == Approx(0.19947).epsilon(1e-4));
}

TEST_CASE("analytic charts match closed-form pushforwards on a grid") {
  const TwoStepModel lin = analytic(axis_chart());
  const TwoStepModel circ = analytic(CircleChart{2.0});
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = -3.0 + 6.0 * (i + 0.5) / 100.0;
    const double truth = kLogStdNormalAtZero - 0.5 * t * t;
    const double xl[] = {t, 0.0};
    CHECK(std::abs(log_density_on_manifold(lin, xl) - truth) < 1e-6);
    const double xc[] = {2.0 * std::cos(t), 2.0 * std::sin(t)};
    CHECK(std::abs(log_density_on_manifold(circ, xc) - (truth - std::log(2.0))) < 1e-6);
  }
}

TEST_CASE("finite-difference and forward-mode Jacobians agree on a trained decoder") {
  const TwoStepModel& m = circle().model;
  for (double z : {-1.5, -0.2, 0.0, 0.9, 1.7}) {
    const double zz[] = {z};
    const JacobianReport fwd = chart_jacobian(m.chart, zz, JacobianMode::forward);
    const JacobianReport fd = chart_jacobian(m.chart, zz, JacobianMode::central_difference);
    for (std::size_t k = 0; k < fwd.jacobian.data.size(); ++k) {
      CHECK(std::abs(fwd.jacobian.data[k] - fd.jacobian.data[k]) < 1e-4);
    }
  }
}

TEST_CASE("a constant decoder is rank deficient") {
  GaeModel g = GaeModel::identity(1);
  g.ambient_dim = 2;
  g.encoder = make_linear(Matrix(1, 2, 0.5), Vector{0.0});
  g.decoder = make_linear(Matrix(2, 1, 0.0), Vector{0.1, 0.2});
  TwoStepModel m = analytic(g);
  const double z[] = {0.0};
  try {
    decoder_jacobian(m, z);
    FAIL("expected rank deficiency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::rank_deficiency);
  }
}

TEST_CASE("off-manifold input reports its residual") {
  const TwoStepModel m = analytic(axis_chart());
  const double x[] = {0.5, 0.75};
  try {
    log_density_on_manifold(m, x);
    FAIL("expected off-manifold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::off_manifold);
    REQUIRE(e.value().has_value());
    CHECK(*e.value() == Approx(0.75).epsilon(1e-12));
  }
}

TEST_CASE("point-mass latent density decodes to a single point") {
  const GaeModel g = GaeModel::identity(1);
  const Standardization st{Vector{2.0}, Vector{3.0}};
  TwoStepModel m = assemble_two_step(g, GmmModel{Vector{1.0}, Matrix(1, 1, 0.0), Matrix(1, 1, 1e-12)}, st);
  const Matrix x = sample_two_step(m, 200, 1);
  for (double v : x.data) CHECK(std::abs(v - 2.0) < 1e-5);
  CHECK(sample_two_step(m, 10, 5) == sample_two_step(m, 10, 5));
}

TEST_CASE("function densities cannot be sampled") {
  CHECK_THROWS_AS(sample_two_step(analytic(axis_chart()), 5, 0), Error);
}

TEST_CASE("trained circle samples stay near the unit circle") {
  const Matrix x = sample_two_step(circle().model, 1000, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) worst = std::max(worst, std::abs(std::hypot(x(i, 0), x(i, 1)) - 1.0));
  MESSAGE("max sample distance to the circle = " << worst);
  CHECK(worst < 0.2);
}

TEST_CASE("trained circle density is close to the von Mises target") {
  const CircleDensityError err = density_error_on_circle(circle().model, 1.0, 512);
  MESSAGE("TV = " << err.tv << ", off-manifold grid points = " << err.off_manifold_points);
  CHECK(err.tv < 0.1);
}

TEST_CASE("trained circle gram determinants are positive at the training codes") {
  const auto& c = circle();
  const Matrix raw = c.enc.raw();
  for (std::size_t i = 0; i < raw.rows; ++i) CHECK(decoder_jacobian(c.model, raw.row(i)).gram_det > 0.0);
}

TEST_CASE("trained circle density integrates to one along the decoded curve") {
  const auto& c = circle();
  const Matrix raw = c.enc.raw();
  const auto [lo_it, hi_it] = std::minmax_element(raw.data.begin(), raw.data.end());
  const double pad = 0.5 * (*hi_it - *lo_it);
  const double lo = *lo_it - pad, hi = *hi_it + pad;
  const std::size_t n = 4000;
  const double h = (hi - lo) / n;
  double mass = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double z[] = {lo + h * i};
    const Vector x = chart_decode(c.model.chart, z);
    const double speed = std::sqrt(decoder_jacobian(c.model, z).gram_det);
    double px = 0.0;
    try {
      px = std::exp(log_density_on_manifold(c.model, x));
    } catch (const Error& e) {
      // Where the decoded curve folds back, x maps to a different code; the
      // density there is p_Z at that code, not at z.
      if (e.code() != ErrorCode::off_manifold) throw;
    }
    mass += ((i == 0 || i == n) ? 0.5 : 1.0) * h * px * speed;
  }
  MESSAGE("mass along the decoded curve = " << mass);
  CHECK(std::abs(mass - 1.0) < 5e-2);
}

TEST_CASE("encoded pushforward samples follow p_Z (chi-square)") {
  const auto& c = circle();
  const std::size_t n = 1000, bins = 20;
  const Matrix x = sample_two_step(c.model, n, 7);
  const Matrix z_model = sample_latent(c.model, 200000, 8);
  std::vector<double> sorted(z_model.data);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (std::size_t b = 1; b < bins; ++b) edges.push_back(sorted[b * sorted.size() / bins]);
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = chart_encode(c.model.chart, x.row(i))[0];
    counts[std::upper_bound(edges.begin(), edges.end(), z) - edges.begin()] += 1.0;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / bins;
  for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
  MESSAGE("chi-square = " << chi2);
  // 19 degrees of freedom, upper 0.1% point.
  CHECK(chi2 < 43.82);
}

TEST_CASE("two-point AE+GMM recovers the 0.7 weight") {
  const Dataset ds = sample_target(TargetSpec::two_point(0.7), 1000, 0);
  GaeModel ae = train_autoencoder(ds, ae_cfg(0, 128, {25}, Activation::relu), 1);
  const EncodedData enc = encode_dataset(ae, ds);
  GmmModel g = train_gmm(enc, 2, gmm_cfg(0));
  const TwoStepModel m = assemble_two_step(std::move(ae), std::move(g), enc.standardization);
  const Matrix x = sample_two_step(m, 5000, 3);
  double plus = 0.0;
  for (double v : x.data) plus += v > 0.0;
  CHECK(std::abs(plus / x.rows - 0.7) < 0.05);
}

TEST_CASE("latent cross-entropy") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix z(20000, 1);
  for (double& v : z.data) v = normal(rng);
  const EncodedData data{z, Standardization::identity(1), 0};
  const TwoStepModel m = analytic(axis_chart());
  CHECK(std::abs(kl_encoded(m, data) - 1.4189385) < 4 * std::sqrt(0.5 / z.rows));

  TrainConfig short_cfg = gmm_cfg(0);
  short_cfg.epochs = 1;
  short_cfg.learning_rate = 1e-9;
  const EncodedData enc = standardize(circle().enc.raw());
  const GaeModel id = GaeModel::identity(1);
  const TwoStepModel init = assemble_two_step(id, train_gmm(enc, 2, short_cfg), enc.standardization);
  const TwoStepModel trained = assemble_two_step(id, train_gmm(enc, 2, gmm_cfg(0)), enc.standardization);
  const double after = kl_encoded(trained, enc);
  CHECK(after <= kl_encoded(init, enc));

  double s = 0.0;
  const auto& g = std::get<GmmModel>(trained.density);
  for (std::size_t i = 0; i < enc.z.rows; ++i) s -= gmm_log_density(g, enc.z.row(i));
  CHECK(std::abs(after - s / enc.z.rows) < 1e-12);
}
