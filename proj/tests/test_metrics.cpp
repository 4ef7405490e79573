#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mflab/metrics.hpp"

using namespace mflab;
using doctest::Approx;

namespace {

GaussianMoments moments_1d(double mean, double var) {
  GaussianMoments m;
  m.mean = {mean};
  m.covariance = Matrix(1, 1, var);
  m.count = 10;
  return m;
}

TwoStepModel circle_model(std::function<double(std::span<const double>)> log_pz) {
  TwoStepModel m;
  m.chart = CircleChart{1.0};
  m.density = FunctionDensity{1, std::move(log_pz)};
  m.standardization = Standardization::identity(1);
  m.refresh();
  return m;
}

}  // namespace

TEST_CASE("Gaussian moments") {
  const GaussianMoments m = fit_gaussian_moments(Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}}));
  CHECK(m.mean == Vector{1.0, 0.0});
  CHECK(m.covariance(0, 0) == 2.0);
  CHECK(m.covariance(0, 1) == 0.0);
  CHECK(m.covariance(1, 1) == 0.0);
  CHECK(m.count == 2);

  const GaussianMoments same = fit_gaussian_moments(Matrix::from_rows({{1.5, -2.0}, {1.5, -2.0}, {1.5, -2.0}}));
  for (double v : same.covariance.data) CHECK(v == 0.0);

  const Matrix a = Matrix::from_rows({{0.1, 2.0}, {1.0, -1.0}, {3.0, 0.5}, {-2.0, 0.0}});
  const Matrix b = Matrix::from_rows({{-2.0, 0.0}, {3.0, 0.5}, {0.1, 2.0}, {1.0, -1.0}});
  const GaussianMoments ma = fit_gaussian_moments(a), mb = fit_gaussian_moments(b);
  for (std::size_t k = 0; k < 4; ++k) CHECK(ma.covariance.data[k] == Approx(mb.covariance.data[k]).epsilon(1e-14));

  try {
    fit_gaussian_moments(Matrix(1, 2));
    FAIL("expected input error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::input);
  }
}

TEST_CASE("Frechet distance examples") {
  CHECK(frechet_distance_sq(moments_1d(0, 1), moments_1d(0, 1)) == Approx(0.0).epsilon(1e-14));
  CHECK(frechet_distance_sq(moments_1d(0, 1), moments_1d(1, 1)) == Approx(1.0).epsilon(1e-12));
  CHECK(frechet_distance_sq(moments_1d(0, 4), moments_1d(0, 1)) == Approx(1.0).epsilon(1e-12));
  CHECK(frechet_distance_sq(moments_1d(0, 1), moments_1d(1e-6, 1)) > 0.0);
  try {
    frechet_distance_sq(moments_1d(0, -1), moments_1d(0, 1));
    FAIL("expected input error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::input);
  }
}

TEST_CASE("Frechet distance is symmetric") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(50, 3), b(50, 3);
    for (double& v : a.data) v = normal(rng);
    for (double& v : b.data) v = 2.0 * normal(rng) + 0.3;
    const GaussianMoments ma = fit_gaussian_moments(a), mb = fit_gaussian_moments(b);
    const double ab = frechet_distance_sq(ma, mb);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - frechet_distance_sq(mb, ma)) < 1e-10);
    CHECK(std::abs(frechet_distance_sq(ma, ma)) < 1e-10);
  }
}

TEST_CASE("decision stump examples") {
  const std::vector<double> in{5, 6}, ood{1, 2};
  const StumpFit s = fit_decision_stump(in, ood);
  CHECK(s.threshold == 3.5);
  CHECK(s.train_accuracy == 1.0);

  const std::vector<double> eq{3, 3}, eq2{3, 3, 3};
  const StumpFit e = fit_decision_stump(eq, eq2);
  CHECK(e.threshold == 3.0);
  CHECK(e.train_accuracy == 0.5);

  const std::vector<double> inv_in{1, 2}, inv_ood{5, 6};
  const StumpFit v = fit_decision_stump(inv_in, inv_ood);
  CHECK(v.train_accuracy == 0.5);
  CHECK(std::isinf(v.threshold));
}

TEST_CASE("OOD accuracy examples") {
  const std::vector<double> in{2, 3}, ood{1, 1, 2, 0};
  CHECK(ood_accuracy(in, ood, 1.5) == 0.875);
  const std::vector<double> sep_in{5, 6, 7}, sep_ood{1, 2};
  CHECK(ood_accuracy(sep_in, sep_ood, 3.0) == 1.0);
  const std::vector<double> flat_in{1, 1}, flat_ood{1, 1, 1};
  CHECK(ood_accuracy(flat_in, flat_ood, 2.0) == 0.5);
}

TEST_CASE("OOD accuracy is in [0, 1] and invariant to increasing transforms") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> in(30), ood(20);
    for (double& v : in) v = normal(rng) + 0.5;
    for (double& v : ood) v = normal(rng);
    const double t = normal(rng);
    const double acc = ood_accuracy(in, ood, t);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    auto f = [](double x) { return std::exp(x) + x * x * x; };
    std::vector<double> fin, food;
    for (double v : in) fin.push_back(f(v));
    for (double v : ood) food.push_back(f(v));
    CHECK(ood_accuracy(fin, food, f(t)) == acc);
  }
}

TEST_CASE("stump plus accuracy on one distribution concentrates at chance") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double mean = 0.0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> tr_in(200), tr_ood(200), te_in(200), te_ood(200);
    for (auto* v : {&tr_in, &tr_ood, &te_in, &te_ood}) {
      for (double& x : *v) x = normal(rng);
    }
    const StumpFit s = fit_decision_stump(tr_in, tr_ood);
    mean += ood_accuracy(te_in, te_ood, s.threshold) / 100.0;
  }
  CHECK(std::abs(mean - 0.5) < 0.05);
}

TEST_CASE("total variation properties") {
  const std::vector<double> p{0.1, 0.4, 0.5}, q{0.3, 0.3, 0.4};
  const double a = total_variation(p, q, 1.0);
  CHECK(a == Approx(0.2).epsilon(1e-14));
  CHECK(a == total_variation(q, p, 1.0));
  CHECK(total_variation(p, p, 1.0) == 0.0);
}

// Half the L1 gap between the kappa = 1 von Mises density and 1/(2 pi),
// by 2e5-node quadrature.
constexpr double kUniformVsKappa1Tv = 0.2887326;

TEST_CASE("uniform model against the kappa = 1 target") {
  const TwoStepModel m = circle_model([](std::span<const double>) { return -std::log(2 * std::numbers::pi); });
  const CircleDensityError err = density_error_on_circle(m, 1.0, 4096);
  CHECK(std::abs(err.tv - kUniformVsKappa1Tv) < 1e-6);
  CHECK(err.off_manifold_points == 0);
}

TEST_CASE("exact pushforward is self-consistent") {
  const double log_i0 = std::log(bessel_i0(1.0));
  const TwoStepModel m = circle_model(
      [=](std::span<const double> z) { return std::cos(z[0]) - std::log(2 * std::numbers::pi) - log_i0; });
  const CircleDensityError err = density_error_on_circle(m, 1.0, 512);
  CHECK(err.tv < 1e-3);
  CHECK(err.max_abs < 1e-3);
}

TEST_CASE("sample angle TV") {
  const Dataset ds = sample_target(TargetSpec::von_mises_circle(1.0), 50000, 3);
  CHECK(sample_angle_tv(ds.points, 1.0, 32) < 0.03);
  const Dataset uni = sample_target(TargetSpec::von_mises_circle(0.0), 50000, 3);
  CHECK(std::abs(sample_angle_tv(uni.points, 1.0, 64) - kUniformVsKappa1Tv) < 0.02);
}
