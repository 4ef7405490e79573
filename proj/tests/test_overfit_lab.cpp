#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "mflab/overfit_lab.hpp"

using namespace mflab;
using doctest::Approx;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

Matrix points_1d(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("two-point convolved density at x = 1") {
  const double x[] = {1.0};
  CHECK(std::abs(convolved_density({TargetSpec::two_point(0.7), std::sqrt(0.2)}, x) - 0.62446) < 1e-4);
}

TEST_CASE("two-point convolved density integrates to one and is even for w = 0.5") {
  for (double sigma : {1.0, 0.1, 0.01}) {
    const ConvolvedDensity cd{TargetSpec::two_point(0.7), sigma};
    const double lo = -8.0, hi = 8.0;
    const std::size_t n = 400000;
    const double h = (hi - lo) / n;
    double mass = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double x[] = {lo + h * i};
      mass += ((i == 0 || i == n) ? 0.5 : 1.0) * h * convolved_density(cd, x);
    }
    CHECK(std::abs(mass - 1.0) < 1e-3);
  }
  const ConvolvedDensity sym{TargetSpec::two_point(0.5), 0.3};
  for (double v : {0.1, 0.8, 1.7}) {
    const double a[] = {v}, b[] = {-v};
    CHECK(convolved_density(sym, a) == convolved_density(sym, b));
  }
}

TEST_CASE("uniform circle convolution is rotation invariant") {
  const ConvolvedDensity cd{TargetSpec::von_mises_circle(0.0), 0.1};
  const double e1[] = {1.0, 0.0}, e2[] = {0.0, 1.0};
  CHECK(convolved_density(cd, e1) == Approx(convolved_density(cd, e2)).epsilon(1e-12));
  for (double th : {0.3, 1.1, 2.9}) {
    const double p[] = {0.8 * std::cos(th), 0.8 * std::sin(th)}, q[] = {0.8, 0.0};
    CHECK(convolved_density(cd, p) == Approx(convolved_density(cd, q)).epsilon(1e-12));
  }
}

TEST_CASE("uniform circle convolution integrates to one over [-3, 3]^2") {
  const ConvolvedDensity cd{TargetSpec::von_mises_circle(0.0), 0.1, 256};
  const std::size_t n = 300;
  const double h = 6.0 / n;
  double mass = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      const double w = ((i == 0 || i == n) ? 0.5 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
      const double x[] = {-3.0 + h * i, -3.0 + h * j};
      mass += w * h * h * convolved_density(cd, x);
    }
  }
  CHECK(std::abs(mass - 1.0) < 1e-3);
}

TEST_CASE("node count grows as sigma shrinks") {
  CHECK(ConvolvedDensity{TargetSpec::von_mises_circle(1.0), 1e-1}.effective_nodes() == 4096);
  CHECK(ConvolvedDensity{TargetSpec::von_mises_circle(1.0), 1e-4}.effective_nodes() == 80000);
  CHECK(code_of([] { ConvolvedDensity{TargetSpec::von_mises_circle(1.0), 0.1, 32}.validate(); }) ==
        ErrorCode::input);
  const double x[] = {1.0, 0.0};
  CHECK(code_of([&] { convolved_density({TargetSpec::spiral(1.5, 1.0), 0.1}, x); }) == ErrorCode::unsupported);
}

TEST_CASE("on-manifold density diverges and off-manifold density vanishes") {
  const std::vector<double> sigmas{1e-1, 1e-2, 1e-3};
  const DivergenceProfile p =
      divergence_profile(TargetSpec::two_point(0.7), sigmas, points_1d({1.0}), points_1d({0.5}));
  CHECK(p.on_increasing);
  CHECK(p.off_decreasing);
  std::vector<double> on, off;
  for (const ProfileRow& r : p.rows) (r.on_manifold ? on : off).push_back(r.density);
  REQUIRE(on.size() == 3);
  CHECK(on[0] < on[1]);
  CHECK(on[1] < on[2]);
  CHECK(on[2] > 0.7 / (1e-3 * std::sqrt(2 * std::numbers::pi)) * (1 - 1e-6));
  CHECK(off[1] < 1e-50);
  // The log column stays finite where the density underflows.
  for (const ProfileRow& r : p.rows) CHECK(std::isfinite(r.log_density));
}

TEST_CASE("circle density at an on-manifold point grows by more than 100x") {
  const ConvolvedDensity coarse{TargetSpec::von_mises_circle(1.0), 1e-1};
  const ConvolvedDensity fine{TargetSpec::von_mises_circle(1.0), 1e-3};
  const double x[] = {1.0, 0.0};
  CHECK(convolved_density(fine, x) > 100.0 * convolved_density(coarse, x));
}

TEST_CASE("divergence profile input errors") {
  const Matrix on = points_1d({1.0}), off = points_1d({0.5});
  const std::vector<double> empty, rising{1e-2, 1e-1}, negative{1.0, -1.0};
  for (const auto* s : {&empty, &rising, &negative}) {
    CHECK(code_of([&] { divergence_profile(TargetSpec::two_point(0.7), *s, on, off); }) == ErrorCode::input);
  }
  const std::vector<double> ok{1.0, 0.1};
  CHECK(code_of([&] { divergence_profile(TargetSpec::two_point(0.7), ok, on, points_1d({-1.0})); }) ==
        ErrorCode::input);
  CHECK(code_of([&] { divergence_profile(TargetSpec::two_point(0.7), ok, on, points_1d({0.995})); }) ==
        ErrorCode::input);
}

TEST_CASE("profile CSV has one row per sigma and point") {
  const std::vector<double> sigmas{1.0, 0.1};
  const DivergenceProfile p =
      divergence_profile(TargetSpec::two_point(0.7), sigmas, points_1d({1.0, -1.0}), points_1d({0.0}));
  const auto path = std::filesystem::temp_directory_path() / "mflab_profile.csv";
  write_profile_csv(p, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "sigma,point,on_manifold,log_density,density");
  std::size_t rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 6);
  std::filesystem::remove(path);
}

TEST_CASE("weak convergence deviations") {
  const TargetSpec t = TargetSpec::two_point(0.7);
  CHECK(weak_convergence_check(t, 0.01, 0.0) < 1e-12);
  CHECK(weak_convergence_check(t, 1.0, 0.0) == Approx(0.0635).epsilon(1e-3));
  CHECK(std::abs(weak_convergence_check(t, 1e6, 0.0) - 0.2) < 1e-6);
  double prev = 0.0;
  for (double s : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double d = weak_convergence_check(t, s, 0.0);
    CHECK(d >= prev);
    prev = d;
  }
  CHECK(code_of([&] { weak_convergence_check(t, 0.1, 1.0); }) == ErrorCode::input);
  CHECK(code_of([&] { weak_convergence_check(TargetSpec::von_mises_circle(1.0), 0.1, 0.0); }) ==
        ErrorCode::unsupported);
}

TEST_CASE("alternating sequence does not converge") {
  const TargetSpec a = TargetSpec::two_point(0.3), b = TargetSpec::two_point(0.8);
  for (std::size_t t = 1000; t < 1010; ++t) {
    const double gap = std::abs(alternating_split_mass(t, a, b, default_sigma_of_t, 0.0) -
                                alternating_split_mass(t + 1, a, b, default_sigma_of_t, 0.0));
    CHECK(gap > 0.4);
  }
  double prev = 0.0;
  const double x[] = {1.0};
  for (std::size_t t = 2; t <= 2000; t *= 2) {
    const double p = alternating_sequence_density(t, x, a, b, default_sigma_of_t);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("alternating sequence with equal targets converges") {
  const TargetSpec a = TargetSpec::two_point(0.6);
  double prev_gap = 1.0;
  for (std::size_t t : {1, 10, 100, 10000}) {
    const double gap = std::abs(alternating_split_mass(t, a, a, default_sigma_of_t, 0.0) -
                                alternating_split_mass(t + 1, a, a, default_sigma_of_t, 0.0));
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-12);
  const double x[] = {1.0};
  CHECK(code_of([&] {
          alternating_sequence_density(2, x, a, TargetSpec::von_mises_circle(1.0), default_sigma_of_t);
        }) == ErrorCode::input);
  CHECK(default_sigma_of_t(4) == 0.5);
}

TEST_CASE("wrong-weight likelihood is unbounded as sigma shrinks") {
  const Dataset data = sample_target(TargetSpec::two_point(0.7), 1000, 0);
  double prev = -1e300;
  for (double s : {1.0, 1e-1, 1e-2, 1e-3}) {
    const double ll = convolved_mean_log_likelihood({TargetSpec::two_point(0.8), s}, data.points);
    CHECK(ll > prev);
    prev = ll;
  }
  // The smallest sigma wins on likelihood while the wrong weight stays 0.1 off.
  CHECK(std::abs(split_mass(TargetSpec::two_point(0.8), 1e-3, 0.0) - 0.3) > 0.09);
}
