#include "mflab/overfit_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mflab/csv.hpp"

namespace mflab {

namespace {

double log_normal_1d(double x, double mu, double sigma) {
  const double u = (x - mu) / sigma;
  return -0.5 * u * u - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

void require_two_point(const TargetSpec& t) {
  require(t.kind == TargetKind::two_point, ErrorCode::unsupported, "operation needs a two_point target");
}

void require_same_manifold(const TargetSpec& a, const TargetSpec& b) {
  const bool same = a.kind == b.kind && (a.kind != TargetKind::von_mises_circle || a.radius == b.radius) &&
                    (a.kind != TargetKind::spiral || (a.turns == b.turns && a.scale == b.scale));
  require(same, ErrorCode::input, "alternating targets live on different manifolds");
}

}  // namespace

std::size_t ConvolvedDensity::effective_nodes() const {
  if (target.kind != TargetKind::von_mises_circle) return 0;
  return std::max(nodes, static_cast<std::size_t>(std::ceil(8.0 * target.radius / sigma)));
}

void ConvolvedDensity::validate() const {
  target.validate();
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::input, "sigma must be > 0", sigma);
  require(target.kind != TargetKind::spiral, ErrorCode::unsupported, "convolution of the spiral target is not implemented");
  if (target.kind == TargetKind::von_mises_circle) {
    require(nodes >= 64, ErrorCode::input, "circle convolution needs at least 64 nodes");
  }
}

double convolved_log_density(const ConvolvedDensity& cd, std::span<const double> x) {
  cd.validate();
  require(x.size() == cd.target.ambient_dim(), ErrorCode::shape, "point dimension does not match target");
  const TargetSpec& t = cd.target;
  if (t.kind == TargetKind::two_point) {
    double lp = -INFINITY;
    if (t.weight > 0.0) lp = log_add(lp, std::log(t.weight) + log_normal_1d(x[0], 1.0, cd.sigma));
    if (t.weight < 1.0) lp = log_add(lp, std::log1p(-t.weight) + log_normal_1d(x[0], -1.0, cd.sigma));
    return lp;
  }
  // int vM(theta) N(x - r u(theta); 0, sigma^2 I) dtheta, log-sum-exp over nodes.
  const std::size_t n = cd.effective_nodes();
  const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
  const double log_norm = -std::log(2.0 * std::numbers::pi * bessel_i0(t.kappa)) -
                          2.0 * std::log(cd.sigma) - std::log(2.0 * std::numbers::pi);
  std::vector<double> terms(n);
  double peak = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = -std::numbers::pi + h * static_cast<double>(i);
    const double dx = x[0] - t.radius * std::cos(th);
    const double dy = x[1] - t.radius * std::sin(th);
    terms[i] = t.kappa * std::cos(th) - 0.5 * (dx * dx + dy * dy) / (cd.sigma * cd.sigma);
    peak = std::max(peak, terms[i]);
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - peak);
  return peak + std::log(s * h) + log_norm;
}

double convolved_density(const ConvolvedDensity& cd, std::span<const double> x) {
  return std::exp(convolved_log_density(cd, x));
}

double convolved_mean_log_likelihood(const ConvolvedDensity& cd, const Matrix& points) {
  require(points.rows > 0, ErrorCode::input, "no points");
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) s += convolved_log_density(cd, points.row(i));
  return s / static_cast<double>(points.rows);
}

DivergenceProfile divergence_profile(const TargetSpec& target, std::span<const double> sigmas,
                                     const Matrix& on_points, const Matrix& off_points, double min_distance) {
  require(!sigmas.empty(), ErrorCode::input, "sigma list is empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) fail(ErrorCode::input, "sigma must be > 0", sigmas[i]);
    if (i > 0 && !(sigmas[i] < sigmas[i - 1])) fail(ErrorCode::input, "sigma list must be strictly decreasing", sigmas[i]);
  }
  require(min_distance > 0.0, ErrorCode::input, "off-manifold margin must be > 0");
  const std::size_t dim = target.ambient_dim();
  require(on_points.rows == 0 || on_points.cols == dim, ErrorCode::shape, "on-manifold points have wrong dimension");
  require(off_points.rows == 0 || off_points.cols == dim, ErrorCode::shape, "off-manifold points have wrong dimension");
  for (std::size_t i = 0; i < off_points.rows; ++i) {
    const double d = distance_to_manifold(target, off_points.row(i));
    if (d < min_distance) fail(ErrorCode::input, "off-manifold point lies on the manifold", d);
  }

  DivergenceProfile out;
  out.sigmas.assign(sigmas.begin(), sigmas.end());
  const std::size_t n_points = on_points.rows + off_points.rows;
  std::vector<double> previous(n_points, 0.0);
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const ConvolvedDensity cd{target, sigmas[s]};
    for (std::size_t p = 0; p < n_points; ++p) {
      const bool on = p < on_points.rows;
      const auto x = on ? on_points.row(p) : off_points.row(p - on_points.rows);
      const double lp = convolved_log_density(cd, x);
      out.rows.push_back({sigmas[s], p, on, lp, std::exp(lp)});
      if (s > 0) {
        if (on && !(lp > previous[p])) out.on_increasing = false;
        if (!on && !(lp < previous[p])) out.off_decreasing = false;
      }
      previous[p] = lp;
    }
  }
  return out;
}

void write_profile_csv(const DivergenceProfile& profile, const std::filesystem::path& path) {
  CsvWriter w(path, {"sigma", "point", "on_manifold", "log_density", "density"});
  for (const ProfileRow& r : profile.rows) {
    w.row({r.sigma, static_cast<double>(r.point), r.on_manifold ? 1.0 : 0.0, r.log_density, r.density});
  }
}

double split_mass(const TargetSpec& target, double sigma, double split) {
  require_two_point(target);
  target.validate();
  if (!(sigma > 0.0)) fail(ErrorCode::input, "sigma must be > 0", sigma);
  return (1.0 - target.weight) * normal_cdf((split + 1.0) / sigma) + target.weight * normal_cdf((split - 1.0) / sigma);
}

double weak_convergence_check(const TargetSpec& target, double sigma, double split) {
  require_two_point(target);
  if (!(split > -1.0 && split < 1.0)) fail(ErrorCode::input, "split point must lie strictly between the atoms", split);
  return std::abs(split_mass(target, sigma, split) - (1.0 - target.weight));
}

double default_sigma_of_t(std::size_t t) {
  require(t >= 1, ErrorCode::input, "sequence index starts at 1");
  return 1.0 / std::sqrt(static_cast<double>(t));
}

double alternating_sequence_density(std::size_t t, std::span<const double> x, const TargetSpec& a,
                                    const TargetSpec& b, const SigmaSchedule& sigma_of_t) {
  require_same_manifold(a, b);
  return convolved_density({t % 2 == 0 ? a : b, sigma_of_t(t)}, x);
}

double alternating_split_mass(std::size_t t, const TargetSpec& a, const TargetSpec& b,
                              const SigmaSchedule& sigma_of_t, double split) {
  require_same_manifold(a, b);
  return split_mass(t % 2 == 0 ? a : b, sigma_of_t(t), split);
}

}  // namespace mflab
