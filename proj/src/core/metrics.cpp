#include "mflab/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mflab/datasets.hpp"

namespace mflab {

namespace {

constexpr double kPsdTolerance = 1e-10;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  }
  return e;
}

// Symmetric PSD square root; eigenvalues in [-tol, 0) clamp to 0.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdTolerance) fail(ErrorCode::input, "matrix is not positive semi-definite", ev(i));
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void GaussianMoments::validate() const {
  const std::size_t dim = mean.size();
  require(covariance.rows == dim && covariance.cols == dim, ErrorCode::shape, "covariance must be D x D");
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      require(std::abs(covariance(i, j) - covariance(j, i)) <= 1e-12, ErrorCode::input,
              "covariance is not symmetric");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(covariance), Eigen::EigenvaluesOnly);
  if (dim > 0 && es.eigenvalues().minCoeff() < -kPsdTolerance) {
    fail(ErrorCode::input, "covariance is not positive semi-definite", es.eigenvalues().minCoeff());
  }
}

GaussianMoments fit_gaussian_moments(const Matrix& samples) {
  require(samples.rows >= 2, ErrorCode::input, "moment fitting needs at least two samples");
  const std::size_t n = samples.rows;
  const std::size_t dim = samples.cols;
  GaussianMoments g{Vector(dim, 0.0), Matrix(dim, dim), n};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) g.mean[j] += samples(i, j);
  }
  for (double& m : g.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < dim; ++a) {
      const double ea = samples(i, a) - g.mean[a];
      for (std::size_t b = 0; b <= a; ++b) g.covariance(a, b) += ea * (samples(i, b) - g.mean[b]);
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      g.covariance(a, b) /= static_cast<double>(n - 1);
      g.covariance(b, a) = g.covariance(a, b);
    }
  }
  return g;
}

double frechet_distance_sq(const GaussianMoments& a, const GaussianMoments& b) {
  a.validate();
  b.validate();
  require(a.mean.size() == b.mean.size(), ErrorCode::shape, "moment sets have different dimensions");
  const Eigen::MatrixXd s1 = to_eigen(a.covariance);
  const Eigen::MatrixXd s2 = to_eigen(b.covariance);
  const Eigen::MatrixXd r1 = psd_sqrt(s1);
  const Eigen::MatrixXd cross = psd_sqrt(r1 * s2 * r1);
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
  const double d2 = mean_term + s1.trace() + s2.trace() - 2.0 * cross.trace();
  return std::max(d2, 0.0);
}

double ood_accuracy(std::span<const double> test_in, std::span<const double> test_ood, double threshold) {
  require(!test_in.empty() && !test_ood.empty(), ErrorCode::input, "OOD accuracy needs both test sets");
  const auto above = [threshold](std::span<const double> v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [threshold](double x) { return x > threshold; }));
  };
  const double n_i = static_cast<double>(test_in.size());
  const double n_o = static_cast<double>(test_ood.size());
  return (above(test_in) + (n_i / n_o) * (n_o - above(test_ood))) / (2.0 * n_i);
}

StumpFit fit_decision_stump(std::span<const double> train_in, std::span<const double> train_ood) {
  require(!train_in.empty() && !train_ood.empty(), ErrorCode::input, "stump fitting needs both training sets");
  std::vector<double> in(train_in.begin(), train_in.end());
  std::vector<double> ood(train_ood.begin(), train_ood.end());
  std::sort(in.begin(), in.end());
  std::sort(ood.begin(), ood.end());
  std::vector<double> pooled(in);
  pooled.insert(pooled.end(), ood.begin(), ood.end());
  std::sort(pooled.begin(), pooled.end());

  const double n_i = static_cast<double>(in.size());
  const double n_o = static_cast<double>(ood.size());
  const auto accuracy = [&](double t) {
    const double in_above = static_cast<double>(in.end() - std::upper_bound(in.begin(), in.end(), t));
    const double ood_above = static_cast<double>(ood.end() - std::upper_bound(ood.begin(), ood.end(), t));
    return (in_above + (n_i / n_o) * (n_o - ood_above)) / (2.0 * n_i);
  };

  StumpFit best{std::numeric_limits<double>::quiet_NaN(), -1.0};
  for (std::size_t k = 0; k + 1 < pooled.size(); ++k) {
    const double t = 0.5 * (pooled[k] + pooled[k + 1]);
    const double acc = accuracy(t);
    if (acc > best.train_accuracy) best = {t, acc};
  }
  for (double t : {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()}) {
    const double acc = accuracy(t);
    if (acc > best.train_accuracy) best = {t, acc};
  }
  return best;
}

double total_variation(std::span<const double> p, std::span<const double> q, double h) {
  require(p.size() == q.size(), ErrorCode::shape, "densities tabulated on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s * h;
}

CircleDensityError density_error_on_circle(const TwoStepModel& model, double kappa, std::size_t grid_size,
                                           double radius) {
  require(model.ambient_dim() == 2 && model.latent_dim() == 1, ErrorCode::unsupported,
          "circle density error needs a model with D = 2, d = 1");
  require(grid_size >= 8, ErrorCode::input, "angle grid needs at least 8 points");
  const TargetSpec target = TargetSpec::von_mises_circle(kappa, radius);
  const double h = 2.0 * std::numbers::pi / static_cast<double>(grid_size);
  CircleDensityError out;
  out.theta.resize(grid_size);
  out.model_density.assign(grid_size, 0.0);
  out.target_density.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double th = -std::numbers::pi + h * static_cast<double>(i);
    out.theta[i] = th;
    out.target_density[i] = radius * target_density_arclength(target, th);
    const double x[2] = {radius * std::cos(th), radius * std::sin(th)};
    try {
      out.model_density[i] = radius * std::exp(log_density_on_manifold(model, x));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::off_manifold) throw;
      ++out.off_manifold_points;
    }
  }
  // Periodic grid: the rectangle rule is the trapezoid rule here.
  double mass = 0.0;
  for (double q : out.model_density) mass += q * h;
  if (!(mass > 0.0) || !std::isfinite(mass)) fail(ErrorCode::numeric, "model density has no mass on the circle", mass);
  for (double& q : out.model_density) q /= mass;
  out.tv = total_variation(out.model_density, out.target_density, h);
  for (std::size_t i = 0; i < grid_size; ++i) {
    out.max_abs = std::max(out.max_abs, std::abs(out.model_density[i] - out.target_density[i]));
  }
  return out;
}

double sample_angle_tv(const Matrix& samples, double kappa, std::size_t bins) {
  require(samples.cols == 2, ErrorCode::shape, "angle histogram needs 2-D samples");
  require(samples.rows > 0 && bins >= 2, ErrorCode::input, "angle histogram needs samples and at least 2 bins");
  const double two_pi = 2.0 * std::numbers::pi;
  const double width = two_pi / static_cast<double>(bins);
  Vector hist(bins, 0.0);
  for (std::size_t i = 0; i < samples.rows; ++i) {
    const double th = std::atan2(samples(i, 1), samples(i, 0));
    const auto b = std::min(bins - 1, static_cast<std::size_t>((th + std::numbers::pi) / width));
    hist[b] += 1.0 / static_cast<double>(samples.rows);
  }
  const TargetSpec target = TargetSpec::von_mises_circle(kappa);
  constexpr std::size_t kSub = 64;  // midpoint rule inside each bin
  double tv = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    double mass = 0.0;
    for (std::size_t j = 0; j < kSub; ++j) {
      const double th = -std::numbers::pi + width * (static_cast<double>(b) + (static_cast<double>(j) + 0.5) / kSub);
      mass += target_density_arclength(target, th) * width / kSub;
    }
    tv += 0.5 * std::abs(mass - hist[b]);
  }
  return tv;
}

}  // namespace mflab
