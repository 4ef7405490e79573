// Acceptance report: one PASS/FAIL line per criterion, tolerances pinned here.
// Exits 1 when any criterion fails unless --report-only is given.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "gradcheck.hpp"
#include "json.hpp"
#include "mflab/checkpoint.hpp"
#include "mflab/experiment.hpp"
#include "mflab/metrics.hpp"
#include "mflab/overfit_lab.hpp"
#include "mflab/twostep.hpp"

using namespace mflab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kLogStdNormalAtZero = -0.91893853320467274;

int evaluated = 0;
int passed = 0;

void verdict(int id, bool ok, const std::string& detail) {
  ++evaluated;
  passed += ok;
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// metric -> pipeline -> seed -> value
using Table = std::map<std::string, std::map<std::string, std::map<std::uint64_t, double>>>;

Table read_ledger(const fs::path& dir) {
  Table t;
  std::ifstream in(dir / "metrics.jsonl");
  for (std::string line; std::getline(in, line);) {
    const json r = json::parse(line);
    if (r.contains("metric")) {
      t[r["metric"].get<std::string>()][r["pipeline"].get<std::string>()][r["seed"].get<std::uint64_t>()] =
          r["value"].get<double>();
    } else {
      note("seed " + std::to_string(r["seed"].get<std::uint64_t>()) + " failed: " + r["error"]["message"].get<std::string>());
    }
  }
  return t;
}

ExperimentConfig bundled(const std::string& name, const std::vector<std::string>& pipelines, const fs::path& out) {
  ExperimentConfig cfg = load_experiment_config(fs::path(MFLAB_SOURCE_DIR) / "configs" / name);
  std::vector<PipelineSpec> keep;
  for (const PipelineSpec& p : cfg.pipelines) {
    if (std::find(pipelines.begin(), pipelines.end(), p.name) != pipelines.end()) keep.push_back(p);
  }
  cfg.pipelines = keep;
  cfg.seeds = {0, 1, 2};
  cfg.output_dir = out;
  fs::remove_all(out);
  return cfg;
}

void criterion1(const fs::path& work) {
  const Stopwatch sw;
  const RunSummary s = execute(Command::run, bundled("two_point_vae_vs_twostep.json", {"vae"}, work / "c1"));
  const double secs = sw.seconds();
  const Table t = read_ledger(work / "c1");
  int deviating = 0;
  std::string masses;
  if (t.count("quantized_mass")) {
    for (const auto& [seed, mass] : t.at("quantized_mass").at("vae")) {
      deviating += std::abs(mass - 0.7) >= 0.10;
      masses += fmt(" %.4f", mass);
    }
  }
  const bool ok = s.failures.empty() && deviating >= 2 && secs < 60.0;
  verdict(1, ok,
          "single-step VAE quantized mass at +1 per seed:" + masses + "; seeds deviating >= 0.10 from 0.7: " +
              std::to_string(deviating) + "/3 (need >= 2); runtime " + fmt("%.1f s", secs) + " (limit 60 s)");
  if (t.count("recon_mse")) {
    std::string r;
    for (const auto& [seed, v] : t.at("recon_mse").at("vae")) r += fmt(" %.4f", v);
    note("VAE reconstruction MSE per seed:" + r);
  }
}

void criterion2(const fs::path& work) {
  const Stopwatch sw;
  const RunSummary s = execute(Command::run, bundled("two_point_vae_vs_twostep.json", {"ae_gmm"}, work / "c2"));
  const double secs = sw.seconds();
  const Table t = read_ledger(work / "c2");
  double mean = 0.0;
  std::string weights;
  std::size_t n = 0;
  if (t.count("component_weight")) {
    for (const auto& [seed, w] : t.at("component_weight").at("ae_gmm")) {
      mean += w;
      ++n;
      weights += fmt(" %.4f", w);
    }
  }
  mean = n ? mean / n : std::numeric_limits<double>::quiet_NaN();
  const bool ok = s.failures.empty() && n == 3 && std::abs(mean - 0.7) <= 0.05 && secs < 60.0;
  verdict(2, ok,
          "AE+GMM heavy-component weight per seed:" + weights + "; mean " + fmt("%.4f", mean) +
              " (need 0.7 +/- 0.05); runtime " + fmt("%.1f s", secs) + " (limit 60 s)");
  if (t.count("quantized_mass")) {
    std::string q;
    for (const auto& [seed, v] : t.at("quantized_mass").at("ae_gmm")) q += fmt(" %.4f", v);
    note("AE+GMM sample quantized mass per seed:" + q);
  }
}

void criterion3() {
  const std::vector<double> sigmas{1e-1, 1e-2, 1e-3};
  Matrix on(1, 1, 1.0), off(1, 1, 0.5);
  const DivergenceProfile p = divergence_profile(TargetSpec::two_point(0.7), sigmas, on, off);
  std::vector<double> on_vals, off_vals;
  for (const ProfileRow& r : p.rows) (r.on_manifold ? on_vals : off_vals).push_back(r.density);
  const bool increasing = on_vals[0] < on_vals[1] && on_vals[1] < on_vals[2];
  const bool big = on_vals[2] > 279.0;
  const bool tiny = off_vals[1] < 1e-50;
  const double weak = weak_convergence_check(TargetSpec::two_point(0.7), 0.01, 0.0);
  const bool ok = increasing && big && tiny && weak < 1e-12;
  verdict(3, ok,
          "on-manifold p_t: " + fmt("%.4g", on_vals[0]) + " < " + fmt("%.4g", on_vals[1]) + " < " +
              fmt("%.4g", on_vals[2]) + " (final > 279); off-manifold p_t at sigma 1e-2: " + fmt("%.3g", off_vals[1]) +
              " (< 1e-50); weak deviation at sigma 0.01: " + fmt("%.3g", weak) + " (< 1e-12)");
}

void criterion4() {
  FunctionDensity normal{1, [](std::span<const double> u) { return kLogStdNormalAtZero - 0.5 * u[0] * u[0]; }};
  auto model = [&](Chart c) {
    TwoStepModel m;
    m.chart = std::move(c);
    m.density = normal;
    m.standardization = Standardization::identity(1);
    m.refresh();
    return m;
  };
  Matrix a(2, 1);
  a(0, 0) = 1.0;
  const TwoStepModel lin = model(LinearChart{a, Vector{0.0, 0.0}});
  const TwoStepModel circ = model(CircleChart{2.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = -3.0 + 6.0 * (i + 0.5) / 100.0;
    const double truth = kLogStdNormalAtZero - 0.5 * t * t;
    const double xl[] = {t, 0.0};
    const double xc[] = {2.0 * std::cos(t), 2.0 * std::sin(t)};
    worst = std::max(worst, std::abs(log_density_on_manifold(lin, xl) - truth));
    worst = std::max(worst, std::abs(log_density_on_manifold(circ, xc) - (truth - std::log(2.0))));
  }
  // Forward mode against central differences on random decoders.
  double fd_gap = 0.0;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t d = 1 + s % 2, D = d + 1 + s % 3;
    GaeModel g;
    g.latent_dim = d;
    g.ambient_dim = D;
    const std::size_t enc[] = {D, 8, d}, dec[] = {d, 8, 8, D};
    const Activation act = s % 2 ? Activation::tanh : Activation::elu;
    g.encoder = make_mlp(enc, act, Activation::identity, 100 + s);
    g.decoder = make_mlp(dec, act, Activation::identity, 200 + s);
    Vector z(d);
    for (double& v : z) v = nd(rng);
    const JacobianReport f = chart_jacobian(g, z, JacobianMode::forward);
    const JacobianReport c = chart_jacobian(g, z, JacobianMode::central_difference);
    for (std::size_t k = 0; k < f.jacobian.data.size(); ++k) {
      fd_gap = std::max(fd_gap, std::abs(f.jacobian.data[k] - c.jacobian.data[k]));
    }
  }
  verdict(4, worst < 1e-6 && fd_gap < 1e-4,
          "analytic charts max |log p error| over 200 grid points: " + fmt("%.3g", worst) +
              " (< 1e-6); forward vs central-difference Jacobian max gap over 20 random decoders: " +
              fmt("%.3g", fd_gap) + " (< 1e-4)");
}

void criterion5(const fs::path& work) {
  const Stopwatch sw;
  const RunSummary s = execute(Command::run, bundled("circle_ae_ebm.json", {"ae_ebm", "ae_gmm"}, work / "c5"));
  const double secs = sw.seconds();
  const Table t = read_ledger(work / "c5");
  constexpr double kThreshold = 0.15;
  constexpr double kUniformBaseline = 0.2227;
  bool ok = secs < 300.0;
  std::string detail;
  for (const char* pipeline : {"ae_gmm", "ae_ebm"}) {
    double best = std::numeric_limits<double>::infinity();
    std::string per_seed;
    if (t.count("circle_tv") && t.at("circle_tv").count(pipeline)) {
      for (const auto& [seed, tv] : t.at("circle_tv").at(pipeline)) {
        best = std::min(best, tv);
        per_seed += fmt(" %.4f", tv);
      }
    }
    const bool pass = best < kThreshold && best < kUniformBaseline;
    ok = ok && pass;
    detail += std::string(pipeline) + " best TV " + fmt("%.4f", best) + (pass ? " ok; " : " too high; ");
    std::string diag;
    if (t.count("sample_tv") && t.at("sample_tv").count(pipeline)) {
      for (const auto& [seed, tv] : t.at("sample_tv").at(pipeline)) diag += fmt(" %.4f", tv);
    }
    std::string off;
    if (t.count("circle_off_manifold_fraction") && t.at("circle_off_manifold_fraction").count(pipeline)) {
      for (const auto& [seed, f] : t.at("circle_off_manifold_fraction").at(pipeline)) off += fmt(" %.3f", f);
    }
    note(std::string(pipeline) + ": density TV per seed" + per_seed + "; sample-angle TV per seed" + diag +
         "; off-manifold grid fraction" + off);
  }
  verdict(5, ok && s.failures.empty(),
          detail + "need best of 3 < 0.15 and < uniform baseline 0.2227 for both; runtime " + fmt("%.1f s", secs) +
              " (limit 300 s)");
  // Same quadrature as the metric, uniform density against the kappa = 1 target.
  TwoStepModel uniform;
  uniform.chart = CircleChart{1.0};
  uniform.density = FunctionDensity{1, [](std::span<const double>) { return -std::log(2 * std::numbers::pi); }};
  uniform.standardization = Standardization::identity(1);
  uniform.refresh();
  note("computed uniform-density TV against kappa = 1: " + fmt("%.4f", density_error_on_circle(uniform, 1.0, 4096).tv));
}

void criterion6() {
  auto mom = [](double m, double v) {
    GaussianMoments g;
    g.mean = {m};
    g.covariance = Matrix(1, 1, v);
    g.count = 2;
    return g;
  };
  const double f0 = frechet_distance_sq(mom(0, 1), mom(0, 1));
  const double f1 = frechet_distance_sq(mom(0, 1), mom(1, 1));
  const double f2 = frechet_distance_sq(mom(0, 4), mom(0, 1));
  const std::vector<double> in{2, 3}, ood{1, 1, 2, 0};
  const double hand = ood_accuracy(in, ood, 1.5);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  double mean = 0.0;
  for (int r = 0; r < 100; ++r) {
    std::vector<double> a(200), b(200), c(200), d(200);
    for (auto* v : {&a, &b, &c, &d}) {
      for (double& x : *v) x = nd(rng);
    }
    mean += ood_accuracy(c, d, fit_decision_stump(a, b).threshold) / 100.0;
  }
  const bool ok = std::abs(f0) < 1e-10 && std::abs(f1 - 1) < 1e-10 && std::abs(f2 - 1) < 1e-10 && hand == 0.875 &&
                  std::abs(mean - 0.5) <= 0.05;
  verdict(6, ok,
          "Frechet cases " + fmt("%.3g", f0) + ", " + fmt("%.12g", f1) + ", " + fmt("%.12g", f2) +
              " (0, 1, 1 to 1e-10); OOD hand case " + fmt("%.6g", hand) + " (0.875); same-distribution mean " +
              fmt("%.4f", mean) + " (0.5 +/- 0.05)");
}

void criterion7() {
  double worst = 0.0, jvp = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = testing::gradient_check(s);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    jvp = std::max(jvp, testing::jvp_gradient_gap(s));
  }
  verdict(7, worst < 1e-4 && jvp < 1e-8,
          "reverse-mode vs central differences max relative error " + fmt("%.3g", worst) + " over " +
              std::to_string(checked) + " partials in 50 draws (< 1e-4); JVP vs gradient gap " + fmt("%.3g", jvp) +
              " (< 1e-8)");
}

void criterion8() {
  ++evaluated;
  std::printf(
      "criterion 8: NOT REPRODUCIBLE AT DESK SCALE  image-dataset FID tables and OOD percentage tables need "
      "image data, Inception features and large deep models; substituted by criteria 1-7\n");
}

}  // namespace

int main(int argc, char** argv) {
  bool report_only = false;
  fs::path work = fs::temp_directory_path() / "mflab_acceptance";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--report-only") == 0) {
      report_only = true;
    } else if (std::strcmp(argv[i], "--work") == 0 && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: mflab_acceptance [--report-only] [--work <dir>]\n");
      return 2;
    }
  }
  fs::create_directories(work);
  const std::pair<int, void (*)(const fs::path&)> runs[] = {
      {1, criterion1},
      {2, criterion2},
      {3, [](const fs::path&) { criterion3(); }},
      {4, [](const fs::path&) { criterion4(); }},
      {5, criterion5},
      {6, [](const fs::path&) { criterion6(); }},
      {7, [](const fs::path&) { criterion7(); }},
      {8, [](const fs::path&) { criterion8(); }},
  };
  for (const auto& [id, fn] : runs) {
    try {
      fn(work);
    } catch (const std::exception& e) {
      verdict(id, false, std::string("error: ") + e.what());
    }
  }
  // Criterion 8 is a statement, not a test; it counts as evaluated but not passed.
  const int testable = evaluated - 1;
  std::printf("acceptance: %d/7 testable criteria passed\n", passed);
  std::printf("acceptance: %d/8 criteria evaluated, all reported\n", evaluated);
  return (passed == testable || report_only) ? 0 : 1;
}
