#include "mflab/experiment.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mflab/checkpoint.hpp"
#include "mflab/csv.hpp"
#include "mflab/metrics.hpp"
#include "mflab/overfit_lab.hpp"
#include "mflab/svg.hpp"
#include "mflab/twostep.hpp"

namespace mflab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream ids for derive_seed; every stage of a seed draws from its own stream.
enum Stream : std::uint64_t { kData = 1, kGae = 10, kDensity = 20, kModelSamples = 30, kReference = 31 };

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

fs::path artifact(const fs::path& dir, const std::string& pipeline, std::uint64_t seed, const std::string& suffix) {
  return dir / (pipeline + "_" + seed_tag(seed) + suffix);
}

Dataset training_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  return sample_target(cfg.target, cfg.n_samples, derive_seed(seed, kData));
}

// A trained pipeline: a VAE (single_vae) or a pushforward model (everything else).
struct Trained {
  bool is_vae = false;
  GaeModel vae;
  TwoStepModel model;
  std::vector<std::pair<std::string, TrainLog>> logs;
};

TwoStepModel identity_chart_model(EbmModel ebm, Standardization st) {
  const std::size_t dim = ebm.dim();
  Matrix a(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) a(i, i) = 1.0;
  TwoStepModel m;
  m.chart = LinearChart{std::move(a), Vector(dim, 0.0)};
  m.density = std::move(ebm);
  m.standardization = std::move(st);
  m.validate();
  m.refresh();
  return m;
}

std::string train_key(const PipelineSpec& p) {
  const TrainConfig& t = p.gae_train;
  std::ostringstream k;
  k << to_string(p.gae) << '|' << p.latent_dim << '|' << t.epochs << '|' << t.batch_size << '|'
    << format_real(t.learning_rate) << '|' << format_real(t.clip_norm) << '|' << to_string(t.activation);
  for (std::size_t h : t.hidden) k << ',' << h;
  return k.str();
}

// Autoencoders shared between pipelines of one seed when their settings agree.
using GaeCache = std::map<std::string, std::pair<GaeModel, TrainLog>>;

Trained train_pipeline(const PipelineSpec& p, const Dataset& data, std::uint64_t seed, GaeCache& cache) {
  Trained out;
  if (p.kind == PipelineKind::single_vae) {
    TrainConfig cfg = p.gae_train;
    cfg.seed = derive_seed(seed, kGae);
    TrainLog log;
    out.is_vae = true;
    out.vae = train_vae(data, cfg, p.latent_dim, &log);
    out.logs.emplace_back("vae", std::move(log));
    return out;
  }
  if (p.kind == PipelineKind::single_ebm) {
    TrainConfig cfg = p.density_train;
    cfg.seed = derive_seed(seed, kDensity);
    const EncodedData st = standardize(data.points, seed);
    TrainLog log;
    EbmModel ebm = train_ebm(st, cfg, p.ebm, &log);
    out.logs.emplace_back("ebm", std::move(log));
    out.model = identity_chart_model(std::move(ebm), st.standardization);
    return out;
  }
  const std::string key = train_key(p);
  auto it = cache.find(key);
  if (it == cache.end()) {
    TrainConfig cfg = p.gae_train;
    cfg.seed = derive_seed(seed, kGae);
    TrainLog log;
    GaeModel g = p.gae == GaeKind::ae ? train_autoencoder(data, cfg, p.latent_dim, &log)
                                      : train_vae(data, cfg, p.latent_dim, &log);
    it = cache.emplace(key, std::make_pair(std::move(g), std::move(log))).first;
  }
  const GaeModel& gae = it->second.first;
  out.logs.emplace_back(std::string(to_string(p.gae)), it->second.second);
  const EncodedData enc = encode_dataset(gae, data);
  TrainConfig dcfg = p.density_train;
  dcfg.seed = derive_seed(seed, kDensity);
  TrainLog dlog;
  if (p.density == DensityKind::gmm) {
    GmmModel gmm = train_gmm(enc, p.components, dcfg, &dlog);
    out.logs.emplace_back("gmm", std::move(dlog));
    out.model = assemble_two_step(gae, std::move(gmm), enc.standardization);
  } else {
    EbmModel ebm = train_ebm(enc, dcfg, p.ebm, &dlog);
    out.logs.emplace_back("ebm", std::move(dlog));
    out.model = assemble_two_step(gae, std::move(ebm), enc.standardization);
  }
  return out;
}

void save_trained(const Trained& t, const fs::path& path) {
  write_text_file(path, t.is_vae ? gae_to_json(t.vae) : two_step_to_json(t.model));
}

Trained load_trained(const PipelineSpec& p, const fs::path& path) {
  Trained t;
  const std::string text = read_text_file(path);
  if (p.kind == PipelineKind::single_vae) {
    t.is_vae = true;
    t.vae = gae_from_json(text);
  } else {
    t.model = two_step_from_json(text);
  }
  return t;
}

void write_losses(const Trained& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << "stage,epoch,loss\n";
  for (const auto& [stage, log] : t.logs) {
    out << stage << ",0," << format_real(log.initial_loss) << '\n';
    for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
      out << stage << ',' << e + 1 << ',' << format_real(log.epoch_loss[e]) << '\n';
    }
  }
}

Matrix draw_samples(const Trained& t, std::size_t n, std::uint64_t seed) {
  return t.is_vae ? sample_vae(t.vae, n, seed) : sample_two_step(t.model, n, seed);
}

// Codes of the training data under the model's own chart and standardization.
EncodedData stored_encoding(const TwoStepModel& m, const Dataset& data) {
  EncodedData e;
  e.standardization = m.standardization;
  e.z = Matrix(data.size(), m.latent_dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector u = m.standardization.apply(chart_encode(m.chart, data.points.row(i)));
    std::copy(u.begin(), u.end(), e.z.row(i).begin());
  }
  return e;
}

void write_circle_profile(const TwoStepModel& m, const ExperimentConfig& cfg, const fs::path& path,
                          const CircleDensityError& err, bool plots) {
  CsvWriter w(path, {"theta", "truth", "model", "p_x", "log_pz", "log_volume", "on_manifold"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Vector raw(err.theta.size(), nan);
  for (std::size_t i = 0; i < err.theta.size(); ++i) {
    const double th = err.theta[i];
    const double x[2] = {cfg.target.radius * std::cos(th), cfg.target.radius * std::sin(th)};
    double log_pz = nan, log_volume = nan, on = 0.0;
    try {
      const ManifoldDensity md = evaluate_on_manifold(m, x);
      raw[i] = cfg.target.radius * std::exp(md.log_px);
      log_pz = md.log_pz;
      log_volume = md.log_volume;
      on = 1.0;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::off_manifold) throw;
    }
    w.row({th, err.target_density[i], err.model_density[i], raw[i], log_pz, log_volume, on});
  }
  if (plots) {
    LinePlot plot{"Density on the circle", "theta", "density per radian",
                  {{"truth", err.theta, err.target_density}, {"model", err.theta, err.model_density}}};
    fs::path svg = path;
    write_svg(plot, svg.replace_extension(".svg"));
  }
}

using Record = json;

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<Record> records;
  std::vector<SeedFailure> failures;
  std::vector<fs::path> files;
};

Record metric_record(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& pipeline,
                     const std::string& metric, double value) {
  return {{"config_hash", cfg.hash}, {"seed", seed}, {"pipeline", pipeline}, {"metric", metric}, {"value", value}};
}

Record error_record(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& pipeline, const char* code,
                    const char* message, std::optional<double> value) {
  Record err{{"code", code}, {"message", message}, {"value", nullptr}};
  if (value) err["value"] = *value;
  return {{"config_hash", cfg.hash}, {"seed", seed}, {"pipeline", pipeline}, {"error", err}};
}

std::vector<std::pair<std::string, double>> evaluate_pipeline(const ExperimentConfig& cfg, const PipelineSpec& p,
                                                              const Trained& t, const Dataset& data,
                                                              std::uint64_t seed, const fs::path& dir, bool plots,
                                                              std::vector<fs::path>& files) {
  std::vector<std::pair<std::string, double>> out;
  const Matrix samples = draw_samples(t, cfg.eval_samples, derive_seed(seed, kModelSamples));
  const fs::path samples_path = artifact(dir, p.name, seed, "_samples.csv");
  write_points_csv(samples, samples_path);
  files.push_back(samples_path);

  const bool has_gae = p.kind != PipelineKind::single_ebm;
  const bool two_step = p.kind == PipelineKind::two_step;
  const bool circle = cfg.target.kind == TargetKind::von_mises_circle;

  for (const std::string& m : cfg.metrics) {
    if (m == "quantized_mass") {
      std::size_t pos = 0;
      for (std::size_t i = 0; i < samples.rows; ++i) pos += samples(i, 0) > 0.0;
      out.emplace_back(m, static_cast<double>(pos) / static_cast<double>(samples.rows));
    } else if (m == "component_weight" && two_step && p.density == DensityKind::gmm) {
      const auto& gmm = std::get<GmmModel>(t.model.density);
      double w = 0.0;
      for (std::size_t k = 0; k < gmm.components(); ++k) {
        const Vector z = t.model.standardization.invert(gmm.means.row(k));
        if (chart_decode(t.model.chart, z)[0] > 0.0) w += gmm.weights[k];
      }
      out.emplace_back(m, w);
    } else if (m == "frechet") {
      const Dataset ref = sample_target(cfg.target, cfg.eval_samples, derive_seed(seed, kReference));
      out.emplace_back(m, frechet_distance_sq(fit_gaussian_moments(samples), fit_gaussian_moments(ref.points)));
    } else if (m == "recon_mse" && has_gae) {
      out.emplace_back(m, t.is_vae ? reconstruction_error(t.vae, data)
                                   : reconstruction_error(std::get<GaeModel>(t.model.chart), data));
    } else if (m == "latent_cross_entropy" && two_step) {
      out.emplace_back(m, kl_encoded(t.model, stored_encoding(t.model, data)));
    } else if (m == "sample_tv" && circle) {
      out.emplace_back(m, sample_angle_tv(samples, cfg.target.kappa, cfg.angle_bins));
    } else if (m == "circle_tv" && circle && two_step && t.model.latent_dim() == 1) {
      const CircleDensityError err = density_error_on_circle(t.model, cfg.target.kappa, cfg.circle_grid, cfg.target.radius);
      out.emplace_back(m, err.tv);
      out.emplace_back("circle_max_abs", err.max_abs);
      out.emplace_back("circle_off_manifold_fraction",
                       static_cast<double>(err.off_manifold_points) / static_cast<double>(cfg.circle_grid));
      const fs::path profile = artifact(dir, p.name, seed, "_circle.csv");
      write_circle_profile(t.model, cfg, profile, err, plots);
      files.push_back(profile);
    }
  }
  if (plots && cfg.target.ambient_dim() == 2) {
    LinePlot plot{p.name + " samples (angle histogram)", "theta", "density per radian", {}};
    const std::size_t bins = cfg.angle_bins;
    Vector centers(bins), hist(bins, 0.0), truth(bins);
    const double width = 2.0 * std::numbers::pi / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) centers[b] = -std::numbers::pi + width * (static_cast<double>(b) + 0.5);
    for (std::size_t i = 0; i < samples.rows; ++i) {
      const double th = std::atan2(samples(i, 1), samples(i, 0));
      hist[std::min(bins - 1, static_cast<std::size_t>((th + std::numbers::pi) / width))] +=
          1.0 / (static_cast<double>(samples.rows) * width);
    }
    plot.series.push_back({"samples", centers, hist});
    if (circle) {
      for (std::size_t b = 0; b < bins; ++b) truth[b] = cfg.target.radius * target_density_arclength(cfg.target, centers[b]);
      plot.series.push_back({"truth", centers, truth});
    }
    const fs::path svg = artifact(dir, p.name, seed, "_samples.svg");
    write_svg(plot, svg);
    files.push_back(svg);
  } else if (plots && cfg.target.ambient_dim() == 1) {
    LinePlot plot{p.name + " samples (histogram)", "x", "density", {}};
    constexpr std::size_t bins = 120;
    constexpr double lo = -3.0, hi = 3.0;
    const double width = (hi - lo) / bins;
    Vector centers(bins), hist(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) centers[b] = lo + width * (static_cast<double>(b) + 0.5);
    for (std::size_t i = 0; i < samples.rows; ++i) {
      const double x = samples(i, 0);
      if (x < lo || x >= hi) continue;
      hist[static_cast<std::size_t>((x - lo) / width)] += 1.0 / (static_cast<double>(samples.rows) * width);
    }
    plot.series.push_back({"samples", centers, hist});
    if (t.is_vae && t.vae.latent_dim == 1) {
      Vector density(bins);
      for (std::size_t b = 0; b < bins; ++b) density[b] = vae_marginal_density_1d(t.vae, centers[b], 64);
      plot.series.push_back({"model density", centers, density});
    }
    const fs::path svg = artifact(dir, p.name, seed, "_samples.svg");
    write_svg(plot, svg);
    files.push_back(svg);
  }
  return out;
}

SeedResult run_seed(Command command, const ExperimentConfig& cfg, std::uint64_t seed, bool plots) {
  SeedResult r;
  r.seed = seed;
  const fs::path& dir = cfg.output_dir;
  std::string current = "data";
  try {
    const Dataset data = training_data(cfg, seed);
    if (command == Command::simulate) {
      const fs::path path = dir / ("data_" + seed_tag(seed) + ".csv");
      write_points_csv(data.points, path);
      r.files.push_back(path);
      return r;
    }
    GaeCache cache;
    for (const PipelineSpec& p : cfg.pipelines) {
      current = p.name;
      const fs::path ckpt = artifact(dir, p.name, seed, ".json");
      Trained t;
      if (command == Command::evaluate) {
        t = load_trained(p, ckpt);
      } else {
        t = train_pipeline(p, data, seed, cache);
        save_trained(t, ckpt);
        const fs::path loss = artifact(dir, p.name, seed, "_loss.csv");
        write_losses(t, loss);
        r.files.push_back(ckpt);
        r.files.push_back(loss);
      }
      if (command == Command::train) continue;
      for (const auto& [metric, value] : evaluate_pipeline(cfg, p, t, data, seed, dir, plots, r.files)) {
        r.records.push_back(metric_record(cfg, seed, p.name, metric, value));
      }
    }
  } catch (const Error& e) {
    r.failures.push_back({seed, current, e.code(), e.what(), e.value()});
    r.records.push_back(error_record(cfg, seed, current, to_string(e.code()), e.what(), e.value()));
  } catch (const std::exception& e) {
    r.failures.push_back({seed, current, ErrorCode::numeric, e.what(), std::nullopt});
    r.records.push_back(error_record(cfg, seed, current, "internal", e.what(), std::nullopt));
  }
  return r;
}

// The ledger: one JSON object per line, appended under an exclusive lock.
class Ledger {
 public:
  explicit Ledger(fs::path path) : path_(std::move(path)) {}

  // Seeds already recorded; refuses a ledger written by a different configuration.
  std::set<std::uint64_t> recorded_seeds(const std::string& hash) const {
    std::set<std::uint64_t> seeds;
    std::ifstream in(path_);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        fail(ErrorCode::io, path_.string() + ":" + std::to_string(n) + ": ledger line is not JSON");
      }
      const std::string h = j.value("config_hash", "");
      if (h != hash) {
        fail(ErrorCode::config, "ledger " + path_.string() + " was written by config " + h + ", current config is " +
                                    hash + "; refusing to resume");
      }
      seeds.insert(j.value("seed", std::uint64_t{0}));
    }
    return seeds;
  }

  void append(const std::vector<Record>& records) const {
    std::string block;
    for (const Record& r : records) block += r.dump() + "\n";
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) fail(ErrorCode::io, "cannot open ledger " + path_.string());
    ::flock(fd, LOCK_EX);
    std::size_t done = 0;
    while (done < block.size()) {
      const ssize_t n = ::write(fd, block.data() + done, block.size() - done);
      if (n <= 0) break;
      done += static_cast<std::size_t>(n);
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (done != block.size()) fail(ErrorCode::io, "short write to ledger " + path_.string());
  }

 private:
  fs::path path_;
};

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::train: return "train";
    case Command::evaluate: return "evaluate";
    case Command::run: return "run";
    case Command::overfit_demo: return "overfit-demo";
  }
  return "?";
}

void run_overfit_demo(const ExperimentConfig& cfg, bool plots, RunSummary& summary) {
  const OverfitConfig o = cfg.overfit ? *cfg.overfit : *default_overfit_config().overfit;
  const fs::path& dir = cfg.output_dir;
  const DivergenceProfile prof = divergence_profile(o.target, o.sigmas, o.on_points, o.off_points, o.min_distance);
  const fs::path prof_path = dir / "overfit_profile.csv";
  write_profile_csv(prof, prof_path);
  summary.files.push_back(prof_path);

  // Mean log-likelihood of target data under the smoothed family, for the target's own
  // weight and for a wrong weight: both grow without bound as sigma shrinks.
  const Dataset data = sample_target(o.target, o.likelihood_samples, derive_seed(cfg.seeds.front(), kData));
  TargetSpec wrong = o.target;
  if (o.target.kind == TargetKind::two_point) wrong.weight = o.likelihood_weight;
  const fs::path ll_path = dir / "overfit_likelihood.csv";
  {
    CsvWriter w(ll_path, {"sigma", "mean_log_lik_target", "mean_log_lik_wrong", "weak_deviation_target",
                          "weak_deviation_wrong"});
    for (double s : o.sigmas) {
      const bool tp = o.target.kind == TargetKind::two_point;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      w.row({s, convolved_mean_log_likelihood({o.target, s}, data.points),
             convolved_mean_log_likelihood({wrong, s}, data.points),
             tp ? weak_convergence_check(o.target, s, o.split) : nan,
             tp ? std::abs(split_mass(wrong, s, o.split) - (1.0 - o.target.weight)) : nan});
    }
  }
  summary.files.push_back(ll_path);

  if (o.target.kind == TargetKind::two_point) {
    const TargetSpec a = TargetSpec::two_point(o.alternating.weight_a);
    const TargetSpec b = TargetSpec::two_point(o.alternating.weight_b);
    const fs::path alt_path = dir / "overfit_alternating.csv";
    CsvWriter w(alt_path, {"t", "sigma", "split_mass", "density_at_plus_one"});
    const double x[1] = {1.0};
    Vector ts, masses;
    for (std::size_t t = 1; t <= o.alternating.t_max; ++t) {
      const double m = alternating_split_mass(t, a, b, default_sigma_of_t, o.split);
      w.row({static_cast<double>(t), default_sigma_of_t(t), m,
             alternating_sequence_density(t, x, a, b, default_sigma_of_t)});
      ts.push_back(static_cast<double>(t));
      masses.push_back(m);
    }
    summary.files.push_back(alt_path);
    if (plots) {
      const fs::path svg = dir / "overfit_alternating.svg";
      write_svg({"Alternating sequence: mass left of the split", "t", "P_t(x <= split)", {{"split mass", ts, masses}}}, svg);
      summary.files.push_back(svg);
    }
  }
  if (plots) {
    LinePlot plot{"Smoothed density versus sigma", "log10 sigma", "log p_sigma(x)", {}};
    const std::size_t n_points = o.on_points.rows + o.off_points.rows;
    for (std::size_t p = 0; p < n_points; ++p) {
      PlotSeries s{(p < o.on_points.rows ? "on " : "off ") + std::to_string(p), {}, {}};
      for (const ProfileRow& r : prof.rows) {
        if (r.point == p) s.x.push_back(std::log10(r.sigma)), s.y.push_back(r.log_density);
      }
      plot.series.push_back(std::move(s));
    }
    const fs::path svg = dir / "overfit_profile.svg";
    write_svg(plot, svg);
    summary.files.push_back(svg);
  }
}

}  // namespace

std::string RunSummary::describe() const {
  std::ostringstream o;
  o << "seeds run: " << seeds_run.size() << ", skipped (already in ledger): " << seeds_skipped.size()
    << ", failed: " << failures.size() << ", files written: " << files.size() << '\n';
  for (const SeedFailure& f : failures) {
    o << "  seed " << f.seed << " [" << f.pipeline << "] " << to_string(f.code) << ": " << f.message << '\n';
  }
  return o.str();
}

RunSummary execute(Command command, const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  if (command == Command::train || command == Command::evaluate || command == Command::run) {
    require(!cfg.pipelines.empty(), ErrorCode::config, "config has no pipelines to " + std::string(command_name(command)));
  }
  const fs::path& dir = cfg.output_dir;
  const Ledger ledger(dir / "metrics.jsonl");
  const bool writes_ledger = command == Command::evaluate || command == Command::run;
  std::set<std::uint64_t> done;
  if (writes_ledger) done = ledger.recorded_seeds(cfg.hash);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());

  RunSummary summary;
  const std::int64_t started = unix_now();
  if (command == Command::overfit_demo) {
    run_overfit_demo(cfg, options.plots, summary);
  } else {
    std::vector<std::uint64_t> todo;
    for (std::uint64_t s : cfg.seeds) {
      if (done.count(s) || std::find(todo.begin(), todo.end(), s) != todo.end()) {
        summary.seeds_skipped.push_back(s);
      } else {
        todo.push_back(s);
      }
    }
    std::vector<SeedResult> results(todo.size());
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next == todo.size()) return;
          i = next++;
        }
        results[i] = run_seed(command, cfg, todo[i], options.plots);
      }
    };
    const std::size_t n_threads = std::min(cfg.threads, std::max<std::size_t>(todo.size(), 1));
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    // Ledger blocks in seed-list order regardless of completion order.
    for (SeedResult& r : results) {
      if (writes_ledger && !r.records.empty()) ledger.append(r.records);
      summary.seeds_run.push_back(r.seed);
      summary.failures.insert(summary.failures.end(), r.failures.begin(), r.failures.end());
      summary.files.insert(summary.files.end(), r.files.begin(), r.files.end());
    }
    if (writes_ledger) summary.files.push_back(dir / "metrics.jsonl");
  }

  json info{{"command", std::string(command_name(command))},
            {"config_name", cfg.name},
            {"config_hash", cfg.hash},
            {"started_unix", started},
            {"finished_unix", unix_now()},
            {"seeds_run", summary.seeds_run},
            {"seeds_skipped", summary.seeds_skipped},
            {"failed", summary.failures.size()}};
  write_text_file(dir / "run_info.json", info.dump(2) + "\n");
  summary.files.push_back(dir / "run_info.json");
  return summary;
}

std::string report(const fs::path& dir) {
  const fs::path path = dir / "metrics.jsonl";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "no ledger at " + path.string());
  struct Agg {
    std::vector<double> values;
  };
  std::map<std::pair<std::string, std::string>, Agg> agg;
  std::vector<std::string> errors;
  std::set<std::string> hashes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      fail(ErrorCode::io, "ledger line is not JSON: " + line);
    }
    hashes.insert(j.value("config_hash", ""));
    if (j.contains("error")) {
      errors.push_back("seed " + std::to_string(j.value("seed", std::uint64_t{0})) + " [" + j.value("pipeline", "") +
                       "] " + j["error"].value("code", "") + ": " + j["error"].value("message", ""));
      continue;
    }
    const double v = j["value"].is_number() ? j["value"].get<double>() : std::numeric_limits<double>::quiet_NaN();
    agg[{j.value("pipeline", ""), j.value("metric", "")}].values.push_back(v);
  }
  std::ostringstream o;
  o << "# Run report\n\n";
  for (const std::string& h : hashes) o << "config hash: " << h << "\n";
  o << "\n| pipeline | metric | seeds | mean | min | max |\n|---|---|---|---|---|---|\n";
  char buf[64];
  for (const auto& [key, a] : agg) {
    double sum = 0.0, lo = INFINITY, hi = -INFINITY;
    for (double v : a.values) sum += v, lo = std::min(lo, v), hi = std::max(hi, v);
    o << "| " << key.first << " | " << key.second << " | " << a.values.size();
    for (double v : {sum / static_cast<double>(a.values.size()), lo, hi}) {
      std::snprintf(buf, sizeof buf, " | %.6g", v);
      o << buf;
    }
    o << " |\n";
  }
  if (!errors.empty()) {
    o << "\n## Failed seeds\n\n";
    for (const std::string& e : errors) o << "- " << e << "\n";
  }
  write_text_file(dir / "report.md", o.str());
  return o.str();
}

}  // namespace mflab
