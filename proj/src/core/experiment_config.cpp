#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "mflab/checkpoint.hpp"
#include "mflab/experiment.hpp"

namespace mflab {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

const std::set<std::string> kMetrics{"quantized_mass", "component_weight", "circle_tv", "sample_tv",
                                     "frechet",        "recon_mse",        "latent_cross_entropy"};

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorCode::config, where + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      bad(where, "unknown key '" + item.key() + "'");
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong type");
  }
}

std::size_t get_count(const json& j, const char* key, const std::string& where, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(where + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

TargetSpec parse_target(const json& j, const std::string& where) {
  check_keys(j, {"kind", "weight", "kappa", "radius", "turns", "scale"}, where);
  if (!j.contains("kind")) bad(where, "missing 'kind'");
  TargetSpec t;
  try {
    t.kind = parse_target_kind(get<std::string>(j, "kind", where, ""));
  } catch (const Error& e) {
    bad(where + ".kind", e.what());
  }
  t.weight = get<double>(j, "weight", where, t.weight);
  t.kappa = get<double>(j, "kappa", where, t.kappa);
  t.radius = get<double>(j, "radius", where, t.radius);
  t.turns = get<double>(j, "turns", where, t.turns);
  t.scale = get<double>(j, "scale", where, t.scale);
  try {
    t.validate();
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return t;
}

TrainConfig parse_train(const json& j, const std::string& where, TrainConfig t) {
  check_keys(j, {"epochs", "batch_size", "learning_rate", "clip_norm", "hidden", "activation"}, where);
  t.epochs = get_count(j, "epochs", where, t.epochs);
  t.batch_size = get_count(j, "batch_size", where, t.batch_size);
  t.learning_rate = get<double>(j, "learning_rate", where, t.learning_rate);
  t.clip_norm = get<double>(j, "clip_norm", where, t.clip_norm);
  t.hidden = get<std::vector<std::size_t>>(j, "hidden", where, t.hidden);
  if (j.contains("activation")) {
    try {
      t.activation = parse_activation(get<std::string>(j, "activation", where, ""));
    } catch (const Error& e) {
      bad(where + ".activation", e.what());
    }
  }
  try {
    t.validate();
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return t;
}

EbmConfig parse_ebm(const json& j, const std::string& where) {
  check_keys(j, {"regularization", "reinit_probability", "buffer_size", "init_range", "langevin"}, where);
  EbmConfig e;
  e.regularization = get<double>(j, "regularization", where, e.regularization);
  e.reinit_probability = get<double>(j, "reinit_probability", where, e.reinit_probability);
  e.buffer_size = get_count(j, "buffer_size", where, e.buffer_size);
  e.init_range = get<double>(j, "init_range", where, e.init_range);
  if (j.contains("langevin")) {
    const json& l = j.at("langevin");
    const std::string lw = where + ".langevin";
    check_keys(l, {"steps", "step_size", "noise_std", "grad_clamp"}, lw);
    e.langevin.steps = get_count(l, "steps", lw, e.langevin.steps);
    e.langevin.step_size = get<double>(l, "step_size", lw, e.langevin.step_size);
    e.langevin.noise_std = get<double>(l, "noise_std", lw, e.langevin.noise_std);
    if (l.contains("grad_clamp")) {
      const auto c = get<std::vector<double>>(l, "grad_clamp", lw, {});
      if (c.size() != 2) bad(lw + ".grad_clamp", "expected [low, high]");
      e.langevin.grad_clamp_low = c[0];
      e.langevin.grad_clamp_high = c[1];
    }
  }
  try {
    e.validate();
  } catch (const Error& err) {
    bad(where, err.what());
  }
  return e;
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

PipelineSpec parse_pipeline(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type")) bad(where, "pipeline needs a 'type'");
  PipelineSpec p;
  const std::string type = get<std::string>(j, "type", where, "");
  if (type == "single_vae") {
    check_keys(j, {"name", "type", "latent_dim", "train"}, where);
    p.kind = PipelineKind::single_vae;
    p.gae = GaeKind::vae;
    p.latent_dim = get_count(j, "latent_dim", where, p.latent_dim);
    if (j.contains("train")) p.gae_train = parse_train(j.at("train"), where + ".train", p.gae_train);
  } else if (type == "single_ebm") {
    check_keys(j, {"name", "type", "train", "ebm"}, where);
    p.kind = PipelineKind::single_ebm;
    if (j.contains("train")) p.density_train = parse_train(j.at("train"), where + ".train", p.density_train);
    if (j.contains("ebm")) p.ebm = parse_ebm(j.at("ebm"), where + ".ebm");
  } else if (type == "two_step") {
    check_keys(j, {"name", "type", "gae", "density", "latent_dim", "gae_train", "density_train", "components", "ebm"},
               where);
    p.kind = PipelineKind::two_step;
    try {
      p.gae = parse_gae_kind(get<std::string>(j, "gae", where, "ae"));
    } catch (const Error& e) {
      bad(where + ".gae", e.what());
    }
    const std::string density = get<std::string>(j, "density", where, "gmm");
    if (density == "gmm") {
      p.density = DensityKind::gmm;
    } else if (density == "ebm") {
      p.density = DensityKind::ebm;
    } else {
      bad(where + ".density", "expected 'gmm' or 'ebm', got '" + density + "'");
    }
    p.latent_dim = get_count(j, "latent_dim", where, p.latent_dim);
    if (j.contains("gae_train")) p.gae_train = parse_train(j.at("gae_train"), where + ".gae_train", p.gae_train);
    if (j.contains("density_train")) {
      p.density_train = parse_train(j.at("density_train"), where + ".density_train", p.density_train);
    }
    p.components = get_count(j, "components", where, p.components);
    if (j.contains("ebm")) p.ebm = parse_ebm(j.at("ebm"), where + ".ebm");
    if (p.density == DensityKind::gmm && j.contains("ebm")) bad(where, "'ebm' block given for a gmm density");
    if (p.density == DensityKind::ebm && j.contains("components")) bad(where, "'components' given for an ebm density");
  } else {
    bad(where + ".type", "expected single_vae, single_ebm or two_step, got '" + type + "'");
  }
  p.name = get<std::string>(j, "name", where, type);
  if (!valid_name(p.name)) bad(where + ".name", "names use letters, digits, '_' and '-'");
  return p;
}

Matrix parse_points(const json& j, const std::string& where, std::size_t dim) {
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    bad(where, "expected a list of points");
  }
  Matrix m(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) bad(where, "point " + std::to_string(i) + " has the wrong dimension");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

OverfitConfig default_overfit_block(const TargetSpec& target) {
  OverfitConfig o;
  o.target = target;
  if (target.kind == TargetKind::two_point) {
    o.on_points = Matrix::from_rows({{1.0}, {-1.0}});
    o.off_points = Matrix::from_rows({{0.5}, {0.0}});
  } else {
    o.on_points = Matrix::from_rows({{target.radius, 0.0}, {-target.radius, 0.0}});
    o.off_points = Matrix::from_rows({{0.0, 0.0}, {1.5 * target.radius, 0.0}});
  }
  return o;
}

OverfitConfig parse_overfit(const json& j, const std::string& where) {
  check_keys(j,
             {"target", "sigmas", "on_points", "off_points", "min_distance", "split", "likelihood_weight",
              "likelihood_samples", "alternating"},
             where);
  const TargetSpec target =
      j.contains("target") ? parse_target(j.at("target"), where + ".target") : TargetSpec::two_point(0.7);
  if (target.kind == TargetKind::spiral) bad(where + ".target", "the overfitting demo supports two_point and von_mises_circle");
  OverfitConfig o = default_overfit_block(target);
  o.sigmas = get<std::vector<double>>(j, "sigmas", where, o.sigmas);
  if (o.sigmas.empty()) bad(where + ".sigmas", "sigma list is empty");
  for (std::size_t i = 0; i < o.sigmas.size(); ++i) {
    if (!(o.sigmas[i] > 0.0)) bad(where + ".sigmas", "every sigma must be > 0");
    if (i > 0 && !(o.sigmas[i] < o.sigmas[i - 1])) bad(where + ".sigmas", "sigmas must be strictly decreasing");
  }
  if (j.contains("on_points")) o.on_points = parse_points(j.at("on_points"), where + ".on_points", target.ambient_dim());
  if (j.contains("off_points")) {
    o.off_points = parse_points(j.at("off_points"), where + ".off_points", target.ambient_dim());
  }
  o.min_distance = get<double>(j, "min_distance", where, o.min_distance);
  if (!(o.min_distance > 0.0)) bad(where + ".min_distance", "must be > 0");
  for (std::size_t i = 0; i < o.off_points.rows; ++i) {
    if (distance_to_manifold(target, o.off_points.row(i)) < o.min_distance) {
      bad(where + ".off_points", "point " + std::to_string(i) + " lies on the manifold");
    }
  }
  o.split = get<double>(j, "split", where, o.split);
  if (target.kind == TargetKind::two_point && !(o.split > -1.0 && o.split < 1.0)) {
    bad(where + ".split", "must lie strictly between -1 and 1");
  }
  o.likelihood_weight = get<double>(j, "likelihood_weight", where, o.likelihood_weight);
  if (!(o.likelihood_weight >= 0.0 && o.likelihood_weight <= 1.0)) bad(where + ".likelihood_weight", "must be in [0, 1]");
  o.likelihood_samples = get_count(j, "likelihood_samples", where, o.likelihood_samples);
  if (o.likelihood_samples == 0) bad(where + ".likelihood_samples", "must be > 0");
  if (j.contains("alternating")) {
    const json& a = j.at("alternating");
    const std::string aw = where + ".alternating";
    check_keys(a, {"weight_a", "weight_b", "t_max"}, aw);
    o.alternating.weight_a = get<double>(a, "weight_a", aw, o.alternating.weight_a);
    o.alternating.weight_b = get<double>(a, "weight_b", aw, o.alternating.weight_b);
    o.alternating.t_max = get_count(a, "t_max", aw, o.alternating.t_max);
    for (double w : {o.alternating.weight_a, o.alternating.weight_b}) {
      if (!(w >= 0.0 && w <= 1.0)) bad(aw, "weights must be in [0, 1]");
    }
    if (o.alternating.t_max < 2) bad(aw + ".t_max", "must be >= 2");
  }
  return o;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  require(!seeds.empty(), ErrorCode::config, "at least one seed is required");
  require(n_samples >= 2, ErrorCode::config, "n_samples must be >= 2");
  require(eval_samples >= 2, ErrorCode::config, "eval_samples must be >= 2");
  require(circle_grid >= 8, ErrorCode::config, "circle_grid must be >= 8");
  require(angle_bins >= 2, ErrorCode::config, "angle_bins must be >= 2");
  require(threads >= 1, ErrorCode::config, "threads must be >= 1");
  std::set<std::string> names;
  for (const PipelineSpec& p : pipelines) {
    require(names.insert(p.name).second, ErrorCode::config, "duplicate pipeline name '" + p.name + "'");
    if (p.kind != PipelineKind::single_ebm) {
      require(p.latent_dim >= 1, ErrorCode::config, "pipeline '" + p.name + "': latent_dim must be >= 1");
    }
    if (p.kind == PipelineKind::two_step && p.density == DensityKind::gmm) {
      require(p.components >= 1, ErrorCode::config, "pipeline '" + p.name + "': components must be >= 1");
    }
  }
  for (const std::string& m : metrics) {
    require(kMetrics.count(m) == 1, ErrorCode::config, "unknown metric '" + m + "'");
    if (m == "quantized_mass" || m == "component_weight") {
      require(target.kind == TargetKind::two_point, ErrorCode::config, "metric '" + m + "' needs a two_point target");
    }
    if (m == "circle_tv" || m == "sample_tv") {
      require(target.kind == TargetKind::von_mises_circle, ErrorCode::config,
              "metric '" + m + "' needs a von_mises_circle target");
    }
  }
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  const std::string where = "config";
  check_keys(j,
             {"schema_version", "name", "target", "n_samples", "pipelines", "metrics", "seeds", "output_dir",
              "eval_samples", "circle_grid", "angle_bins", "threads", "overfit"},
             where);
  if (!j.contains("schema_version")) bad(where, "missing 'schema_version'");
  if (get<int>(j, "schema_version", where, 0) != kSchemaVersion) {
    bad(where + ".schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig c;
  c.name = get<std::string>(j, "name", where, c.name);
  if (!valid_name(c.name)) bad(where + ".name", "names use letters, digits, '_' and '-'");
  c.target = j.contains("target") ? parse_target(j.at("target"), where + ".target") : TargetSpec::two_point(0.7);
  c.n_samples = get_count(j, "n_samples", where, c.n_samples);
  if (j.contains("pipelines")) {
    const json& ps = j.at("pipelines");
    if (!ps.is_array()) bad(where + ".pipelines", "expected a list");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      c.pipelines.push_back(parse_pipeline(ps[i], where + ".pipelines[" + std::to_string(i) + "]"));
    }
  }
  c.metrics = get<std::vector<std::string>>(j, "metrics", where, c.metrics);
  c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", where, c.seeds);
  c.output_dir = get<std::string>(j, "output_dir", where, c.output_dir.string());
  c.eval_samples = get_count(j, "eval_samples", where, c.eval_samples);
  c.circle_grid = get_count(j, "circle_grid", where, c.circle_grid);
  c.angle_bins = get_count(j, "angle_bins", where, c.angle_bins);
  c.threads = get_count(j, "threads", where, c.threads);
  if (j.contains("overfit")) c.overfit = parse_overfit(j.at("overfit"), where + ".overfit");
  c.validate();

  json canonical = j;
  canonical.erase("seeds");
  canonical.erase("output_dir");
  canonical.erase("threads");
  c.hash = hex64(fnv1a64(canonical.dump()));
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  return parse_experiment_config(text);
}

ExperimentConfig default_overfit_config() {
  return parse_experiment_config(R"({"schema_version": 1, "name": "overfit_demo", "output_dir": "runs/overfit_demo",
                                     "overfit": {}})");
}

}  // namespace mflab
