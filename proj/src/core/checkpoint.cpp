#include "mflab/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace mflab {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::input, std::string("checkpoint is not valid JSON: ") + e.what());
  }
}

// json::at and get<> throw on missing keys or wrong types; report those as input errors.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::input, std::string("malformed ") + what + " checkpoint: " + e.what());
  }
}

void check_format(const json& j, const char* format) {
  require(j.is_object() && j.value("format", "") == format, ErrorCode::input,
          std::string("document is not a ") + format + " checkpoint");
  require(j.value("version", 0) == kVersion, ErrorCode::input, std::string("unsupported ") + format + " version");
}

json matrix_json(const Matrix& m) { return {{"shape", {m.rows, m.cols}}, {"values", m.data}}; }

Matrix matrix_from(const json& j) {
  Matrix m(j.at("shape").at(0).get<std::size_t>(), j.at("shape").at(1).get<std::size_t>());
  m.data = j.at("values").get<std::vector<double>>();
  require(m.data.size() == m.rows * m.cols, ErrorCode::input, "matrix values do not match shape");
  return m;
}

json mlp_json(const MlpParams& p) {
  json entries = json::array();
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const DenseLayer& layer = p.layers[l];
    entries.push_back({{"layer", l}, {"role", "weight"}, {"shape", {layer.out, layer.in}}, {"values", layer.weight}});
    entries.push_back({{"layer", l}, {"role", "bias"}, {"shape", {layer.out}}, {"values", layer.bias}});
  }
  json hidden = json::array();
  for (Activation a : p.hidden_activations) hidden.push_back(std::string(to_string(a)));
  return {{"format", "mflab-mlp"},
          {"version", kVersion},
          {"hidden_activations", hidden},
          {"output_activation", std::string(to_string(p.output_activation))},
          {"entries", entries}};
}

MlpParams mlp_from(const json& j) {
  check_format(j, "mflab-mlp");
  MlpParams p = guarded("network", [&] {
    MlpParams q;
    for (const auto& a : j.at("hidden_activations")) q.hidden_activations.push_back(parse_activation(a.get<std::string>()));
    q.output_activation = parse_activation(j.at("output_activation").get<std::string>());
    for (const auto& e : j.at("entries")) {
      const auto l = e.at("layer").get<std::size_t>();
      if (q.layers.size() <= l) q.layers.resize(l + 1);
      DenseLayer& layer = q.layers[l];
      const std::string role = e.at("role").get<std::string>();
      auto values = e.at("values").get<std::vector<double>>();
      if (role == "weight") {
        layer.out = e.at("shape").at(0).get<std::size_t>();
        layer.in = e.at("shape").at(1).get<std::size_t>();
        require(values.size() == layer.out * layer.in, ErrorCode::input, "weight values do not match shape");
        layer.weight = std::move(values);
      } else if (role == "bias") {
        require(values.size() == e.at("shape").at(0).get<std::size_t>(), ErrorCode::input,
                "bias values do not match shape");
        layer.bias = std::move(values);
      } else {
        fail(ErrorCode::input, "unknown parameter role '" + role + "'");
      }
    }
    return q;
  });
  for (const DenseLayer& l : p.layers) {
    require(l.bias.size() == l.out, ErrorCode::input, "layer is missing its bias or weight entry");
  }
  p.validate();
  return p;
}

json gae_json(const GaeModel& m) {
  json j{{"format", "mflab-gae"},
         {"version", kVersion},
         {"kind", std::string(to_string(m.kind))},
         {"d", m.latent_dim},
         {"D", m.ambient_dim},
         {"activation", std::string(to_string(m.activation))},
         {"seed", m.seed},
         {"train_rmse", m.train_rmse},
         {"encoder", mlp_json(m.encoder)},
         {"decoder", mlp_json(m.decoder)}};
  if (m.kind == GaeKind::vae) {
    j["encoder_logvar"] = mlp_json(m.encoder_logvar);
    j["decoder_logvar"] = m.decoder_logvar;
  }
  return j;
}

GaeModel gae_from(const json& j) {
  check_format(j, "mflab-gae");
  GaeModel m = guarded("autoencoder", [&] {
    GaeModel g;
    g.kind = parse_gae_kind(j.at("kind").get<std::string>());
    g.latent_dim = j.at("d").get<std::size_t>();
    g.ambient_dim = j.at("D").get<std::size_t>();
    g.activation = parse_activation(j.at("activation").get<std::string>());
    g.seed = j.at("seed").get<std::uint64_t>();
    g.train_rmse = j.at("train_rmse").get<double>();
    g.encoder = mlp_from(j.at("encoder"));
    g.decoder = mlp_from(j.at("decoder"));
    if (g.kind == GaeKind::vae) {
      g.encoder_logvar = mlp_from(j.at("encoder_logvar"));
      g.decoder_logvar = j.at("decoder_logvar").get<double>();
    }
    return g;
  });
  m.validate();
  return m;
}

json gmm_json(const GmmModel& g) {
  return {{"format", "mflab-gmm"},
          {"version", kVersion},
          {"weights", g.weights},
          {"means", matrix_json(g.means)},
          {"variances", matrix_json(g.variances)}};
}

GmmModel gmm_from(const json& j) {
  check_format(j, "mflab-gmm");
  GmmModel g = guarded("mixture", [&] {
    return GmmModel{j.at("weights").get<Vector>(), matrix_from(j.at("means")), matrix_from(j.at("variances"))};
  });
  g.validate();
  return g;
}

json ebm_json(const EbmModel& e) {
  const LangevinConfig& l = e.config.langevin;
  return {{"format", "mflab-ebm"},
          {"version", kVersion},
          {"energy", mlp_json(e.energy)},
          {"langevin",
           {{"steps", l.steps},
            {"step_size", l.step_size},
            {"noise_std", l.noise_std},
            {"grad_clamp", {l.grad_clamp_low, l.grad_clamp_high}}}},
          {"regularization", e.config.regularization},
          {"reinit_probability", e.config.reinit_probability},
          {"buffer_size", e.config.buffer_size},
          {"init_range", e.config.init_range},
          {"buffer", matrix_json(e.buffer)}};
}

EbmModel ebm_from(const json& j) {
  check_format(j, "mflab-ebm");
  EbmModel e = guarded("energy model", [&] {
    EbmModel m;
    m.energy = mlp_from(j.at("energy"));
    const json& l = j.at("langevin");
    m.config.langevin.steps = l.at("steps").get<std::size_t>();
    m.config.langevin.step_size = l.at("step_size").get<double>();
    m.config.langevin.noise_std = l.at("noise_std").get<double>();
    m.config.langevin.grad_clamp_low = l.at("grad_clamp").at(0).get<double>();
    m.config.langevin.grad_clamp_high = l.at("grad_clamp").at(1).get<double>();
    m.config.regularization = j.at("regularization").get<double>();
    m.config.reinit_probability = j.at("reinit_probability").get<double>();
    m.config.buffer_size = j.at("buffer_size").get<std::size_t>();
    m.config.init_range = j.at("init_range").get<double>();
    m.buffer = matrix_from(j.at("buffer"));
    return m;
  });
  e.config.validate();
  require(e.energy.output_dim() == 1, ErrorCode::input, "energy network must output a scalar");
  require(e.buffer.rows == 0 || e.buffer.cols == e.dim(), ErrorCode::input, "buffer dimension differs from energy input");
  return e;
}

}  // namespace

std::string mlp_to_json(const MlpParams& params) { return mlp_json(params).dump(); }
MlpParams mlp_from_json(std::string_view text) { return mlp_from(parse(text)); }
std::string gae_to_json(const GaeModel& model) { return gae_json(model).dump(); }
GaeModel gae_from_json(std::string_view text) { return gae_from(parse(text)); }
std::string gmm_to_json(const GmmModel& model) { return gmm_json(model).dump(); }
GmmModel gmm_from_json(std::string_view text) { return gmm_from(parse(text)); }
std::string ebm_to_json(const EbmModel& model) { return ebm_json(model).dump(); }
EbmModel ebm_from_json(std::string_view text) { return ebm_from(parse(text)); }

std::string two_step_to_json(const TwoStepModel& model) {
  json chart;
  if (const auto* gae = std::get_if<GaeModel>(&model.chart)) {
    chart = gae_json(*gae);
  } else if (const auto* lin = std::get_if<LinearChart>(&model.chart)) {
    chart = {{"format", "mflab-linear-chart"}, {"version", kVersion}, {"a", matrix_json(lin->a)}, {"offset", lin->offset}};
  } else {
    fail(ErrorCode::unsupported, "circle charts are not checkpointed");
  }
  json density;
  if (const auto* g = std::get_if<GmmModel>(&model.density)) {
    density = gmm_json(*g);
  } else if (const auto* e = std::get_if<EbmModel>(&model.density)) {
    density = ebm_json(*e);
  } else {
    fail(ErrorCode::unsupported, "function densities cannot be checkpointed");
  }
  return json{{"format", "mflab-two-step"},
              {"version", kVersion},
              {"chart", chart},
              {"density", density},
              {"standardization", {{"mean", model.standardization.mean}, {"std", model.standardization.std}}},
              {"recon_tolerance", model.recon_tolerance},
              {"ebm_grid", {model.ebm_grid.lo, model.ebm_grid.hi, model.ebm_grid.nodes}}}
      .dump();
}

TwoStepModel two_step_from_json(std::string_view text) {
  const json j = parse(text);
  check_format(j, "mflab-two-step");
  TwoStepModel m = guarded("two-step", [&] {
    TwoStepModel t;
    const json& c = j.at("chart");
    if (c.value("format", "") == "mflab-linear-chart") {
      t.chart = LinearChart{matrix_from(c.at("a")), c.at("offset").get<Vector>()};
    } else {
      t.chart = gae_from(c);
    }
    const json& d = j.at("density");
    if (d.value("format", "") == "mflab-gmm") {
      t.density = gmm_from(d);
    } else {
      t.density = ebm_from(d);
    }
    t.standardization.mean = j.at("standardization").at("mean").get<Vector>();
    t.standardization.std = j.at("standardization").at("std").get<Vector>();
    t.recon_tolerance = j.at("recon_tolerance").get<double>();
    t.ebm_grid = {j.at("ebm_grid").at(0).get<double>(), j.at("ebm_grid").at(1).get<double>(),
                  j.at("ebm_grid").at(2).get<std::size_t>()};
    return t;
  });
  m.validate();
  m.refresh();
  return m;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mflab
