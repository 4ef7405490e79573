#include "mflab/mflab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "mflab/checkpoint.hpp"
#include "mflab/experiment.hpp"
#include "mflab/metrics.hpp"
#include "mflab/overfit_lab.hpp"
#include "mflab/twostep.hpp"

struct mflab_config {
  mflab::ExperimentConfig cfg;
};
struct mflab_dataset {
  mflab::Dataset data;
};
struct mflab_model {
  mflab::TwoStepModel model;
};

namespace {

thread_local std::string g_last_error;
thread_local std::optional<double> g_last_value;

mflab_status to_status(mflab::ErrorCode c) {
  return static_cast<mflab_status>(static_cast<int>(c) + 1);
}

mflab_status set_error(mflab_status s, std::string msg, std::optional<double> value = std::nullopt) {
  g_last_error = std::move(msg);
  g_last_value = value;
  return s;
}

// Runs f, translating exceptions into status codes and the thread's last error.
template <class F>
mflab_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    g_last_value.reset();
    return MFLAB_OK;
  } catch (const mflab::Error& e) {
    return set_error(to_status(e.code()), e.what(), e.value());
  } catch (const std::bad_alloc&) {
    return set_error(MFLAB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(MFLAB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(MFLAB_ERR_INTERNAL, "unknown error");
  }
}

#define MFLAB_NONNULL(p) \
  if (!(p)) return set_error(MFLAB_ERR_NULL_ARGUMENT, "argument '" #p "' is null")

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mflab::TargetSpec to_spec(const mflab_target& t) {
  mflab::TargetSpec s;
  switch (t.kind) {
    case MFLAB_TARGET_TWO_POINT: s.kind = mflab::TargetKind::two_point; break;
    case MFLAB_TARGET_VON_MISES_CIRCLE: s.kind = mflab::TargetKind::von_mises_circle; break;
    case MFLAB_TARGET_SPIRAL: s.kind = mflab::TargetKind::spiral; break;
    default: mflab::fail(mflab::ErrorCode::input, "unknown target kind", static_cast<double>(t.kind));
  }
  s.weight = t.weight;
  s.kappa = t.kappa;
  s.radius = t.radius;
  s.turns = t.turns;
  s.scale = t.scale;
  s.validate();
  return s;
}

}  // namespace

extern "C" {

const char* mflab_version(void) { return "1.0.0"; }

const char* mflab_status_name(int status) {
  switch (status) {
    case MFLAB_OK: return "ok";
    case MFLAB_ERR_NULL_ARGUMENT: return "null_argument";
    case MFLAB_ERR_BUFFER_TOO_SMALL: return "buffer_too_small";
    case MFLAB_ERR_INTERNAL: return "internal";
    default:
      if (status >= MFLAB_ERR_SHAPE && status <= MFLAB_ERR_IO) {
        return mflab::to_string(static_cast<mflab::ErrorCode>(status - 1));
      }
      return "unknown";
  }
}

const char* mflab_last_error(void) { return g_last_error.c_str(); }

int mflab_last_error_value(double* value) {
  if (!g_last_value) return 0;
  if (value) *value = *g_last_value;
  return 1;
}

void mflab_string_free(char* s) { std::free(s); }

mflab_status mflab_config_load(const char* path, mflab_config** out) {
  MFLAB_NONNULL(path);
  MFLAB_NONNULL(out);
  *out = nullptr;
  return guard([&] { *out = new mflab_config{mflab::load_experiment_config(path)}; });
}

mflab_status mflab_config_parse(const char* json_text, mflab_config** out) {
  MFLAB_NONNULL(json_text);
  MFLAB_NONNULL(out);
  *out = nullptr;
  return guard([&] { *out = new mflab_config{mflab::parse_experiment_config(json_text)}; });
}

mflab_status mflab_config_default_overfit(mflab_config** out) {
  MFLAB_NONNULL(out);
  *out = nullptr;
  return guard([&] { *out = new mflab_config{mflab::default_overfit_config()}; });
}

void mflab_config_free(mflab_config* cfg) { delete cfg; }

mflab_status mflab_config_set_seeds(mflab_config* cfg, const uint64_t* seeds, size_t n) {
  MFLAB_NONNULL(cfg);
  if (n == 0) return set_error(MFLAB_ERR_CONFIG, "at least one seed is required");
  MFLAB_NONNULL(seeds);
  return guard([&] { cfg->cfg.seeds.assign(seeds, seeds + n); });
}

mflab_status mflab_config_set_output_dir(mflab_config* cfg, const char* dir) {
  MFLAB_NONNULL(cfg);
  MFLAB_NONNULL(dir);
  if (!*dir) return set_error(MFLAB_ERR_CONFIG, "output directory is empty");
  return guard([&] { cfg->cfg.output_dir = dir; });
}

mflab_status mflab_config_hash(const mflab_config* cfg, char* buf, size_t len) {
  MFLAB_NONNULL(cfg);
  MFLAB_NONNULL(buf);
  const std::string& h = cfg->cfg.hash;
  if (len < h.size() + 1) return set_error(MFLAB_ERR_BUFFER_TOO_SMALL, "hash buffer needs 17 bytes");
  std::memcpy(buf, h.c_str(), h.size() + 1);
  return MFLAB_OK;
}

mflab_status mflab_execute(const mflab_config* cfg, mflab_command command, int plots, size_t* failed_seeds,
                           char** summary) {
  MFLAB_NONNULL(cfg);
  if (summary) *summary = nullptr;
  return guard([&] {
    mflab::Command c;
    switch (command) {
      case MFLAB_CMD_SIMULATE: c = mflab::Command::simulate; break;
      case MFLAB_CMD_TRAIN: c = mflab::Command::train; break;
      case MFLAB_CMD_EVALUATE: c = mflab::Command::evaluate; break;
      case MFLAB_CMD_RUN: c = mflab::Command::run; break;
      case MFLAB_CMD_OVERFIT_DEMO: c = mflab::Command::overfit_demo; break;
      default: mflab::fail(mflab::ErrorCode::input, "unknown command", static_cast<double>(command));
    }
    const mflab::RunSummary s = mflab::execute(c, cfg->cfg, {plots != 0});
    if (failed_seeds) *failed_seeds = s.failures.size();
    if (summary) *summary = dup_string(s.describe());
  });
}

mflab_status mflab_report(const char* dir, char** text) {
  MFLAB_NONNULL(dir);
  MFLAB_NONNULL(text);
  *text = nullptr;
  return guard([&] { *text = dup_string(mflab::report(dir)); });
}

mflab_status mflab_sample_target(const mflab_target* target, size_t n, uint64_t seed, mflab_dataset** out) {
  MFLAB_NONNULL(target);
  MFLAB_NONNULL(out);
  *out = nullptr;
  return guard([&] { *out = new mflab_dataset{mflab::sample_target(to_spec(*target), n, seed)}; });
}

void mflab_dataset_free(mflab_dataset* ds) { delete ds; }

mflab_status mflab_dataset_shape(const mflab_dataset* ds, size_t* rows, size_t* cols) {
  MFLAB_NONNULL(ds);
  if (rows) *rows = ds->data.size();
  if (cols) *cols = ds->data.dim();
  return MFLAB_OK;
}

mflab_status mflab_dataset_copy(const mflab_dataset* ds, double* buf, size_t len) {
  MFLAB_NONNULL(ds);
  MFLAB_NONNULL(buf);
  const auto& v = ds->data.points.data;
  if (len < v.size()) return set_error(MFLAB_ERR_BUFFER_TOO_SMALL, "dataset buffer too small", static_cast<double>(v.size()));
  std::memcpy(buf, v.data(), v.size() * sizeof(double));
  return MFLAB_OK;
}

mflab_status mflab_model_load(const char* path, mflab_model** out) {
  MFLAB_NONNULL(path);
  MFLAB_NONNULL(out);
  *out = nullptr;
  return guard([&] { *out = new mflab_model{mflab::two_step_from_json(mflab::read_text_file(path))}; });
}

void mflab_model_free(mflab_model* m) { delete m; }

mflab_status mflab_model_dims(const mflab_model* m, size_t* latent_dim, size_t* ambient_dim) {
  MFLAB_NONNULL(m);
  if (latent_dim) *latent_dim = m->model.latent_dim();
  if (ambient_dim) *ambient_dim = m->model.ambient_dim();
  return MFLAB_OK;
}

mflab_status mflab_model_log_density(const mflab_model* m, const double* x, size_t dim, double* out) {
  MFLAB_NONNULL(m);
  MFLAB_NONNULL(x);
  MFLAB_NONNULL(out);
  return guard([&] { *out = mflab::log_density_on_manifold(m->model, std::span<const double>(x, dim)); });
}

mflab_status mflab_model_sample(const mflab_model* m, size_t n, uint64_t seed, double* buf, size_t len) {
  MFLAB_NONNULL(m);
  MFLAB_NONNULL(buf);
  const size_t need = n * m->model.ambient_dim();
  if (len < need) return set_error(MFLAB_ERR_BUFFER_TOO_SMALL, "sample buffer too small", static_cast<double>(need));
  return guard([&] {
    const mflab::Matrix s = mflab::sample_two_step(m->model, n, seed);
    std::memcpy(buf, s.data.data(), need * sizeof(double));
  });
}

mflab_status mflab_convolved_density(const mflab_target* target, double sigma, const double* x, size_t dim,
                                     double* out) {
  MFLAB_NONNULL(target);
  MFLAB_NONNULL(x);
  MFLAB_NONNULL(out);
  return guard([&] { *out = mflab::convolved_density({to_spec(*target), sigma}, std::span<const double>(x, dim)); });
}

mflab_status mflab_weak_convergence(const mflab_target* target, double sigma, double split, double* out) {
  MFLAB_NONNULL(target);
  MFLAB_NONNULL(out);
  return guard([&] { *out = mflab::weak_convergence_check(to_spec(*target), sigma, split); });
}

mflab_status mflab_fit_stump(const double* train_in, size_t n_in, const double* train_ood, size_t n_ood,
                             double* threshold, double* train_accuracy) {
  MFLAB_NONNULL(train_in);
  MFLAB_NONNULL(train_ood);
  MFLAB_NONNULL(threshold);
  return guard([&] {
    const mflab::StumpFit f = mflab::fit_decision_stump({train_in, n_in}, {train_ood, n_ood});
    *threshold = f.threshold;
    if (train_accuracy) *train_accuracy = f.train_accuracy;
  });
}

mflab_status mflab_ood_accuracy(const double* test_in, size_t n_in, const double* test_ood, size_t n_ood,
                                double threshold, double* out) {
  MFLAB_NONNULL(test_in);
  MFLAB_NONNULL(test_ood);
  MFLAB_NONNULL(out);
  return guard([&] { *out = mflab::ood_accuracy({test_in, n_in}, {test_ood, n_ood}, threshold); });
}

mflab_status mflab_frechet_samples(const double* a, size_t n_a, const double* b, size_t n_b, size_t dim,
                                   double* out) {
  MFLAB_NONNULL(a);
  MFLAB_NONNULL(b);
  MFLAB_NONNULL(out);
  return guard([&] {
    mflab::Matrix ma(n_a, dim), mb(n_b, dim);
    ma.data.assign(a, a + n_a * dim);
    mb.data.assign(b, b + n_b * dim);
    *out = mflab::frechet_distance_sq(mflab::fit_gaussian_moments(ma), mflab::fit_gaussian_moments(mb));
  });
}

}  // extern "C"
