#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mflab/datasets.hpp"
#include "mflab/gae.hpp"
#include "mflab/lowdim_density.hpp"
#include "mflab/train_config.hpp"

namespace mflab {

enum class PipelineKind { single_vae, single_ebm, two_step };
enum class DensityKind { gmm, ebm };

struct PipelineSpec {
  std::string name;
  PipelineKind kind = PipelineKind::two_step;
  GaeKind gae = GaeKind::ae;          // two_step
  DensityKind density = DensityKind::gmm;  // two_step
  std::size_t latent_dim = 1;         // single_vae, two_step
  TrainConfig gae_train;              // single_vae ("train"), two_step
  TrainConfig density_train;          // single_ebm ("train"), two_step
  std::size_t components = 2;         // gmm
  EbmConfig ebm;                      // single_ebm, two_step with ebm
};

struct AlternatingDemo {
  double weight_a = 0.3;
  double weight_b = 0.8;
  std::size_t t_max = 40;
};

struct OverfitConfig {
  TargetSpec target = TargetSpec::two_point(0.7);
  std::vector<double> sigmas{1.0, 1e-1, 1e-2, 1e-3};
  Matrix on_points;
  Matrix off_points;
  double min_distance = 1e-2;
  double split = 0.0;                 // two_point only
  double likelihood_weight = 0.8;     // wrong-weight family scored on target data (two_point)
  std::size_t likelihood_samples = 1000;
  AlternatingDemo alternating;        // two_point only
};

struct ExperimentConfig {
  std::string name = "experiment";
  TargetSpec target;
  std::size_t n_samples = 1000;
  std::vector<PipelineSpec> pipelines;
  std::vector<std::string> metrics;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "runs";
  std::size_t eval_samples = 5000;
  std::size_t circle_grid = 512;
  std::size_t angle_bins = 64;
  std::size_t threads = 1;
  std::optional<OverfitConfig> overfit;
  std::string hash;  // FNV-1a of the canonical document without seeds, output_dir, threads

  void validate() const;
};

// JSON document with "schema_version": 1. Unknown keys, wrong types and invalid values
// raise config errors.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Two-point overfitting demo used when overfit-demo runs without a config.
ExperimentConfig default_overfit_config();

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

enum class Command { simulate, train, evaluate, run, overfit_demo };

struct RunOptions {
  bool plots = false;
};

struct SeedFailure {
  std::uint64_t seed = 0;
  std::string pipeline;
  ErrorCode code = ErrorCode::numeric;
  std::string message;
  std::optional<double> value;
};

struct RunSummary {
  std::vector<std::uint64_t> seeds_run;
  std::vector<std::uint64_t> seeds_skipped;  // already present in the ledger
  std::vector<SeedFailure> failures;
  std::vector<std::filesystem::path> files;

  std::string describe() const;
};

// Files in the output directory:
//   data_seed<S>.csv                 simulate
//   <pipeline>_seed<S>.json          train, run (checkpoint)
//   <pipeline>_seed<S>_loss.csv      train, run
//   <pipeline>_seed<S>_samples.csv   evaluate, run
//   <pipeline>_seed<S>_circle.csv    evaluate, run (circle target, d = 1 two-step)
//   metrics.jsonl                    evaluate, run (append-only ledger, no timestamps)
//   run_info.json                    every command (timestamps live here)
//   overfit_*.csv                    overfit_demo
//   *.svg                            with plots enabled
// Stage errors abort the affected seed and are recorded; other seeds proceed.
RunSummary execute(Command command, const ExperimentConfig& cfg, const RunOptions& options = {});

// Aggregates metrics.jsonl in `dir` (mean, min, max per pipeline and metric), writes
// report.md there and returns its text.
std::string report(const std::filesystem::path& dir);

}  // namespace mflab
