#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mflab/gae.hpp"
#include "mflab/lowdim_density.hpp"
#include "mflab/mlp.hpp"
#include "mflab/twostep.hpp"

namespace mflab {

// JSON checkpoints. Networks are stored as a flat list of
// {"layer", "role": "weight"|"bias", "shape", "values"} entries (row-major, real64)
// plus the activation tags. Models wrap their networks with a small manifest.
// Parse failures and malformed documents raise input errors.
std::string mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(std::string_view text);

std::string gae_to_json(const GaeModel& model);
GaeModel gae_from_json(std::string_view text);

std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(std::string_view text);

std::string ebm_to_json(const EbmModel& model);
EbmModel ebm_from_json(std::string_view text);

// Chart (autoencoder or linear), latent density, standardization and tolerance. Circle
// charts and function densities are not serializable (unsupported).
std::string two_step_to_json(const TwoStepModel& model);
TwoStepModel two_step_from_json(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mflab
