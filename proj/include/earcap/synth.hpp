#pragma once

#include <cstdint>
#include <filesystem>

#include "earcap/types.hpp"

namespace earcap {

// Additive-Gaussian model of multi-session capacitive recordings: one
// baseline signature per participant, a constant per-session offset (device
// re-insertion), per-frame noise, and extra per-frame noise while walking.
// All channels are independent; values clamp to the 10-bit device range.
struct GeneratorParams {
  int n_participants = 20;
  int n_rest_sessions = 12;
  int n_walking_sessions = 8;
  double session_duration_s = 60.0;
  double sample_rate_hz = 15.0;
  double baseline = 500.0;
  double user_sigma = 40.0;          // spread of per-user signatures
  double session_sigma = 8.0;        // per-session re-insertion offset
  double frame_sigma = 4.0;          // per-frame noise
  double motion_sigma_extra = 6.0;   // added per frame during walking
  std::uint64_t rng_seed = 1;

  void validate() const;  // throws InputError

  bool operator==(const GeneratorParams&) const = default;
};

// Deterministic for a fixed seed: the same params always produce the same
// dataset, bit for bit, on every platform.
Dataset generate_dataset(const GeneratorParams& params);

// Writes the dataset in the ingestion manifest + CSV format; re-ingesting
// reproduces the dataset exactly. When params is given, they are persisted
// alongside as generator_params.json for provenance.
void export_dataset(const Dataset& dataset, const std::filesystem::path& directory,
                    const GeneratorParams* params = nullptr);

void save_generator_params(const GeneratorParams& params, const std::filesystem::path& path);
GeneratorParams load_generator_params(const std::filesystem::path& path);

}  // namespace earcap
