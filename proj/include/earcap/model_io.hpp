#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "earcap/svm.hpp"
#include "earcap/types.hpp"

namespace earcap {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { Authentication, Identification };

struct AuthModelFile {
  std::string target_id;
  LinearModel model;
  PipelineConfig config;
  double default_threshold = 0.5;
  std::optional<double> eer;  // from the evaluation that set default_threshold
};

struct IdModelFile {
  OvrModel model;
  PipelineConfig config;
};

void save_model(const AuthModelFile& file, const std::filesystem::path& path);
void save_model(const IdModelFile& file, const std::filesystem::path& path);

// Reads just the kind field, so callers can pick the right loader.
ModelKind peek_model_kind(const std::filesystem::path& path);

AuthModelFile load_auth_model(const std::filesystem::path& path);
IdModelFile load_id_model(const std::filesystem::path& path);

}  // namespace earcap
