#include "earcap/model_io.hpp"

#include <nlohmann/json.hpp>

#include "earcap/error.hpp"
#include "earcap/fsio.hpp"

namespace earcap {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const PipelineConfig& config) {
  ordered_json j;
  j["chunk_len_frames"] = config.chunk_len_frames;
  j["head_trim_s"] = config.head_trim_s;
  j["tail_trim_s"] = config.tail_trim_s;
  j["svm_c"] = config.svm_c;
  j["sample_rate_hz"] = config.sample_rate_hz;
  j["rng_seed"] = config.rng_seed;
  j["standardize"] = config.standardize;
  return j;
}

PipelineConfig config_from_json(const ordered_json& j) {
  PipelineConfig config;
  config.chunk_len_frames = j.at("chunk_len_frames").get<int>();
  config.head_trim_s = j.at("head_trim_s").get<double>();
  config.tail_trim_s = j.at("tail_trim_s").get<double>();
  config.svm_c = j.at("svm_c").get<double>();
  config.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  config.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  config.standardize = j.at("standardize").get<bool>();
  return config;
}

ordered_json linear_model_to_json(const LinearModel& model) {
  ordered_json j;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["platt_a"] = model.platt_a;
  j["platt_b"] = model.platt_b;
  j["calibrated"] = model.calibrated;
  j["svm_c"] = model.svm_c;
  if (model.standardizer) {
    ordered_json s;
    s["mean"] = model.standardizer->mean;
    s["stddev"] = model.standardizer->stddev;
    s["degenerate"] = model.standardizer->degenerate;
    j["standardizer"] = std::move(s);
  } else {
    j["standardizer"] = nullptr;
  }
  return j;
}

LinearModel linear_model_from_json(const ordered_json& j) {
  LinearModel model;
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  model.platt_a = j.at("platt_a").get<double>();
  model.platt_b = j.at("platt_b").get<double>();
  model.calibrated = j.at("calibrated").get<bool>();
  model.svm_c = j.at("svm_c").get<double>();
  const auto& s = j.at("standardizer");
  if (!s.is_null()) {
    Standardizer std_params;
    std_params.mean = s.at("mean").get<std::vector<double>>();
    std_params.stddev = s.at("stddev").get<std::vector<double>>();
    std_params.degenerate = s.at("degenerate").get<std::vector<std::uint8_t>>();
    model.standardizer = std::move(std_params);
  }
  return model;
}

ordered_json parse_model_file(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  int version = -1;
  try {
    version = j.at("format_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path.string() + ": missing format_version");
  }
  if (version != kModelFormatVersion) {
    throw FormatError(path.string() + ": unsupported model format_version " +
                      std::to_string(version));
  }
  return j;
}

}  // namespace

void save_model(const AuthModelFile& file, const std::filesystem::path& path) {
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "authentication";
  j["target_id"] = file.target_id;
  j["default_threshold"] = file.default_threshold;
  if (file.eer) {
    j["eer"] = *file.eer;
  } else {
    j["eer"] = nullptr;
  }
  j["config"] = config_to_json(file.config);
  j["model"] = linear_model_to_json(file.model);
  write_file_atomic(path, j.dump(2) + "\n");
}

void save_model(const IdModelFile& file, const std::filesystem::path& path) {
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "identification";
  j["config"] = config_to_json(file.config);
  j["class_ids"] = file.model.class_ids;
  ordered_json models = ordered_json::array();
  for (const auto& model : file.model.models) models.push_back(linear_model_to_json(model));
  j["models"] = std::move(models);
  write_file_atomic(path, j.dump(2) + "\n");
}

ModelKind peek_model_kind(const std::filesystem::path& path) {
  const ordered_json j = parse_model_file(path);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "authentication") return ModelKind::Authentication;
  if (kind == "identification") return ModelKind::Identification;
  throw FormatError(path.string() + ": unknown model kind \"" + kind + "\"");
}

AuthModelFile load_auth_model(const std::filesystem::path& path) {
  const ordered_json j = parse_model_file(path);
  try {
    if (j.at("kind").get<std::string>() != "authentication") {
      throw FormatError(path.string() + ": not an authentication model");
    }
    AuthModelFile file;
    file.target_id = j.at("target_id").get<std::string>();
    file.default_threshold = j.at("default_threshold").get<double>();
    if (!j.at("eer").is_null()) file.eer = j.at("eer").get<double>();
    file.config = config_from_json(j.at("config"));
    file.model = linear_model_from_json(j.at("model"));
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

IdModelFile load_id_model(const std::filesystem::path& path) {
  const ordered_json j = parse_model_file(path);
  try {
    if (j.at("kind").get<std::string>() != "identification") {
      throw FormatError(path.string() + ": not an identification model");
    }
    IdModelFile file;
    file.config = config_from_json(j.at("config"));
    file.model.class_ids = j.at("class_ids").get<std::vector<std::string>>();
    for (const auto& m : j.at("models")) file.model.models.push_back(linear_model_from_json(m));
    if (file.model.models.size() != file.model.class_ids.size()) {
      throw FormatError(path.string() + ": class_ids and models length mismatch");
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace earcap
