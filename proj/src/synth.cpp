#include "earcap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "earcap/error.hpp"
#include "earcap/fsio.hpp"
#include "earcap/ingest.hpp"

namespace earcap {

namespace {

using ordered_json = nlohmann::ordered_json;

// Box-Muller over raw mt19937_64 output. The engine's sequence is specified
// by the standard and std::normal_distribution is not, so this keeps
// generated datasets identical across standard libraries.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::acos(-1.0) * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::string participant_name(int index, int total) {
  int width = 1;
  for (int v = total; v >= 10; v /= 10) ++width;
  width = std::max(width, 2);
  std::ostringstream os;
  os << 'P' << std::setw(width) << std::setfill('0') << (index + 1);
  return os.str();
}

// The study schedule's block pattern: up to 6 rest sessions, then up to 4
// walking, repeated until both pools are exhausted.
std::vector<Activity> build_schedule(int n_rest, int n_walking) {
  std::vector<Activity> schedule;
  int rest_left = n_rest;
  int walking_left = n_walking;
  while (rest_left > 0 || walking_left > 0) {
    for (int i = 0; i < 6 && rest_left > 0; ++i, --rest_left) {
      schedule.push_back(Activity::Rest);
    }
    for (int i = 0; i < 4 && walking_left > 0; ++i, --walking_left) {
      schedule.push_back(Activity::Walking);
    }
  }
  return schedule;
}

}  // namespace

void GeneratorParams::validate() const {
  if (n_participants < 1) throw InputError("n_participants must be >= 1");
  if (n_rest_sessions < 0 || n_walking_sessions < 0) {
    throw InputError("session counts must be >= 0");
  }
  if (n_rest_sessions + n_walking_sessions < 1) {
    throw InputError("at least one session per participant is required");
  }
  if (!(session_duration_s > 0.0)) throw InputError("session_duration_s must be > 0");
  if (!(sample_rate_hz > 0.0)) throw InputError("sample_rate_hz must be > 0");
  if (user_sigma < 0.0 || session_sigma < 0.0 || frame_sigma < 0.0 || motion_sigma_extra < 0.0) {
    throw InputError("sigmas must be >= 0");
  }
}

Dataset generate_dataset(const GeneratorParams& params) {
  params.validate();

  const auto n_frames =
      static_cast<std::size_t>(std::llround(params.session_duration_s * params.sample_rate_hz));
  if (n_frames == 0) throw InputError("session duration yields zero frames");

  GaussianSampler normal(params.rng_seed);
  const std::vector<Activity> schedule =
      build_schedule(params.n_rest_sessions, params.n_walking_sessions);

  Dataset dataset;
  dataset.metadata.sample_rate_hz = params.sample_rate_hz;
  dataset.metadata.provenance = "synthetic";

  std::array<double, kChannelCount> signature{};
  std::array<double, kChannelCount> offset{};

  for (int p = 0; p < params.n_participants; ++p) {
    const std::string pid = participant_name(p, params.n_participants);
    for (int c = 0; c < kChannelCount; ++c) {
      signature[static_cast<std::size_t>(c)] = params.baseline + params.user_sigma * normal();
    }

    for (std::size_t s = 0; s < schedule.size(); ++s) {
      WearingSession session;
      session.participant_id = pid;
      session.session_index = static_cast<int>(s) + 1;
      session.activity = schedule[s];
      session.frames.reserve(n_frames);

      for (int c = 0; c < kChannelCount; ++c) {
        offset[static_cast<std::size_t>(c)] = params.session_sigma * normal();
      }
      const double motion_sigma =
          schedule[s] == Activity::Walking ? params.motion_sigma_extra : 0.0;

      for (std::size_t k = 0; k < n_frames; ++k) {
        ElectrodeFrame frame;
        frame.timestamp_s = static_cast<double>(k) / params.sample_rate_hz;
        frame.values.resize(kChannelCount);
        for (int c = 0; c < kChannelCount; ++c) {
          const std::size_t ci = static_cast<std::size_t>(c);
          // Motion noise is drawn unconditionally so changing one sigma
          // never shifts the draws behind any other component.
          const double value = signature[ci] + offset[ci] + params.frame_sigma * normal() +
                               motion_sigma * normal();
          frame.values[ci] = std::clamp(value, kCountMin, kCountMax);
        }
        session.frames.push_back(std::move(frame));
      }
      dataset.sessions.push_back(std::move(session));
    }
  }

  dataset.sort_sessions();
  return dataset;
}

void export_dataset(const Dataset& dataset, const std::filesystem::path& directory,
                    const GeneratorParams* params) {
  save_dataset(dataset, directory);
  if (params) save_generator_params(*params, directory / "generator_params.json");
}

void save_generator_params(const GeneratorParams& params, const std::filesystem::path& path) {
  ordered_json j;
  j["format_version"] = 1;
  j["n_participants"] = params.n_participants;
  j["n_rest_sessions"] = params.n_rest_sessions;
  j["n_walking_sessions"] = params.n_walking_sessions;
  j["session_duration_s"] = params.session_duration_s;
  j["sample_rate_hz"] = params.sample_rate_hz;
  j["baseline"] = params.baseline;
  j["user_sigma"] = params.user_sigma;
  j["session_sigma"] = params.session_sigma;
  j["frame_sigma"] = params.frame_sigma;
  j["motion_sigma_extra"] = params.motion_sigma_extra;
  j["rng_seed"] = params.rng_seed;
  write_file_atomic(path, j.dump(2) + "\n");
}

GeneratorParams load_generator_params(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != 1) {
      throw FormatError(path.string() + ": unsupported generator params format_version " +
                        std::to_string(version));
    }
    GeneratorParams params;
    params.n_participants = j.at("n_participants").get<int>();
    params.n_rest_sessions = j.at("n_rest_sessions").get<int>();
    params.n_walking_sessions = j.at("n_walking_sessions").get<int>();
    params.session_duration_s = j.at("session_duration_s").get<double>();
    params.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    params.baseline = j.at("baseline").get<double>();
    params.user_sigma = j.at("user_sigma").get<double>();
    params.session_sigma = j.at("session_sigma").get<double>();
    params.frame_sigma = j.at("frame_sigma").get<double>();
    params.motion_sigma_extra = j.at("motion_sigma_extra").get<double>();
    params.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    params.validate();
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace earcap
