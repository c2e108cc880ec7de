#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace earcap {

inline constexpr int kChannelsPerEar = 24;
inline constexpr int kChannelCount = 2 * kChannelsPerEar;  // L1..L24 then R1..R24
inline constexpr double kCountMin = 0.0;
inline constexpr double kCountMax = 1023.0;  // 10-bit device counts

enum class Activity { Rest, Walking };

std::string_view to_string(Activity activity);
Activity activity_from_string(std::string_view text);  // throws ParseError

// One capacitive sample across both ears. values[0..23] are the left ear,
// values[24..47] the right ear. Well-formed frames have exactly kChannelCount
// finite, non-negative entries; validate_dataset reports anything else.
struct ElectrodeFrame {
  double timestamp_s = 0.0;
  std::vector<double> values;

  bool operator==(const ElectrodeFrame&) const = default;
};

struct WearingSession {
  std::string participant_id;
  int session_index = 0;  // 1-based
  Activity activity = Activity::Rest;
  std::vector<ElectrodeFrame> frames;

  double duration_s() const;

  bool operator==(const WearingSession&) const = default;
};

// Per-electrode arithmetic mean over one window of consecutive frames.
struct Chunk {
  std::string participant_id;
  int session_index = 0;
  int chunk_index = 0;
  std::array<double, kChannelCount> features{};

  bool operator==(const Chunk&) const = default;
};

struct DatasetMetadata {
  double sample_rate_hz = 15.0;
  std::string provenance = "synthetic";  // "recorded" or "synthetic"

  bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
  DatasetMetadata metadata;
  std::vector<WearingSession> sessions;  // kept sorted by (participant_id, session_index)

  std::vector<std::string> participant_ids() const;
  std::vector<const WearingSession*> sessions_of(
      std::string_view participant_id, std::optional<Activity> activity = {}) const;
  void sort_sessions();

  bool operator==(const Dataset&) const = default;
};

struct PipelineConfig {
  int chunk_len_frames = 5;
  double head_trim_s = 15.0;
  double tail_trim_s = 5.0;
  double svm_c = 0.025;
  double sample_rate_hz = 15.0;
  std::uint64_t rng_seed = 1;
  bool standardize = true;

  void validate() const;  // throws InputError

  bool operator==(const PipelineConfig&) const = default;
};

enum class Severity { Warning, Error };

struct Violation {
  Severity severity = Severity::Error;
  std::string rule;      // stable identifier, e.g. "channel-count"
  std::string location;  // "participant P01, session 3, frame 17"
  std::string detail;
};

// Checks every dataset invariant and returns one entry per violation, in
// deterministic (participant, session, frame) order. The expected
// rest/walking layout on 20-session schedules is a warning; everything
// else is an error. Never mutates the input.
std::vector<Violation> validate_dataset(const Dataset& dataset);

std::size_t count_errors(const std::vector<Violation>& violations);
std::size_t count_warnings(const std::vector<Violation>& violations);

// Rest/walking activity the study schedule assigns to a 1-based session
// index on a 20-session schedule: 1-6 and 11-16 rest, 7-10 and 17-20 walking.
Activity paper_schedule_activity(int session_index);

}  // namespace earcap
