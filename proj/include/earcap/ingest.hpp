#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "earcap/types.hpp"

namespace earcap {

enum class Ear { Left, Right };

inline constexpr double kStddevFloor = 1e-9;

// Per-channel z-score parameters, fit on training chunks only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;            // population stddev, clamped to kStddevFloor
  std::vector<std::uint8_t> degenerate;  // 1 where the training variance was (near) zero

  std::size_t dim() const { return mean.size(); }

  bool operator==(const Standardizer&) const = default;
};

// Parses one ear's recording CSV (`timestamp_s,c1,...,c24`) from each text and
// merges the two streams into 48-channel frames. Rows are paired by nearest
// timestamp after start-aligning the first rows; the left stream is the
// reference clock and unmatched tail rows are dropped. Streams whose row
// counts differ by more than 10% raise AlignmentError; malformed rows raise
// ParseError naming the line.
WearingSession parse_recording(std::string_view left_csv, std::string_view right_csv,
                               std::string participant_id, int session_index, Activity activity);

// One ear of a session in the recording CSV format (LF line endings, values
// in shortest round-trip decimal form).
std::string serialize_recording_csv(const WearingSession& session, Ear ear);

// Keeps frames with timestamp in [t0 + head, t_end - tail]. A session whose
// duration cannot cover both trims raises InsufficientDataError. Zero trims
// return the session unchanged.
WearingSession trim_session(const WearingSession& session, double head_trim_s,
                            double tail_trim_s);

// Consecutive non-overlapping windows of chunk_len_frames frames; each chunk
// feature is the per-channel arithmetic mean of its window. An incomplete
// tail window is dropped.
std::vector<Chunk> chunk_session(const WearingSession& session, int chunk_len_frames);

// Per-channel mean and population standard deviation over >= 2 training
// chunks. Channels with (near-)zero variance are flagged and their stddev
// clamped to kStddevFloor.
Standardizer fit_standardizer(const std::vector<Chunk>& chunks);

std::vector<double> standardize(const Standardizer& standardizer, std::span<const double> x);
std::array<double, kChannelCount> apply_standardizer(const Standardizer& standardizer,
                                                     const Chunk& chunk);

// Loads a dataset from its manifest (a manifest.json path or a directory
// containing one). With strict=true, load-time invariants (unique
// (participant, session) pairs, equal schedule lengths) are enforced by
// throwing; strict=false defers them to validate_dataset.
Dataset load_dataset(const std::filesystem::path& manifest_path, bool strict = true);

// Writes manifest.json plus one CSV per ear per session under `directory`
// (created if missing), in the exact format load_dataset reads back.
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

}  // namespace earcap
