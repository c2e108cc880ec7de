#include "earcap/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "earcap/error.hpp"
#include "earcap/fsio.hpp"

namespace earcap {

namespace {

using ordered_json = nlohmann::ordered_json;

struct EarRow {
  double timestamp_s = 0.0;
  std::array<double, kChannelsPerEar> values{};
};

std::string expected_header() {
  std::string h = "timestamp_s";
  for (int c = 1; c <= kChannelsPerEar; ++c) h += ",c" + std::to_string(c);
  return h;
}

double parse_cell(std::string_view cell, std::string_view stream, std::size_t line,
                  std::size_t column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
    std::ostringstream os;
    os << stream << " recording line " << line << ": column " << column << " is not a finite number (\""
       << std::string(cell) << "\")";
    throw ParseError(os.str());
  }
  return value;
}

std::vector<EarRow> parse_ear_csv(std::string_view text, std::string_view stream) {
  std::vector<EarRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const std::string header = expected_header();

  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos) ? text.substr(pos)
                                                            : text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() && pos > text.size()) break;  // trailing newline
    ++line_no;

    if (line_no == 1) {
      if (line != header) {
        throw ParseError(std::string(stream) + " recording line 1: header must be \"" + header +
                         "\"");
      }
      continue;
    }
    if (line.empty()) {
      throw ParseError(std::string(stream) + " recording line " + std::to_string(line_no) +
                       ": empty row");
    }

    std::vector<std::string_view> cells;
    std::size_t cell_start = 0;
    while (true) {
      const std::size_t comma = line.find(',', cell_start);
      if (comma == std::string_view::npos) {
        cells.push_back(line.substr(cell_start));
        break;
      }
      cells.push_back(line.substr(cell_start, comma - cell_start));
      cell_start = comma + 1;
    }
    if (cells.size() != static_cast<std::size_t>(kChannelsPerEar) + 1) {
      std::ostringstream os;
      os << stream << " recording line " << line_no << ": expected " << (kChannelsPerEar + 1)
         << " columns, got " << cells.size();
      throw ParseError(os.str());
    }

    EarRow row;
    row.timestamp_s = parse_cell(cells[0], stream, line_no, 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      row.values[c - 1] = parse_cell(cells[c], stream, line_no, c + 1);
    }
    rows.push_back(row);
  }

  if (rows.empty()) {
    throw ParseError(std::string(stream) + " recording has no data rows");
  }
  return rows;
}

}  // namespace

WearingSession parse_recording(std::string_view left_csv, std::string_view right_csv,
                               std::string participant_id, int session_index, Activity activity) {
  const std::vector<EarRow> left = parse_ear_csv(left_csv, "left");
  const std::vector<EarRow> right = parse_ear_csv(right_csv, "right");

  const std::size_t longer = std::max(left.size(), right.size());
  const std::size_t diff = longer - std::min(left.size(), right.size());
  if (static_cast<double>(diff) > 0.10 * static_cast<double>(longer)) {
    std::ostringstream os;
    os << "left stream has " << left.size() << " rows, right has " << right.size()
       << "; length mismatch exceeds 10%";
    throw AlignmentError(os.str());
  }

  // Start-aligned relative clocks; the left stream is the reference.
  const double left_t0 = left.front().timestamp_s;
  const double right_t0 = right.front().timestamp_s;

  WearingSession session;
  session.participant_id = std::move(participant_id);
  session.session_index = session_index;
  session.activity = activity;
  session.frames.reserve(std::min(left.size(), right.size()));

  std::size_t j = 0;
  for (std::size_t i = 0; i < left.size() && j < right.size(); ++i, ++j) {
    const double rel_left = left[i].timestamp_s - left_t0;
    while (j + 1 < right.size() &&
           std::abs((right[j + 1].timestamp_s - right_t0) - rel_left) <
               std::abs((right[j].timestamp_s - right_t0) - rel_left)) {
      ++j;
    }
    ElectrodeFrame frame;
    frame.timestamp_s = left[i].timestamp_s;
    frame.values.resize(kChannelCount);
    std::copy(left[i].values.begin(), left[i].values.end(), frame.values.begin());
    std::copy(right[j].values.begin(), right[j].values.end(),
              frame.values.begin() + kChannelsPerEar);
    session.frames.push_back(std::move(frame));
  }

  return session;
}

std::string serialize_recording_csv(const WearingSession& session, Ear ear) {
  std::string out = expected_header();
  out += '\n';
  const std::size_t offset = (ear == Ear::Left) ? 0 : static_cast<std::size_t>(kChannelsPerEar);
  for (const auto& frame : session.frames) {
    if (frame.values.size() != static_cast<std::size_t>(kChannelCount)) {
      throw InputError("cannot serialize a frame without exactly 48 channels");
    }
    out += format_real(frame.timestamp_s);
    for (std::size_t c = 0; c < static_cast<std::size_t>(kChannelsPerEar); ++c) {
      out += ',';
      out += format_real(frame.values[offset + c]);
    }
    out += '\n';
  }
  return out;
}

WearingSession trim_session(const WearingSession& session, double head_trim_s,
                            double tail_trim_s) {
  if (head_trim_s < 0.0 || tail_trim_s < 0.0) throw InputError("trim durations must be >= 0");
  if (head_trim_s == 0.0 && tail_trim_s == 0.0) return session;

  if (session.frames.empty()) {
    throw InsufficientDataError("cannot trim an empty session");
  }
  const double t0 = session.frames.front().timestamp_s;
  const double t_end = session.frames.back().timestamp_s;
  if (!(t_end - t0 > head_trim_s + tail_trim_s)) {
    std::ostringstream os;
    os << "session duration " << (t_end - t0) << " s cannot cover head trim " << head_trim_s
       << " s + tail trim " << tail_trim_s << " s";
    throw InsufficientDataError(os.str());
  }

  const double lo = t0 + head_trim_s;
  const double hi = t_end - tail_trim_s;
  WearingSession out;
  out.participant_id = session.participant_id;
  out.session_index = session.session_index;
  out.activity = session.activity;
  for (const auto& frame : session.frames) {
    if (frame.timestamp_s >= lo && frame.timestamp_s <= hi) out.frames.push_back(frame);
  }
  if (out.frames.empty()) {
    throw InsufficientDataError("no frames remain after trimming");
  }
  return out;
}

std::vector<Chunk> chunk_session(const WearingSession& session, int chunk_len_frames) {
  if (chunk_len_frames < 1) throw InputError("chunk_len_frames must be >= 1");
  const std::size_t len = static_cast<std::size_t>(chunk_len_frames);
  const std::size_t n_chunks = session.frames.size() / len;

  std::vector<Chunk> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t w = 0; w < n_chunks; ++w) {
    Chunk chunk;
    chunk.participant_id = session.participant_id;
    chunk.session_index = session.session_index;
    chunk.chunk_index = static_cast<int>(w);
    for (int c = 0; c < kChannelCount; ++c) {
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) {
        const auto& frame = session.frames[w * len + k];
        if (frame.values.size() != static_cast<std::size_t>(kChannelCount)) {
          throw InputError("chunk_session requires 48-channel frames");
        }
        const double v = frame.values[static_cast<std::size_t>(c)];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      // Mean clamped to the window envelope so the invariant holds exactly
      // under floating-point rounding.
      chunk.features[static_cast<std::size_t>(c)] =
          std::clamp(sum / static_cast<double>(len), lo, hi);
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

Standardizer fit_standardizer(const std::vector<Chunk>& chunks) {
  if (chunks.size() < 2) {
    throw InsufficientDataError("standardizer needs at least 2 chunks, got " +
                                std::to_string(chunks.size()));
  }
  const std::size_t n = chunks.size();
  Standardizer std_out;
  std_out.mean.assign(kChannelCount, 0.0);
  std_out.stddev.assign(kChannelCount, 0.0);
  std_out.degenerate.assign(kChannelCount, 0);

  for (const auto& chunk : chunks) {
    for (int c = 0; c < kChannelCount; ++c) {
      std_out.mean[static_cast<std::size_t>(c)] += chunk.features[static_cast<std::size_t>(c)];
    }
  }
  for (auto& m : std_out.mean) m /= static_cast<double>(n);

  for (const auto& chunk : chunks) {
    for (int c = 0; c < kChannelCount; ++c) {
      const double d =
          chunk.features[static_cast<std::size_t>(c)] - std_out.mean[static_cast<std::size_t>(c)];
      std_out.stddev[static_cast<std::size_t>(c)] += d * d;
    }
  }
  for (int c = 0; c < kChannelCount; ++c) {
    double& s = std_out.stddev[static_cast<std::size_t>(c)];
    s = std::sqrt(s / static_cast<double>(n));
    if (s < kStddevFloor) {
      s = kStddevFloor;
      std_out.degenerate[static_cast<std::size_t>(c)] = 1;
    }
  }
  return std_out;
}

std::vector<double> standardize(const Standardizer& standardizer, std::span<const double> x) {
  if (x.size() != standardizer.dim()) {
    throw InputError("standardize: input has " + std::to_string(x.size()) +
                     " dimensions, standardizer has " + std::to_string(standardizer.dim()));
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    out[c] = (x[c] - standardizer.mean[c]) / standardizer.stddev[c];
  }
  return out;
}

std::array<double, kChannelCount> apply_standardizer(const Standardizer& standardizer,
                                                     const Chunk& chunk) {
  const std::vector<double> v = standardize(standardizer, chunk.features);
  std::array<double, kChannelCount> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

namespace {

std::filesystem::path resolve_manifest_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "manifest.json";
  return path;
}

void require_safe_id(const std::string& id) {
  if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id.find("..") != std::string::npos) {
    throw InputError("participant_id \"" + id + "\" is not filesystem-safe");
  }
}

std::string session_file_name(int session_index, Ear ear) {
  std::ostringstream os;
  os << "session" << std::setw(2) << std::setfill('0') << session_index << '_'
     << (ear == Ear::Left ? "left" : "right") << ".csv";
  return os.str();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path, bool strict) {
  const std::filesystem::path manifest_file = resolve_manifest_path(manifest_path);
  const std::string text = read_file(manifest_file);

  ordered_json manifest;
  try {
    manifest = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_file.string() + ": " + e.what());
  }

  Dataset dataset;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != 1) {
      throw FormatError(manifest_file.string() + ": unsupported manifest format_version " +
                        std::to_string(version));
    }
    dataset.metadata.sample_rate_hz = manifest.at("sample_rate_hz").get<double>();
    dataset.metadata.provenance = manifest.at("provenance").get<std::string>();

    const auto base = manifest_file.parent_path();
    for (const auto& entry : manifest.at("recordings")) {
      const std::string pid = entry.at("participant_id").get<std::string>();
      const int session_index = entry.at("session_index").get<int>();
      const Activity activity = activity_from_string(entry.at("activity").get<std::string>());
      const std::filesystem::path left_path = base / entry.at("left").get<std::string>();
      const std::filesystem::path right_path = base / entry.at("right").get<std::string>();
      try {
        dataset.sessions.push_back(parse_recording(read_file(left_path), read_file(right_path),
                                                   pid, session_index, activity));
      } catch (const ParseError& e) {
        throw ParseError(left_path.string() + " / " + right_path.string() + ": " + e.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_file.string() + ": " + e.what());
  }

  dataset.sort_sessions();

  if (strict) {
    for (const auto& violation : validate_dataset(dataset)) {
      if (violation.severity == Severity::Error) {
        throw InputError("dataset invalid: " + violation.rule + " at " + violation.location +
                         " (" + violation.detail + ")");
      }
    }
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  ordered_json manifest;
  manifest["format_version"] = 1;
  manifest["sample_rate_hz"] = dataset.metadata.sample_rate_hz;
  manifest["provenance"] = dataset.metadata.provenance;
  manifest["recordings"] = ordered_json::array();

  std::vector<const WearingSession*> ordered;
  for (const auto& session : dataset.sessions) ordered.push_back(&session);
  std::sort(ordered.begin(), ordered.end(), [](const WearingSession* a, const WearingSession* b) {
    if (a->participant_id != b->participant_id) return a->participant_id < b->participant_id;
    return a->session_index < b->session_index;
  });

  for (const auto* session : ordered) {
    require_safe_id(session->participant_id);
    const std::filesystem::path pid_dir = directory / session->participant_id;
    std::filesystem::create_directories(pid_dir, ec);
    if (ec) throw IoError("cannot create " + pid_dir.string() + ": " + ec.message());

    const std::string left_name = session_file_name(session->session_index, Ear::Left);
    const std::string right_name = session_file_name(session->session_index, Ear::Right);
    write_file_atomic(pid_dir / left_name, serialize_recording_csv(*session, Ear::Left));
    write_file_atomic(pid_dir / right_name, serialize_recording_csv(*session, Ear::Right));

    ordered_json entry;
    entry["participant_id"] = session->participant_id;
    entry["session_index"] = session->session_index;
    entry["activity"] = std::string(to_string(session->activity));
    entry["left"] = session->participant_id + "/" + left_name;
    entry["right"] = session->participant_id + "/" + right_name;
    manifest["recordings"].push_back(std::move(entry));
  }

  write_file_atomic(directory / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace earcap
