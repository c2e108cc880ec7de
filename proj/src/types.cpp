#include "earcap/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "earcap/error.hpp"

namespace earcap {

std::string_view to_string(Activity activity) {
  return activity == Activity::Rest ? "rest" : "walking";
}

Activity activity_from_string(std::string_view text) {
  if (text == "rest") return Activity::Rest;
  if (text == "walking") return Activity::Walking;
  throw ParseError("unknown activity \"" + std::string(text) + "\" (expected rest or walking)");
}

double WearingSession::duration_s() const {
  if (frames.size() < 2) return 0.0;
  return frames.back().timestamp_s - frames.front().timestamp_s;
}

std::vector<std::string> Dataset::participant_ids() const {
  std::vector<std::string> ids;
  for (const auto& session : sessions) {
    if (ids.empty() || ids.back() != session.participant_id) {
      if (std::find(ids.begin(), ids.end(), session.participant_id) == ids.end()) {
        ids.push_back(session.participant_id);
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<const WearingSession*> Dataset::sessions_of(
    std::string_view participant_id, std::optional<Activity> activity) const {
  std::vector<const WearingSession*> out;
  for (const auto& session : sessions) {
    if (session.participant_id != participant_id) continue;
    if (activity && session.activity != *activity) continue;
    out.push_back(&session);
  }
  std::sort(out.begin(), out.end(), [](const WearingSession* a, const WearingSession* b) {
    return a->session_index < b->session_index;
  });
  return out;
}

void Dataset::sort_sessions() {
  std::sort(sessions.begin(), sessions.end(),
            [](const WearingSession& a, const WearingSession& b) {
              if (a.participant_id != b.participant_id) return a.participant_id < b.participant_id;
              return a.session_index < b.session_index;
            });
}

void PipelineConfig::validate() const {
  if (chunk_len_frames < 1) throw InputError("chunk_len_frames must be >= 1");
  if (!(svm_c > 0.0)) throw InputError("svm_c must be > 0");
  if (head_trim_s < 0.0 || tail_trim_s < 0.0) throw InputError("trim durations must be >= 0");
  if (!(sample_rate_hz > 0.0)) throw InputError("sample_rate_hz must be > 0");
}

Activity paper_schedule_activity(int session_index) {
  const int phase = (session_index - 1) % 10;  // 6 rest then 4 walking, twice
  return phase < 6 ? Activity::Rest : Activity::Walking;
}

namespace {

std::string session_location(const WearingSession& s) {
  std::ostringstream os;
  os << "participant " << s.participant_id << ", session " << s.session_index;
  return os.str();
}

std::string frame_location(const WearingSession& s, std::size_t frame_index) {
  std::ostringstream os;
  os << session_location(s) << ", frame " << frame_index;
  return os.str();
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;

  std::vector<const WearingSession*> ordered;
  ordered.reserve(dataset.sessions.size());
  for (const auto& s : dataset.sessions) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const WearingSession* a, const WearingSession* b) {
    if (a->participant_id != b->participant_id) return a->participant_id < b->participant_id;
    return a->session_index < b->session_index;
  });

  std::set<std::pair<std::string, int>> seen;
  for (const auto* s : ordered) {
    const auto key = std::make_pair(s->participant_id, s->session_index);
    if (!seen.insert(key).second) {
      out.push_back({Severity::Error, "duplicate-session", session_location(*s),
                     "duplicate (participant_id, session_index) pair"});
    }

    double prev_t = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s->frames.size(); ++k) {
      const auto& frame = s->frames[k];
      if (frame.values.size() != static_cast<std::size_t>(kChannelCount)) {
        std::ostringstream detail;
        detail << "expected " << kChannelCount << " channels, got " << frame.values.size();
        out.push_back({Severity::Error, "channel-count", frame_location(*s, k), detail.str()});
      }
      for (std::size_t c = 0; c < frame.values.size(); ++c) {
        const double v = frame.values[c];
        if (!std::isfinite(v)) {
          std::ostringstream detail;
          detail << "channel " << c << " is not finite";
          out.push_back({Severity::Error, "finite-values", frame_location(*s, k), detail.str()});
        } else if (v < 0.0) {
          std::ostringstream detail;
          detail << "channel " << c << " is negative (" << v << ")";
          out.push_back(
              {Severity::Error, "non-negative-values", frame_location(*s, k), detail.str()});
        }
      }
      if (frame.timestamp_s < prev_t) {
        out.push_back({Severity::Error, "timestamp-order", frame_location(*s, k),
                       "timestamp decreases relative to the previous frame"});
      }
      prev_t = frame.timestamp_s;
    }
  }

  // Session schedules must have equal length across participants.
  std::map<std::string, int> counts;
  for (const auto* s : ordered) counts[s->participant_id] += 1;
  if (!counts.empty()) {
    const int expected = counts.begin()->second;
    for (const auto& [pid, n] : counts) {
      if (n != expected) {
        std::ostringstream detail;
        detail << "participant has " << n << " sessions, " << counts.begin()->first << " has "
               << expected;
        out.push_back({Severity::Error, "ragged-schedule", "participant " + pid, detail.str()});
      }
    }
  }

  // The 20-session study layout is an expectation, not a hard rule.
  for (const auto& [pid, n] : counts) {
    if (n != 20) continue;
    for (const auto* s : ordered) {
      if (s->participant_id != pid) continue;
      if (s->session_index < 1 || s->session_index > 20) continue;
      const Activity expected = paper_schedule_activity(s->session_index);
      if (s->activity != expected) {
        std::ostringstream detail;
        detail << "activity is " << to_string(s->activity) << ", 20-session schedule expects "
               << to_string(expected);
        out.push_back({Severity::Warning, "schedule-shape", session_location(*s), detail.str()});
      }
    }
  }

  return out;
}

std::size_t count_errors(const std::vector<Violation>& violations) {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [](const Violation& v) { return v.severity == Severity::Error; }));
}

std::size_t count_warnings(const std::vector<Violation>& violations) {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [](const Violation& v) { return v.severity == Severity::Warning; }));
}

}  // namespace earcap
