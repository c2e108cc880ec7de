#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "earcap/error.hpp"
#include "earcap/fsio.hpp"
#include "earcap/ingest.hpp"
#include "test_util.hpp"

using namespace earcap;

namespace {

std::string csv_header() {
  std::string h = "timestamp_s";
  for (int c = 1; c <= kChannelsPerEar; ++c) h += ",c" + std::to_string(c);
  return h + "\n";
}

// value_of(row, channel) fills the 24 channel cells.
template <typename F>
std::string make_csv(std::size_t rows, double rate_hz, double start_t, F value_of) {
  std::string text = csv_header();
  for (std::size_t r = 0; r < rows; ++r) {
    text += format_real(start_t + static_cast<double>(r) / rate_hz);
    for (int c = 0; c < kChannelsPerEar; ++c) {
      text += ',';
      text += format_real(value_of(r, c));
    }
    text += '\n';
  }
  return text;
}

std::string flat_csv(std::size_t rows, double rate_hz = 15.0, double start_t = 0.0,
                     double value = 100.0) {
  return make_csv(rows, rate_hz, start_t, [value](std::size_t, int) { return value; });
}

}  // namespace

TEST_CASE("equal-length streams merge row by row") {
  const auto session = parse_recording(flat_csv(900), flat_csv(900), "P1", 1, Activity::Rest);
  CHECK(session.frames.size() == 900);
  CHECK(session.participant_id == "P1");
  CHECK(session.activity == Activity::Rest);
  for (const auto& frame : session.frames) {
    CHECK(frame.values.size() == static_cast<std::size_t>(kChannelCount));
  }
  CHECK(session.frames.front().timestamp_s == 0.0);
  CHECK(session.frames.back().timestamp_s == doctest::Approx(899.0 / 15.0));
}

TEST_CASE("longer left stream is dropped at the tail") {
  const auto session = parse_recording(flat_csv(900), flat_csv(898), "P1", 1, Activity::Rest);
  CHECK(session.frames.size() == 898);
}

TEST_CASE("nearest-timestamp pairing on a hand-worked toy") {
  // Left rows every 0.1 s; right has one fewer row (within the 10% bound) and
  // starts on a different absolute clock, so pairing happens on start-aligned
  // relative time. By hand: L0..L8 pair with R0..R8, L9 is dropped.
  const std::string left = make_csv(10, 10.0, 0.0, [](std::size_t r, int) { return 10.0 + r; });
  const std::string right =
      make_csv(9, 10.0, 100.0, [](std::size_t r, int) { return 50.0 + r; });

  const auto session = parse_recording(left, right, "P1", 1, Activity::Rest);
  REQUIRE(session.frames.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(session.frames[i].timestamp_s == doctest::Approx(0.1 * static_cast<double>(i)));
    CHECK(session.frames[i].values[0] == doctest::Approx(10.0 + static_cast<double>(i)));
    CHECK(session.frames[i].values[kChannelsPerEar] ==
          doctest::Approx(50.0 + static_cast<double>(i)));
  }
}

TEST_CASE("nearest-timestamp pairing skips denser right rows") {
  // Left at 0.0, 0.2, ... (5 Hz), right at 0.0, 0.1, ... (10 Hz), 11 rows vs
  // 10 (within the 10% bound). By hand: L_k pairs with R_{2k} for k = 0..5,
  // every odd right row is skipped, and L6..L9 run out of right partners.
  const std::string left = make_csv(10, 5.0, 0.0, [](std::size_t r, int) { return 10.0 + r; });
  const std::string right = make_csv(11, 10.0, 0.0, [](std::size_t r, int) { return 50.0 + r; });

  const auto session = parse_recording(left, right, "P1", 1, Activity::Rest);
  REQUIRE(session.frames.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(session.frames[k].values[0] == doctest::Approx(10.0 + static_cast<double>(k)));
    CHECK(session.frames[k].values[kChannelsPerEar] ==
          doctest::Approx(50.0 + 2.0 * static_cast<double>(k)));
  }
}

TEST_CASE("malformed rows raise ParseError naming the line") {
  std::string left = flat_csv(3);
  left += "0.5,1,2\n";  // line 5: 3 columns
  CHECK_THROWS_WITH_AS(parse_recording(left, flat_csv(4), "P1", 1, Activity::Rest),
                       doctest::Contains("line 5"), ParseError);

  std::string bad_cell = csv_header() + "0.0";
  for (int c = 0; c < kChannelsPerEar - 1; ++c) bad_cell += ",1";
  bad_cell += ",oops\n";
  CHECK_THROWS_WITH_AS(parse_recording(bad_cell, flat_csv(1), "P1", 1, Activity::Rest),
                       doctest::Contains("line 2"), ParseError);

  CHECK_THROWS_AS(parse_recording("", flat_csv(1), "P1", 1, Activity::Rest), ParseError);
  CHECK_THROWS_AS(parse_recording(csv_header(), flat_csv(1), "P1", 1, Activity::Rest),
                  ParseError);

  std::string wrong_header = "time,c1\n0,1\n";
  CHECK_THROWS_WITH_AS(parse_recording(wrong_header, flat_csv(1), "P1", 1, Activity::Rest),
                       doctest::Contains("line 1"), ParseError);

  std::string nan_cell = csv_header() + "0.0";
  for (int c = 0; c < kChannelsPerEar - 1; ++c) nan_cell += ",1";
  nan_cell += ",nan\n";
  CHECK_THROWS_AS(parse_recording(nan_cell, flat_csv(1), "P1", 1, Activity::Rest), ParseError);
}

TEST_CASE("CRLF line endings are accepted") {
  std::string text = flat_csv(3);
  std::string crlf;
  for (const char ch : text) {
    if (ch == '\n') crlf += '\r';
    crlf += ch;
  }
  const auto session = parse_recording(crlf, flat_csv(3), "P1", 1, Activity::Rest);
  CHECK(session.frames.size() == 3);
}

TEST_CASE("streams longer apart than 10% do not align") {
  CHECK_THROWS_AS(parse_recording(flat_csv(900), flat_csv(750), "P1", 1, Activity::Rest),
                  AlignmentError);
  // Exactly 10% is still fine.
  CHECK_NOTHROW(parse_recording(flat_csv(900), flat_csv(810), "P1", 1, Activity::Rest));
}

TEST_CASE("trim keeps the inner [head, end - tail] window") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 900);  // 60 s at 15 Hz
  const auto trimmed = trim_session(session, 15.0, 5.0);
  CHECK(trimmed.frames.size() == 600);  // 40 s of frames
  CHECK(trimmed.frames.front().timestamp_s == doctest::Approx(15.0));
  CHECK(trimmed.frames.back().timestamp_s <= session.frames.back().timestamp_s - 5.0);
  CHECK(session.frames.size() == 900);  // input untouched
}

TEST_CASE("zero trims are the identity") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 10);
  CHECK(trim_session(session, 0.0, 0.0) == session);

  const auto trimmed = trim_session(session, 0.2, 0.1);
  CHECK(trim_session(trimmed, 0.0, 0.0) == trimmed);
}

TEST_CASE("too-short sessions cannot be trimmed") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 270);  // 18 s
  CHECK_THROWS_AS(trim_session(session, 15.0, 5.0), InsufficientDataError);
  CHECK_THROWS_AS(trim_session(WearingSession{}, 1.0, 0.0), InsufficientDataError);
}

TEST_CASE("chunking: 40 frames at length 5 give 8 chunks") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 40);
  const auto chunks = chunk_session(session, 5);
  REQUIRE(chunks.size() == 8);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].chunk_index == static_cast<int>(i));
    CHECK(chunks[i].participant_id == "P1");
  }
}

TEST_CASE("chunk of identical frames equals the frame") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 5, 321.5);
  const auto chunks = chunk_session(session, 5);
  REQUIRE(chunks.size() == 1);
  for (const double v : chunks[0].features) CHECK(v == 321.5);
}

TEST_CASE("incomplete tail windows are dropped") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 4);
  CHECK(chunk_session(session, 5).empty());
  CHECK_THROWS_AS(chunk_session(session, 0), InputError);
}

TEST_CASE("chunk count and envelope properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> value(0.0, 1023.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 64;
    const int len = 1 + static_cast<int>(rng() % 9);
    auto session = testutil::make_session("P1", 1, Activity::Rest, n);
    for (auto& frame : session.frames) {
      for (auto& v : frame.values) v = value(rng);
    }
    const auto chunks = chunk_session(session, len);
    CHECK(chunks.size() == n / static_cast<std::size_t>(len));

    for (std::size_t w = 0; w < chunks.size(); ++w) {
      for (int c = 0; c < kChannelCount; ++c) {
        double lo = 1e18;
        double hi = -1e18;
        for (int k = 0; k < len; ++k) {
          const double v =
              session.frames[w * static_cast<std::size_t>(len) + static_cast<std::size_t>(k)]
                  .values[static_cast<std::size_t>(c)];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const double feature = chunks[w].features[static_cast<std::size_t>(c)];
        CHECK(feature >= lo);
        CHECK(feature <= hi);
      }
    }
  }
}

TEST_CASE("standardizer on constant chunks flags every channel degenerate") {
  auto session = testutil::make_session("P1", 1, Activity::Rest, 10, 42.0);
  const auto chunks = chunk_session(session, 5);
  const Standardizer std_params = fit_standardizer(chunks);
  for (int c = 0; c < kChannelCount; ++c) {
    CHECK(std_params.mean[static_cast<std::size_t>(c)] == 42.0);
    CHECK(std_params.stddev[static_cast<std::size_t>(c)] == kStddevFloor);
    CHECK(std_params.degenerate[static_cast<std::size_t>(c)] == 1);
  }
}

TEST_CASE("standardizer hand arithmetic: values {1, 3} give mean 2, stddev 1") {
  Chunk a;
  Chunk b;
  a.features.fill(1.0);
  b.features.fill(3.0);
  const Standardizer std_params = fit_standardizer({a, b});
  CHECK(std_params.mean[0] == 2.0);
  CHECK(std_params.stddev[0] == 1.0);  // population convention
  CHECK(std_params.degenerate[0] == 0);
  CHECK_THROWS_AS(fit_standardizer({a}), InsufficientDataError);
}

TEST_CASE("standardized output has mean 0 and stddev 1, recomputed") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(500.0, 35.0);
  std::vector<Chunk> chunks(1000);
  for (auto& chunk : chunks) {
    for (auto& v : chunk.features) v = noise(rng);
  }
  const Standardizer std_params = fit_standardizer(chunks);

  std::array<double, kChannelCount> mean{};
  std::array<double, kChannelCount> var{};
  std::vector<std::array<double, kChannelCount>> transformed;
  for (const auto& chunk : chunks) transformed.push_back(apply_standardizer(std_params, chunk));
  for (const auto& row : transformed) {
    for (int c = 0; c < kChannelCount; ++c) mean[static_cast<std::size_t>(c)] += row[static_cast<std::size_t>(c)];
  }
  for (auto& m : mean) m /= static_cast<double>(transformed.size());
  for (const auto& row : transformed) {
    for (int c = 0; c < kChannelCount; ++c) {
      const double d = row[static_cast<std::size_t>(c)] - mean[static_cast<std::size_t>(c)];
      var[static_cast<std::size_t>(c)] += d * d;
    }
  }
  for (int c = 0; c < kChannelCount; ++c) {
    CHECK(std::abs(mean[static_cast<std::size_t>(c)]) < 1e-9);
    const double stddev =
        std::sqrt(var[static_cast<std::size_t>(c)] / static_cast<double>(transformed.size()));
    CHECK(std::abs(stddev - 1.0) < 1e-9);
  }
}

TEST_CASE("applying the standardizer at its own statistics") {
  Chunk a;
  Chunk b;
  a.features.fill(10.0);
  b.features.fill(20.0);
  const Standardizer std_params = fit_standardizer({a, b});

  Chunk at_mean;
  at_mean.features.fill(15.0);
  for (const double v : apply_standardizer(std_params, at_mean)) CHECK(v == 0.0);

  Chunk at_one_sigma;
  at_one_sigma.features.fill(20.0);  // mean + stddev
  for (const double v : apply_standardizer(std_params, at_one_sigma)) CHECK(v == 1.0);

  // Standardizing twice is not idempotent on non-trivial data.
  Chunk arbitrary;
  arbitrary.features.fill(17.25);
  const auto once = apply_standardizer(std_params, arbitrary);
  Chunk once_chunk;
  once_chunk.features = once;
  const auto twice = apply_standardizer(std_params, once_chunk);
  CHECK(once != twice);

  std::vector<double> short_vec(10, 0.0);
  CHECK_THROWS_AS(standardize(std_params, short_vec), InputError);
}

TEST_CASE("parse -> serialize -> parse is bit-exact") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> value(0.0, 1023.0);
  auto session = testutil::make_session("P1", 4, Activity::Walking, 37);
  for (auto& frame : session.frames) {
    for (auto& v : frame.values) v = value(rng);
  }

  const std::string left = serialize_recording_csv(session, Ear::Left);
  const std::string right = serialize_recording_csv(session, Ear::Right);
  const auto reparsed = parse_recording(left, right, "P1", 4, Activity::Walking);
  CHECK(reparsed == session);

  const std::string left2 = serialize_recording_csv(reparsed, Ear::Left);
  CHECK(left2 == left);
}
