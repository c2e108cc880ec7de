#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "earcap/error.hpp"
#include "earcap/synth.hpp"
#include "earcap/types.hpp"
#include "test_util.hpp"

using namespace earcap;

TEST_CASE("activity names round-trip") {
  CHECK(to_string(Activity::Rest) == "rest");
  CHECK(to_string(Activity::Walking) == "walking");
  CHECK(activity_from_string("rest") == Activity::Rest);
  CHECK(activity_from_string("walking") == Activity::Walking);
  CHECK_THROWS_AS(activity_from_string("jogging"), ParseError);
}

TEST_CASE("paper schedule layout: 12 rest and 8 walking over 20 sessions") {
  int rest = 0;
  int walking = 0;
  for (int s = 1; s <= 20; ++s) {
    (paper_schedule_activity(s) == Activity::Rest ? rest : walking) += 1;
  }
  CHECK(rest == 12);
  CHECK(walking == 8);
  CHECK(paper_schedule_activity(6) == Activity::Rest);
  CHECK(paper_schedule_activity(7) == Activity::Walking);
  CHECK(paper_schedule_activity(11) == Activity::Rest);
  CHECK(paper_schedule_activity(17) == Activity::Walking);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig config;
  CHECK_NOTHROW(config.validate());

  PipelineConfig bad = config;
  bad.chunk_len_frames = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);

  bad = config;
  bad.svm_c = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);

  bad = config;
  bad.head_trim_s = -1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);

  bad = config;
  bad.sample_rate_hz = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("validate_dataset accepts a well-formed synthetic dataset") {
  const Dataset dataset = generate_dataset(testutil::easy_params(2, 2, 1));
  CHECK(validate_dataset(dataset).empty());
}

TEST_CASE("validate_dataset is empty on generator output across shapes") {
  for (const auto& [participants, rest, walking] :
       {std::tuple{1, 1, 0}, std::tuple{3, 12, 8}, std::tuple{2, 6, 4}}) {
    auto params = testutil::easy_params(participants, rest, walking);
    const Dataset dataset = generate_dataset(params);
    CHECK(validate_dataset(dataset).empty());
  }
}

TEST_CASE("frame with 47 values is a channel-count violation") {
  Dataset dataset;
  auto session = testutil::make_session("P1", 1, Activity::Rest, 5);
  session.frames[2].values.pop_back();
  dataset.sessions.push_back(session);
  dataset.sessions.push_back(testutil::make_session("P2", 1, Activity::Rest, 5));

  const auto violations = validate_dataset(dataset);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "channel-count");
  CHECK(violations[0].severity == Severity::Error);
  CHECK(violations[0].location == "participant P1, session 1, frame 2");
}

TEST_CASE("duplicate (participant, session) pair is a uniqueness violation") {
  Dataset dataset;
  dataset.sessions.push_back(testutil::make_session("P1", 3, Activity::Rest, 4));
  dataset.sessions.push_back(testutil::make_session("P1", 3, Activity::Rest, 4));
  dataset.sort_sessions();

  const auto violations = validate_dataset(dataset);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "duplicate-session");
  CHECK(violations[0].location == "participant P1, session 3");
}

TEST_CASE("non-finite, negative and out-of-order frames are reported") {
  Dataset dataset;
  auto session = testutil::make_session("P1", 1, Activity::Rest, 4);
  session.frames[1].values[0] = std::numeric_limits<double>::quiet_NaN();
  session.frames[2].values[3] = -1.0;
  session.frames[3].timestamp_s = 0.0;  // earlier than frame 2
  dataset.sessions.push_back(session);

  const auto violations = validate_dataset(dataset);
  REQUIRE(violations.size() == 3);
  CHECK(violations[0].rule == "finite-values");
  CHECK(violations[1].rule == "non-negative-values");
  CHECK(violations[2].rule == "timestamp-order");
}

TEST_CASE("ragged schedules are errors, schedule-shape mismatches warnings") {
  Dataset dataset;
  dataset.sessions.push_back(testutil::make_session("P1", 1, Activity::Rest, 3));
  dataset.sessions.push_back(testutil::make_session("P1", 2, Activity::Rest, 3));
  dataset.sessions.push_back(testutil::make_session("P2", 1, Activity::Rest, 3));
  dataset.sort_sessions();

  const auto violations = validate_dataset(dataset);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "ragged-schedule");
  CHECK(violations[0].severity == Severity::Error);

  // A 20-session participant whose activities deviate from the 12/8 layout
  // gets warnings only.
  Dataset shaped;
  for (int s = 1; s <= 20; ++s) {
    shaped.sessions.push_back(
        testutil::make_session("P1", s, paper_schedule_activity(s), 2));
  }
  shaped.sessions[6].activity = Activity::Rest;  // session 7 should be walking
  const auto warnings = validate_dataset(shaped);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].rule == "schedule-shape");
  CHECK(warnings[0].severity == Severity::Warning);
  CHECK(count_errors(warnings) == 0);
  CHECK(count_warnings(warnings) == 1);
}

TEST_CASE("dataset helpers: participant ids and session lookup") {
  const Dataset dataset = generate_dataset(testutil::easy_params(3, 2, 2));
  const auto ids = dataset.participant_ids();
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == "P01");
  CHECK(ids[2] == "P03");

  const auto rest = dataset.sessions_of("P02", Activity::Rest);
  CHECK(rest.size() == 2);
  const auto all = dataset.sessions_of("P02");
  CHECK(all.size() == 4);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1]->session_index < all[i]->session_index);
  }
}

TEST_CASE("session duration") {
  const auto session = testutil::make_session("P1", 1, Activity::Rest, 16);
  CHECK(session.duration_s() == doctest::Approx(1.0));
  WearingSession empty;
  CHECK(empty.duration_s() == 0.0);
}
