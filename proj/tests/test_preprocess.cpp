#include <doctest.h>

#include <random>

#include "aisdet/preprocess.hpp"

using namespace aisdet;

namespace {

PreprocessConfig cfg() {
  PreprocessConfig c;
  c.roi = Roi{47.0, 49.0, -7.0, -4.0};
  return c;
}

AisMessage msg(uint64_t mmsi, int64_t t, double lat = 48.0, double lon = -5.5,
               double sog = 10.0, double cog = 90.0) {
  AisMessage m;
  m.mmsi = mmsi;
  m.timestamp = t;
  m.lat = lat;
  m.lon = lon;
  m.sog = sog;
  m.cog = cog;
  return m;
}

template <typename T>
int count_events(const std::vector<Event>& events) {
  int n = 0;
  for (const auto& e : events) {
    if (std::holds_alternative<T>(e)) ++n;
  }
  return n;
}

template <typename T>
const T* find_event(const std::vector<Event>& events) {
  for (const auto& e : events) {
    if (auto* p = std::get_if<T>(&e)) return p;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("validate applies the ROI and speed filters") {
  auto c = cfg();
  CHECK(!validate(msg(1, 0), c).has_value());
  CHECK(validate(msg(1, 0, 50.0, -5.5), c) == DropReason::out_of_roi);
  CHECK(validate(msg(1, 0, 48.0, -3.9), c) == DropReason::out_of_roi);
  CHECK(validate(msg(1, 0, 48.0, -5.5, 30.1), c) == DropReason::over_speed);
  // the cap itself is allowed
  CHECK(!validate(msg(1, 0, 48.0, -5.5, 30.0), c).has_value());
  // boundary positions are in
  CHECK(!validate(msg(1, 0, 47.0, -7.0), c).has_value());
  CHECK(!validate(msg(1, 0, 49.0, -4.0), c).has_value());
}

TEST_CASE("resample midpoint and grid layout") {
  Track t;
  t.mmsi = 5;
  t.points = {msg(5, 1000, 48.0, -6.0, 10.0, 90.0),
              msg(5, 2200, 48.2, -5.8, 14.0, 110.0)};
  Track r = resample(t, 600);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0].timestamp == 1000);
  CHECK(r.points[1].timestamp == 1600);
  CHECK(r.points[2].timestamp == 2200);
  // midpoint of the source interval: fraction 600/1200 = 0.5
  CHECK(r.points[1].lat == doctest::Approx(48.1));
  CHECK(r.points[1].lon == doctest::Approx(-5.9));
  CHECK(r.points[1].sog == doctest::Approx(12.0));
  CHECK(r.points[1].cog == doctest::Approx(100.0));
  CHECK(r.points[0] == t.points[0]);
  CHECK(r.points[2] == t.points[1]);
}

TEST_CASE("resample interpolates cog along the short arc") {
  Track t;
  t.mmsi = 5;
  t.points = {msg(5, 0, 48.0, -6.0, 10.0, 350.0),
              msg(5, 1200, 48.0, -6.0, 10.0, 10.0)};
  Track r = resample(t, 600);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[1].cog == doctest::Approx(0.0).epsilon(1e-9));

  t.points[0].cog = 10.0;
  t.points[1].cog = 350.0;
  r = resample(t, 600);
  CHECK(r.points[1].cog == doctest::Approx(0.0).epsilon(1e-9));

  // plain case stays linear
  t.points[0].cog = 100.0;
  t.points[1].cog = 140.0;
  r = resample(t, 600);
  CHECK(r.points[1].cog == doctest::Approx(120.0));
}

TEST_CASE("resample is idempotent on already-gridded tracks") {
  Track t;
  t.mmsi = 9;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i <= 40; ++i) {
    t.points.push_back(msg(9, 5000 + 600 * i, 47.5 + 0.02 * i,
                           -6.0 + 0.01 * i + 0.001 * u(rng), 8.0 + u(rng),
                           normalize_cog(80.0 + 5 * u(rng))));
  }
  Track once = resample(t, 600);
  CHECK(once.points == t.points);
  Track twice = resample(once, 600);
  CHECK(twice.points == once.points);
}

TEST_CASE("resample rejects degenerate tracks") {
  Track t;
  t.mmsi = 1;
  CHECK_THROWS_AS(resample(t, 600), TooFewPointsError);
  t.points = {msg(1, 0)};
  CHECK_THROWS_AS(resample(t, 600), TooFewPointsError);
}

TEST_CASE("operator splits tracks on gaps over the threshold") {
  OperatorState op(cfg());
  (void)op.process(msg(7, 0));
  (void)op.process(msg(7, 3600));
  // 3h59m after the last point: same track
  auto ev = op.process(msg(7, 3600 + 4 * 3600 - 60));
  CHECK(count_events<TrackClosed>(ev) == 0);
  CHECK(count_events<TrackExtended>(ev) == 1);
  // 5h after that: gap closes the old track, opens a new one
  int64_t t_next = 3600 + 4 * 3600 - 60 + 5 * 3600;
  ev = op.process(msg(7, t_next));
  auto* closed = find_event<TrackClosed>(ev);
  REQUIRE(closed != nullptr);
  CHECK(closed->id == TrackId{7, 0});
  CHECK(closed->track.points.size() == 3);
  auto* opened = find_event<TrackOpened>(ev);
  REQUIRE(opened != nullptr);
  CHECK(opened->id == TrackId{7, t_next});
  CHECK(op.open_track_count() == 1);
}

TEST_CASE("operator drops non-monotone and duplicate timestamps per vessel") {
  OperatorState op(cfg());
  (void)op.process(msg(7, 1000));
  auto ev = op.process(msg(7, 1000));
  auto* d = find_event<MessageDropped>(ev);
  REQUIRE(d != nullptr);
  CHECK(d->reason == DropReason::duplicate_time);
  ev = op.process(msg(7, 900));
  d = find_event<MessageDropped>(ev);
  REQUIRE(d != nullptr);
  CHECK(d->reason == DropReason::non_monotone_time);
  // another vessel is unaffected
  ev = op.process(msg(8, 900));
  CHECK(count_events<TrackOpened>(ev) == 1);
  CHECK(op.counters().dropped == 2);
  CHECK(op.counters().dropped_by_reason[2] == 1);
  CHECK(op.counters().dropped_by_reason[3] == 1);
}

TEST_CASE("detection fires at min duration and every redetect period") {
  auto c = cfg();
  OperatorState op(c);
  std::vector<uint32_t> marks;
  // one report per 10 minutes for 7 hours
  for (int i = 0; i <= 42; ++i) {
    auto ev = op.process(msg(3, i * 600, 48.0 + 0.001 * i, -5.5));
    if (auto* due = find_event<DetectionDue>(ev)) {
      marks.push_back(due->watermark);
      CHECK(due->id == TrackId{3, 0});
      CHECK(due->raw.points.size() == static_cast<size_t>(i + 1));
    }
  }
  // watermark 0 at 4h, then hourly: 4h, 5h, 6h, 7h
  CHECK(marks == std::vector<uint32_t>{0, 1, 2, 3});
  CHECK(op.counters().tested == 1);
  CHECK(op.counters().built == 0);
}

TEST_CASE("a sparse report cadence emits every due watermark at once") {
  OperatorState op(cfg());
  (void)op.process(msg(3, 0));
  (void)op.process(msg(3, 12600));
  // third report lands at 7h: watermarks 0 through 3 are all due
  auto ev = op.process(msg(3, 25200));
  std::vector<uint32_t> marks;
  for (const auto& e : ev) {
    if (auto* due = std::get_if<DetectionDue>(&e)) marks.push_back(due->watermark);
  }
  CHECK(marks == std::vector<uint32_t>{0, 1, 2, 3});
}

TEST_CASE("flush closes only stale tracks; flush_all closes everything") {
  OperatorState op(cfg());
  (void)op.process(msg(1, 0));
  (void)op.process(msg(2, 3 * 3600));
  auto ev = op.flush(5 * 3600);  // vessel 1 stale (5h), vessel 2 fresh (2h)
  CHECK(count_events<TrackClosed>(ev) == 1);
  CHECK(find_event<TrackClosed>(ev)->id.mmsi == 1);
  CHECK(op.open_track_count() == 1);
  ev = op.flush_all();
  CHECK(count_events<TrackClosed>(ev) == 1);
  CHECK(op.open_track_count() == 0);
  CHECK(op.counters().built == 2);
}

TEST_CASE("operator state survives a serialize round-trip") {
  OperatorState op(cfg());
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 400; ++i) {
    uint64_t mmsi = 100 + rng() % 5;
    (void)op.process(msg(mmsi, i * 400 + static_cast<int64_t>(rng() % 100),
                         47.2 + 1.5 * u(rng), -6.8 + 2.0 * u(rng), 20 * u(rng),
                         360 * u(rng)));
  }
  auto bytes = op.serialize();
  OperatorState copy = OperatorState::deserialize(bytes, cfg());
  CHECK(copy.open_track_count() == op.open_track_count());
  CHECK(copy.serialize() == bytes);
  // both halves must keep evolving identically
  for (int i = 0; i < 50; ++i) {
    auto m = msg(100 + i % 5, 400 * 400 + i * 300);
    auto a = op.process(m);
    auto b = copy.process(m);
    CHECK(a.size() == b.size());
  }
  CHECK(copy.serialize() == op.serialize());
}

TEST_CASE("counters satisfy the accounting identity") {
  OperatorState op(cfg());
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0, 1);
  std::map<uint64_t, int64_t> clock;
  for (int i = 0; i < 3000; ++i) {
    uint64_t mmsi = 10 + rng() % 8;
    int64_t t = clock[mmsi] += static_cast<int64_t>(rng() % 7200);
    double lat = 46.5 + 3.0 * u(rng);  // sometimes out of ROI
    (void)op.process(msg(mmsi, t, lat, -5.5, 35 * u(rng), 360 * u(rng)));
  }
  (void)op.flush_all();
  const auto& c = op.counters();
  CHECK(c.processed == 3000);
  CHECK(c.processed == c.kept + c.dropped);
  uint64_t by_reason = 0;
  for (uint64_t n : c.dropped_by_reason) by_reason += n;
  CHECK(c.dropped == by_reason);
  CHECK(c.built == c.tested + c.rejected());
  CHECK(c.built > 0);
}

TEST_CASE("preprocess_batch keeps only resampled tracks of minimum duration") {
  auto c = cfg();
  std::vector<AisMessage> in;
  // vessel 1: 5 hours of 10-minute reports, kept
  for (int i = 0; i <= 30; ++i) in.push_back(msg(1, i * 600, 48.0, -5.0));
  // vessel 2: one hour only, rejected as too short
  for (int i = 0; i <= 6; ++i) in.push_back(msg(2, i * 600, 48.5, -5.0));
  auto out = preprocess_batch(in, c);
  REQUIRE(out.tracks.size() == 1);
  REQUIRE(out.track_ids.size() == 1);
  CHECK(out.track_ids[0] == TrackId{1, 0});
  CHECK(out.tracks[0].points.size() == 31);
  CHECK(out.counters.built == 2);
  CHECK(out.counters.tested == 1);
}
