#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "aisdet/bench.hpp"

using namespace aisdet;

namespace {

SyntheticScenario small_scenario() {
  SyntheticScenario s;
  s.lanes.push_back(
      Lane{{{47.2, -6.8}, {47.8, -5.6}, {48.3, -4.6}}, 12.0, 0});
  s.lanes.push_back(Lane{{{48.6, -6.9}, {47.3, -4.4}}, 14.0, 0});
  s.vessels_per_lane = 4;
  s.duration_s = 8 * 3600;
  s.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("timing stats on a hand-checked sample set") {
  // n = 5: quartiles interpolate at h = (n-1)p
  auto s = timing_stats({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)));  // population variance 2
  CHECK(s.min == 1.0);
  CHECK(s.q1 == doctest::Approx(2.0));
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.q3 == doctest::Approx(4.0));
  CHECK(s.max == 5.0);

  // n = 4: h = 0.75, 1.5, 2.25
  s = timing_stats({1.0, 2.0, 3.0, 4.0});
  CHECK(s.q1 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q3 == doctest::Approx(3.25));

  s = timing_stats({7.0});
  CHECK(s.mean == 7.0);
  CHECK(s.std == 0.0);
  CHECK(s.q1 == 7.0);
  CHECK(s.q3 == 7.0);

  CHECK_THROWS_AS(timing_stats({}), EmptySamplesError);
}

TEST_CASE("timing stats match a direct order-statistics oracle") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 1 + rng() % 300;
    std::vector<double> xs(n);
    for (auto& x : xs) x = u(rng);
    auto s = timing_stats(xs);

    std::sort(xs.begin(), xs.end());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    auto quantile = [&](double p) {
      double h = (n - 1) * p;
      size_t lo = static_cast<size_t>(std::floor(h));
      size_t hi = std::min(lo + 1, n - 1);
      return xs[lo] + (h - lo) * (xs[hi] - xs[lo]);
    };
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.std == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    CHECK(s.min == xs.front());
    CHECK(s.max == xs.back());
    CHECK(s.q1 == doctest::Approx(quantile(0.25)).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(quantile(0.5)).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(quantile(0.75)).epsilon(1e-12));
  }
}

TEST_CASE("unique-MMSI CDF on a hand-checked stream") {
  auto m = [](uint64_t mmsi, int64_t t) {
    AisMessage x;
    x.mmsi = mmsi;
    x.timestamp = t;
    return x;
  };
  // windows of 600 anchored at 1200: [1200,1800) and [1800,2400)
  std::vector<AisMessage> msgs{m(1, 1250), m(2, 1300), m(1, 1400),
                               m(3, 1900), m(3, 1950)};
  auto curve = unique_mmsi_cdf(msgs, 600);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0] == CdfPoint{1, 0.5});
  CHECK(curve[1] == CdfPoint{2, 1.0});
  CHECK(cdf_value_at(curve, 0.5) == 1);
  CHECK(cdf_value_at(curve, 0.51) == 2);
  CHECK(cdf_value_at(curve, 1.0) == 2);

  // a gap leaves empty windows, counted as zero: five windows total,
  // two empty, two with one vessel, one with two
  msgs.push_back(m(9, 3700));
  curve = unique_mmsi_cdf(msgs, 600);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0] == CdfPoint{0, 0.4});
  CHECK(curve[1].value == 1);
  CHECK(curve[1].fraction == doctest::Approx(0.8));

  auto text = cdf_reading(curve, 0.8);
  CHECK(text.find("80") != std::string::npos);
  CHECK(text.find("1") != std::string::npos);
}

TEST_CASE("unique-MMSI CDF matches a brute-force oracle") {
  std::mt19937_64 rng(97);
  std::vector<AisMessage> msgs;
  int64_t t0 = 1500000137;
  for (int i = 0; i < 5000; ++i) {
    AisMessage m;
    m.mmsi = 100 + rng() % 80;
    m.timestamp = t0 + static_cast<int64_t>(rng() % 40000);
    msgs.push_back(m);
  }
  const int64_t window = 600;
  auto curve = unique_mmsi_cdf(msgs, window);

  // oracle: bucket every message, then accumulate counts
  int64_t lo = std::numeric_limits<int64_t>::max();
  int64_t hi = std::numeric_limits<int64_t>::min();
  for (const auto& m : msgs) {
    lo = std::min(lo, m.timestamp);
    hi = std::max(hi, m.timestamp);
  }
  int64_t anchor = lo / window * window;
  size_t n_windows = static_cast<size_t>((hi - anchor) / window) + 1;
  std::vector<std::set<uint64_t>> buckets(n_windows);
  for (const auto& m : msgs) {
    buckets[static_cast<size_t>((m.timestamp - anchor) / window)].insert(m.mmsi);
  }
  std::vector<uint64_t> counts;
  for (const auto& b : buckets) counts.push_back(b.size());
  std::sort(counts.begin(), counts.end());

  double cum = 0;
  size_t ci = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (i + 1 < counts.size() && counts[i + 1] == counts[i]) continue;
    cum = static_cast<double>(i + 1) / counts.size();
    REQUIRE(ci < curve.size());
    CHECK(curve[ci].value == counts[i]);
    CHECK(curve[ci].fraction == doctest::Approx(cum).epsilon(1e-12));
    ++ci;
  }
  CHECK(ci == curve.size());
}

TEST_CASE("capacity estimate worked examples") {
  CHECK(capacity_estimate(400.0, 2.07, 600.0) == 2);
  CHECK(capacity_estimate(100.0, 2.07, 600.0) == 1);
  CHECK(capacity_estimate(1.0, 0.001, 600.0) == 1);  // floor of one core
  CHECK(capacity_estimate(1000.0, 2.07, 600.0) == 4);
  CHECK_THROWS_AS(capacity_estimate(0.0, 2.07, 600.0), std::domain_error);
  CHECK(capacity_estimate(290.0, 2.07, 600.0) == 2);  // 1.0005 rounds up
}

TEST_CASE("generator is deterministic and honors vessel counts") {
  auto s = small_scenario();
  auto a = generate(s);
  auto b = generate(s);
  CHECK(a.messages.size() == b.messages.size());
  CHECK(a.messages == b.messages);
  CHECK(a.truth.size() == b.truth.size());
  CHECK(a.clean_vessels == 8);
  CHECK(a.anomalous_vessels == 0);
  CHECK(std::is_sorted(a.messages.begin(), a.messages.end(),
                       [](const AisMessage& x, const AisMessage& y) {
                         return x.timestamp < y.timestamp;
                       }));
  std::unordered_set<uint64_t> mmsis;
  for (const auto& m : a.messages) mmsis.insert(m.mmsi);
  CHECK(mmsis.size() == 8);

  s.seed = 6;
  auto c = generate(s);
  CHECK(c.messages != a.messages);

  s.lanes[0].vessels = 3;  // per-lane override
  auto d = generate(s);
  std::unordered_set<uint64_t> overridden;
  for (const auto& m : d.messages) overridden.insert(m.mmsi);
  CHECK(overridden.size() == 7);
}

TEST_CASE("zero noise keeps vessels on the lane polyline") {
  SyntheticScenario s;
  s.lanes.push_back(Lane{{{47.0, -6.0}, {47.0, -5.0}}, 10.0, 0});
  s.vessels_per_lane = 2;
  s.cross_track_sigma_deg = 0.0;
  s.speed_sigma_kn = 0.0;
  s.cog_sigma_deg = 0.0;
  s.duration_s = 4 * 3600;
  auto traffic = generate(s);
  REQUIRE(!traffic.messages.empty());
  for (const auto& m : traffic.messages) {
    CHECK(m.lat == doctest::Approx(47.0).epsilon(1e-9));
    CHECK(m.lon >= -6.0 - 1e-9);
    CHECK(m.lon <= -5.0 + 1e-9);
    CHECK(m.sog == doctest::Approx(10.0));
    CHECK(m.cog == doctest::Approx(90.0).epsilon(1e-6));  // due east
  }
}

TEST_CASE("anomaly injections are labeled and sized by rounded fractions") {
  auto s = small_scenario();
  s.anomalies = {{AnomalyType::stop, 0.25}, {AnomalyType::loop, 0.125}};
  auto traffic = generate(s);
  CHECK(traffic.clean_vessels == 8);
  CHECK(traffic.anomalous_vessels == 3);  // round(8*0.25)=2, round(8*0.125)=1
  REQUIRE(traffic.truth.size() == 3);
  int stops = 0, loops = 0;
  std::set<uint64_t> anomalous_ids;
  for (const auto& e : traffic.truth) {
    anomalous_ids.insert(e.mmsi);
    if (e.type == AnomalyType::stop) ++stops;
    if (e.type == AnomalyType::loop) ++loops;
    CHECK(e.track_id.find(std::to_string(e.mmsi)) == 0);
  }
  CHECK(stops == 2);
  CHECK(loops == 1);
  CHECK(anomalous_ids.size() == 3);

  // stopped vessels really stop: near-zero speed reports appear
  bool saw_stopped = false;
  for (const auto& e : traffic.truth) {
    if (e.type != AnomalyType::stop) continue;
    for (const auto& m : traffic.messages) {
      if (m.mmsi == e.mmsi && m.sog < 0.5) saw_stopped = true;
    }
  }
  CHECK(saw_stopped);

  auto path = std::filesystem::temp_directory_path() / "aisdet-truth.csv";
  write_ground_truth(traffic, path);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  std::filesystem::remove(path);
  CHECK(rows == 4);  // header plus one row per anomalous vessel
}

TEST_CASE("scenario files round-trip") {
  auto s = small_scenario();
  s.anomalies = {{AnomalyType::off_lane, 0.1}};
  s.report_period_s = 120;
  auto path = std::filesystem::temp_directory_path() / "aisdet-scenario.json";
  save_scenario(s, path);
  auto back = load_scenario(path);
  std::filesystem::remove(path);
  CHECK(back.lanes.size() == s.lanes.size());
  CHECK(back.lanes[0].waypoints == s.lanes[0].waypoints);
  CHECK(back.lanes[1].speed_kn == s.lanes[1].speed_kn);
  CHECK(back.vessels_per_lane == s.vessels_per_lane);
  CHECK(back.anomalies.size() == 1);
  CHECK(back.anomalies[0].type == AnomalyType::off_lane);
  CHECK(back.anomalies[0].fraction == 0.1);
  CHECK(back.report_period_s == 120);
  CHECK(back.seed == s.seed);
  CHECK(generate(back).messages == generate(s).messages);
}

TEST_CASE("replay preserves publish order") {
  auto s = small_scenario();
  s.duration_s = 3600;
  auto traffic = generate(s);
  PartitionedLog log(4);
  replay(traffic.messages, 0.0, log);  // as fast as possible
  uint64_t total = 0;
  for (int p = 0; p < 4; ++p) {
    int64_t prev = std::numeric_limits<int64_t>::min();
    for (uint64_t o = 0; o < log.size(p); ++o) {
      auto m = decode_message(log.read(p, o).payload);
      CHECK(m.timestamp >= prev);
      prev = m.timestamp;
      ++total;
    }
  }
  CHECK(total == traffic.messages.size());
}

TEST_CASE("bench report serialization round-trips") {
  BenchReport r;
  r.replicas = 4;
  r.timing = TimingStats{2.07, 0.22, 1.49, 1.93, 2.04, 2.19, 3.74};
  r.cdf = {{10, 0.25}, {40, 1.0}};
  r.peak_unique_mmsi = 40;
  r.capacity_cores = 2;
  r.built = 237863;
  r.rejected = 147786;
  r.tested = 90077;
  r.tracks_per_s = 0.5;
  r.wall_s = 123.5;

  auto back = BenchReport::from_json(r.to_json());
  CHECK(back.replicas == r.replicas);
  CHECK(back.timing == r.timing);
  CHECK(back.cdf == r.cdf);
  CHECK(back.peak_unique_mmsi == r.peak_unique_mmsi);
  CHECK(back.capacity_cores == r.capacity_cores);
  CHECK(back.built == r.built);
  CHECK(back.rejected == r.rejected);
  CHECK(back.tested == r.tested);
  CHECK(back.tracks_per_s == r.tracks_per_s);
  CHECK(back.wall_s == r.wall_s);
  CHECK(back.built == back.rejected + back.tested);

  auto csv = BenchReport::from_csv(r.to_csv());
  CHECK(csv.timing == r.timing);
  CHECK(csv.built == r.built);
  CHECK(csv.capacity_cores == r.capacity_cores);

  auto cdf_text = r.cdf_csv();
  CHECK(cdf_text.find("10,0.25") != std::string::npos);
  CHECK(cdf_text.find("40,1") != std::string::npos);
}
