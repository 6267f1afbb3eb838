#include "aisdet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace aisdet {

TimingStats timing_stats(std::vector<double> samples) {
  if (samples.empty()) throw EmptySamplesError();
  std::sort(samples.begin(), samples.end());
  size_t n = samples.size();

  TimingStats s;
  double sum = 0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(n);
  double sq = 0;
  for (double x : samples) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(n));  // population std
  s.min = samples.front();
  s.max = samples.back();

  auto quantile = [&](double p) {
    double h = p * static_cast<double>(n - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, n - 1);
    return samples[lo] + (h - std::floor(h)) * (samples[hi] - samples[lo]);
  };
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

CdfCurve unique_mmsi_cdf(const std::vector<AisMessage>& messages,
                         int64_t window_s) {
  if (window_s <= 0) throw std::domain_error("window_s must be > 0");
  if (messages.empty()) return {};

  int64_t t_min = messages.front().timestamp;
  int64_t t_max = messages.front().timestamp;
  for (const auto& m : messages) {
    t_min = std::min(t_min, m.timestamp);
    t_max = std::max(t_max, m.timestamp);
  }
  // anchor: first timestamp truncated to the window size
  int64_t t0 = (t_min / window_s) * window_s;
  if (t0 > t_min) t0 -= window_s;  // negative timestamps
  size_t n_windows = static_cast<size_t>((t_max - t0) / window_s) + 1;

  std::vector<std::unordered_set<uint64_t>> windows(n_windows);
  for (const auto& m : messages) {
    windows[static_cast<size_t>((m.timestamp - t0) / window_s)].insert(m.mmsi);
  }
  std::map<uint64_t, uint64_t> count_freq;
  for (const auto& w : windows) ++count_freq[w.size()];

  CdfCurve curve;
  uint64_t cum = 0;
  for (const auto& [count, freq] : count_freq) {
    cum += freq;
    curve.push_back(
        CdfPoint{count, static_cast<double>(cum) / static_cast<double>(n_windows)});
  }
  return curve;
}

uint64_t cdf_value_at(const CdfCurve& curve, double fraction) {
  for (const auto& p : curve) {
    if (p.fraction >= fraction) return p.value;
  }
  return curve.empty() ? 0 : curve.back().value;
}

std::string cdf_reading(const CdfCurve& curve, double fraction) {
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "%.0f%% of windows have at most %llu unique MMSIs",
                fraction * 100.0,
                static_cast<unsigned long long>(cdf_value_at(curve, fraction)));
  return buf;
}

int capacity_estimate(double peak_calls_per_window, double mean_time_s,
                      double window_s) {
  if (peak_calls_per_window <= 0 || mean_time_s <= 0 || window_s <= 0) {
    throw std::domain_error("capacity_estimate: arguments must be > 0");
  }
  double cores = std::ceil(peak_calls_per_window * mean_time_s / window_s);
  return std::max(1, static_cast<int>(cores));
}

std::string_view to_string(AnomalyType t) {
  switch (t) {
    case AnomalyType::loop: return "loop";
    case AnomalyType::stop: return "stop";
    case AnomalyType::off_lane: return "off-lane";
  }
  return "unknown";
}

// --- generator ----------------------------------------------------------

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNmPerDeg = 60.0;

struct LaneGeometry {
  std::vector<std::pair<double, double>> wpts;
  std::vector<double> cum_nm;  // cumulative length at each waypoint
  double ref_cos = 1.0;        // cos of mean latitude

  double length() const { return cum_nm.back(); }

  /// Position and along-track bearing (deg) at distance s.
  void at(double s, double* lat, double* lon, double* bearing) const {
    s = std::clamp(s, 0.0, length());
    size_t i = 1;
    while (i + 1 < wpts.size() && cum_nm[i] < s) ++i;
    double seg = cum_nm[i] - cum_nm[i - 1];
    double u = seg > 0 ? (s - cum_nm[i - 1]) / seg : 0.0;
    const auto& a = wpts[i - 1];
    const auto& b = wpts[i];
    *lat = a.first + u * (b.first - a.first);
    *lon = a.second + u * (b.second - a.second);
    double dn = (b.first - a.first) * kNmPerDeg;
    double de = (b.second - a.second) * kNmPerDeg * ref_cos;
    *bearing = normalize_cog(std::atan2(de, dn) * 180.0 / kPi);
  }
};

LaneGeometry lane_geometry(const Lane& lane) {
  LaneGeometry g;
  g.wpts = lane.waypoints;
  double mean_lat = 0;
  for (const auto& w : g.wpts) mean_lat += w.first;
  mean_lat /= static_cast<double>(g.wpts.size());
  g.ref_cos = std::cos(mean_lat * kPi / 180.0);
  g.cum_nm.push_back(0.0);
  for (size_t i = 1; i < g.wpts.size(); ++i) {
    double dn = (g.wpts[i].first - g.wpts[i - 1].first) * kNmPerDeg;
    double de =
        (g.wpts[i].second - g.wpts[i - 1].second) * kNmPerDeg * g.ref_cos;
    g.cum_nm.push_back(g.cum_nm.back() + std::hypot(dn, de));
  }
  return g;
}

/// Advances a (lat, lon) position by dist_nm on the given heading.
void advance(double* lat, double* lon, double bearing_deg, double dist_nm,
             double ref_cos) {
  double rad = bearing_deg * kPi / 180.0;
  *lat += dist_nm * std::cos(rad) / kNmPerDeg;
  *lon += dist_nm * std::sin(rad) / (kNmPerDeg * ref_cos);
}

struct VesselPlan {
  int lane = 0;
  uint64_t mmsi = 0;
  int64_t start = 0;
  std::optional<AnomalyType> anomaly;
};

void simulate_vessel(const SyntheticScenario& sc, const LaneGeometry& geom,
                     const VesselPlan& plan, double lane_speed,
                     std::mt19937_64& rng, std::vector<AisMessage>& out) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise = [&](double sigma) { return sigma > 0 ? sigma * gauss(rng) : 0.0; };
  std::uniform_int_distribution<int64_t> jitter(-5, 5);

  const double trigger_s = 0.4 * geom.length();
  const int64_t anomaly_duration = 2 * 3600;

  enum class Phase { on_lane, anomaly };
  Phase phase = Phase::on_lane;
  double s = 0.0;  // along-track nm
  int64_t anomaly_t0 = 0;
  double anomaly_lat = 0, anomaly_lon = 0, anomaly_bearing = 0;
  bool anomaly_done = false;

  int64_t t = plan.start;
  int64_t t_end = sc.t_start + sc.duration_s;

  while (t < t_end && s < geom.length()) {
    double lat, lon, bearing;
    geom.at(s, &lat, &lon, &bearing);

    if (phase == Phase::anomaly && t - anomaly_t0 >= anomaly_duration) {
      phase = Phase::on_lane;
      anomaly_done = true;
      if (*plan.anomaly == AnomalyType::off_lane) {
        // the return leg rejoins the lane ahead of the entry point
        double leg = lane_speed * (anomaly_duration / 2) / 3600.0;
        s = std::min(geom.length(),
                     s + 2 * leg * std::cos(75.0 * kPi / 180.0));
      }
      geom.at(s, &lat, &lon, &bearing);
    }

    if (plan.anomaly && !anomaly_done && phase == Phase::on_lane &&
        s >= trigger_s) {
      phase = Phase::anomaly;
      anomaly_t0 = t;
      anomaly_lat = lat;
      anomaly_lon = lon;
      anomaly_bearing = bearing;
    }

    double report_lat = lat, report_lon = lon;
    double report_cog = bearing, report_sog = lane_speed;

    if (phase == Phase::anomaly) {
      int64_t elapsed = t - anomaly_t0;
      double frac =
          static_cast<double>(elapsed) / static_cast<double>(anomaly_duration);
      switch (*plan.anomaly) {
        case AnomalyType::stop:
          report_lat = anomaly_lat;
          report_lon = anomaly_lon;
          report_cog = anomaly_bearing;
          report_sog = 0.2;
          break;
        case AnomalyType::loop: {
          // circle at nominal speed, one full turn over the window
          double circumference = lane_speed * anomaly_duration / 3600.0;
          double radius = circumference / (2 * kPi);
          double theta = frac * 360.0;
          report_cog = normalize_cog(anomaly_bearing + theta);
          report_lat = anomaly_lat;
          report_lon = anomaly_lon;
          // chord from the loop entry point
          double rad0 = (anomaly_bearing + 90.0) * kPi / 180.0;
          double cx = anomaly_lat + radius * std::cos(rad0) / kNmPerDeg;
          double cy = anomaly_lon +
                      radius * std::sin(rad0) / (kNmPerDeg * geom.ref_cos);
          double ang = (anomaly_bearing - 90.0 + theta) * kPi / 180.0;
          report_lat = cx + radius * std::cos(ang) / kNmPerDeg;
          report_lon = cy + radius * std::sin(ang) / (kNmPerDeg * geom.ref_cos);
          break;
        }
        case AnomalyType::off_lane: {
          // triangle excursion: out at +75 deg, back at -75 deg
          double leg = lane_speed * (anomaly_duration / 2) / 3600.0;
          double out_dist = std::min(frac, 0.5) * 2 * leg;
          double back_dist = std::max(0.0, frac - 0.5) * 2 * leg;
          report_lat = anomaly_lat;
          report_lon = anomaly_lon;
          advance(&report_lat, &report_lon, anomaly_bearing + 75.0, out_dist,
                  geom.ref_cos);
          advance(&report_lat, &report_lon, anomaly_bearing - 75.0, back_dist,
                  geom.ref_cos);
          report_cog = normalize_cog(anomaly_bearing +
                                     (frac < 0.5 ? 75.0 : -75.0));
          break;
        }
      }
    }

    AisMessage m;
    m.mmsi = plan.mmsi;
    m.timestamp = t;
    // cross-track jitter perpendicular to the course
    double offset = noise(sc.cross_track_sigma_deg);
    double perp = (report_cog + 90.0) * kPi / 180.0;
    m.lat = report_lat + offset * std::cos(perp);
    m.lon = report_lon + offset * std::sin(perp) / geom.ref_cos;
    m.sog = std::max(0.0, report_sog + noise(sc.speed_sigma_kn));
    m.cog = normalize_cog(report_cog + noise(sc.cog_sigma_deg));
    m.source = Source::terrestrial;
    out.push_back(m);

    int64_t dt = sc.report_period_s + jitter(rng);
    dt = std::max<int64_t>(1, dt);
    if (phase == Phase::on_lane) {
      s += lane_speed * static_cast<double>(dt) / 3600.0;
    }
    t += dt;
  }
}

}  // namespace

GeneratedTraffic generate(const SyntheticScenario& sc) {
  GeneratedTraffic out;
  if (sc.lanes.empty()) return out;

  std::vector<LaneGeometry> geoms;
  geoms.reserve(sc.lanes.size());
  for (const auto& lane : sc.lanes) geoms.push_back(lane_geometry(lane));

  uint64_t total_clean = 0;
  for (const auto& lane : sc.lanes) {
    total_clean += lane.vessels > 0 ? lane.vessels : sc.vessels_per_lane;
  }

  std::vector<VesselPlan> plans;
  uint64_t next_mmsi = sc.mmsi_base;
  uint64_t vessel_idx = 0;

  for (size_t l = 0; l < sc.lanes.size(); ++l) {
    int n = sc.lanes[l].vessels > 0 ? sc.lanes[l].vessels : sc.vessels_per_lane;
    for (int i = 0; i < n; ++i) {
      VesselPlan p;
      p.lane = static_cast<int>(l);
      p.mmsi = next_mmsi++;
      std::mt19937_64 seeder(sc.seed ^
                             (0x9E3779B97F4A7C15ull * (vessel_idx + 1)));
      std::uniform_int_distribution<int64_t> start_dist(0, sc.duration_s - 1);
      p.start = sc.t_start + start_dist(seeder);
      plans.push_back(p);
      ++vessel_idx;
    }
  }
  out.clean_vessels = plans.size();

  size_t anomaly_lane = 0;
  for (const auto& inj : sc.anomalies) {
    uint64_t count = static_cast<uint64_t>(
        std::llround(inj.fraction * static_cast<double>(total_clean)));
    for (uint64_t i = 0; i < count; ++i) {
      VesselPlan p;
      p.lane = static_cast<int>(anomaly_lane++ % sc.lanes.size());
      p.mmsi = next_mmsi++;
      p.anomaly = inj.type;
      const auto& geom = geoms[p.lane];
      double speed = sc.lanes[p.lane].speed_kn;
      // full traverse plus the anomaly window must fit into the scenario
      int64_t traverse_s =
          static_cast<int64_t>(geom.length() / speed * 3600.0) + 2 * 3600 + 600;
      int64_t latest = std::max<int64_t>(1, sc.duration_s - traverse_s);
      std::mt19937_64 seeder(sc.seed ^
                             (0x9E3779B97F4A7C15ull * (vessel_idx + 1)));
      std::uniform_int_distribution<int64_t> start_dist(0, latest - 1);
      p.start = sc.t_start + start_dist(seeder);
      plans.push_back(p);
      ++out.anomalous_vessels;
      ++vessel_idx;
    }
  }

  for (size_t i = 0; i < plans.size(); ++i) {
    const auto& p = plans[i];
    std::mt19937_64 rng(sc.seed * 0x2545F4914F6CDD1Dull + i);
    size_t before = out.messages.size();
    simulate_vessel(sc, geoms[p.lane], p, sc.lanes[p.lane].speed_kn, rng,
                    out.messages);
    if (p.anomaly && out.messages.size() > before) {
      TrackId id{p.mmsi, out.messages[before].timestamp};
      out.truth.push_back(GroundTruthEntry{id.str(), p.mmsi, *p.anomaly});
    }
  }

  std::stable_sort(out.messages.begin(), out.messages.end(),
                   [](const AisMessage& a, const AisMessage& b) {
                     return std::tie(a.timestamp, a.mmsi) <
                            std::tie(b.timestamp, b.mmsi);
                   });
  return out;
}

void write_ground_truth(const GeneratedTraffic& traffic,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "track_id,anomaly_type\n";
  for (const auto& entry : traffic.truth) {
    out << entry.track_id << "," << to_string(entry.type) << "\n";
  }
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);

  SyntheticScenario sc;
  for (const auto& lj : j.at("lanes")) {
    Lane lane;
    for (const auto& wp : lj.at("waypoints")) {
      lane.waypoints.emplace_back(wp.at(0).get<double>(),
                                  wp.at(1).get<double>());
    }
    lane.speed_kn = lj.value("speed_kn", 12.0);
    lane.vessels = lj.value("vessels", 0);
    if (lane.waypoints.size() < 2) {
      throw std::runtime_error("lane needs >= 2 waypoints");
    }
    sc.lanes.push_back(std::move(lane));
  }
  sc.vessels_per_lane = j.value("vessels_per_lane", sc.vessels_per_lane);
  sc.cross_track_sigma_deg =
      j.value("cross_track_sigma_deg", sc.cross_track_sigma_deg);
  sc.speed_sigma_kn = j.value("speed_sigma_kn", sc.speed_sigma_kn);
  sc.cog_sigma_deg = j.value("cog_sigma_deg", sc.cog_sigma_deg);
  sc.duration_s = j.value("duration_s", sc.duration_s);
  sc.report_period_s = j.value("report_period_s", sc.report_period_s);
  sc.t_start = j.value("t_start", sc.t_start);
  sc.seed = j.value("seed", sc.seed);
  sc.mmsi_base = j.value("mmsi_base", sc.mmsi_base);
  if (j.contains("anomalies")) {
    for (const auto& aj : j.at("anomalies")) {
      AnomalyInjection inj;
      std::string type = aj.at("type").get<std::string>();
      if (type == "loop") {
        inj.type = AnomalyType::loop;
      } else if (type == "stop") {
        inj.type = AnomalyType::stop;
      } else if (type == "off-lane") {
        inj.type = AnomalyType::off_lane;
      } else {
        throw std::runtime_error("unknown anomaly type: " + type);
      }
      inj.fraction = aj.at("fraction").get<double>();
      if (inj.fraction < 0.0 || inj.fraction > 1.0) {
        throw std::runtime_error("anomaly fraction outside [0, 1]");
      }
      sc.anomalies.push_back(inj);
    }
  }
  return sc;
}

void save_scenario(const SyntheticScenario& sc,
                   const std::filesystem::path& path) {
  nlohmann::json j;
  for (const auto& lane : sc.lanes) {
    nlohmann::json lj;
    for (const auto& wp : lane.waypoints) {
      lj["waypoints"].push_back({wp.first, wp.second});
    }
    lj["speed_kn"] = lane.speed_kn;
    if (lane.vessels > 0) lj["vessels"] = lane.vessels;
    j["lanes"].push_back(lj);
  }
  j["vessels_per_lane"] = sc.vessels_per_lane;
  j["cross_track_sigma_deg"] = sc.cross_track_sigma_deg;
  j["speed_sigma_kn"] = sc.speed_sigma_kn;
  j["cog_sigma_deg"] = sc.cog_sigma_deg;
  j["duration_s"] = sc.duration_s;
  j["report_period_s"] = sc.report_period_s;
  j["t_start"] = sc.t_start;
  j["seed"] = sc.seed;
  j["mmsi_base"] = sc.mmsi_base;
  for (const auto& inj : sc.anomalies) {
    j["anomalies"].push_back(
        {{"type", std::string(to_string(inj.type))},
         {"fraction", inj.fraction}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void replay(const std::vector<AisMessage>& messages, double speed_factor,
            PartitionedLog& log) {
  bool as_fast = !std::isfinite(speed_factor) || speed_factor <= 0.0;
  int64_t prev = messages.empty() ? 0 : messages.front().timestamp;
  for (const auto& m : messages) {
    if (!as_fast && m.timestamp > prev) {
      double delay_s = static_cast<double>(m.timestamp - prev) / speed_factor;
      std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
    }
    prev = m.timestamp;
    log.publish(m);
  }
}

// --- report -------------------------------------------------------------

namespace {

nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json j;
  j["replicas"] = r.replicas;
  j["timing"] = {{"mean", r.timing.mean}, {"std", r.timing.std},
                 {"min", r.timing.min},   {"q1", r.timing.q1},
                 {"median", r.timing.median}, {"q3", r.timing.q3},
                 {"max", r.timing.max}};
  j["cdf"] = nlohmann::json::array();
  for (const auto& p : r.cdf) {
    j["cdf"].push_back({{"unique_mmsi", p.value}, {"fraction", p.fraction}});
  }
  j["window_s"] = r.window_s;
  j["peak_unique_mmsi"] = r.peak_unique_mmsi;
  j["capacity_cores"] = r.capacity_cores;
  j["built"] = r.built;
  j["rejected"] = r.rejected;
  j["tested"] = r.tested;
  j["tracks_per_s"] = r.tracks_per_s;
  j["wall_s"] = r.wall_s;
  j["reading"] = cdf_reading(r.cdf, 0.8);
  return j;
}

}  // namespace

std::string BenchReport::to_json() const {
  return report_to_json(*this).dump(2);
}

BenchReport BenchReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BenchReport r;
  r.replicas = j.at("replicas").get<int>();
  const auto& t = j.at("timing");
  r.timing = TimingStats{t.at("mean"), t.at("std"), t.at("min"), t.at("q1"),
                         t.at("median"), t.at("q3"), t.at("max")};
  for (const auto& p : j.at("cdf")) {
    r.cdf.push_back(CdfPoint{p.at("unique_mmsi").get<uint64_t>(),
                             p.at("fraction").get<double>()});
  }
  r.window_s = j.at("window_s").get<int64_t>();
  r.peak_unique_mmsi = j.at("peak_unique_mmsi").get<uint64_t>();
  r.capacity_cores = j.at("capacity_cores").get<int>();
  r.built = j.at("built").get<uint64_t>();
  r.rejected = j.at("rejected").get<uint64_t>();
  r.tested = j.at("tested").get<uint64_t>();
  r.tracks_per_s = j.at("tracks_per_s").get<double>();
  r.wall_s = j.at("wall_s").get<double>();
  return r;
}

std::string BenchReport::to_csv() const {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "field,value\n"
                "replicas,%d\nmean,%.17g\nstd,%.17g\nmin,%.17g\nq1,%.17g\n"
                "median,%.17g\nq3,%.17g\nmax,%.17g\nwindow_s,%lld\n"
                "peak_unique_mmsi,%llu\ncapacity_cores,%d\nbuilt,%llu\n"
                "rejected,%llu\ntested,%llu\ntracks_per_s,%.17g\nwall_s,%.17g\n",
                replicas, timing.mean, timing.std, timing.min, timing.q1,
                timing.median, timing.q3, timing.max,
                static_cast<long long>(window_s),
                static_cast<unsigned long long>(peak_unique_mmsi),
                capacity_cores, static_cast<unsigned long long>(built),
                static_cast<unsigned long long>(rejected),
                static_cast<unsigned long long>(tested), tracks_per_s, wall_s);
  return buf;
}

BenchReport BenchReport::from_csv(const std::string& text) {
  BenchReport r;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    size_t comma = line.find(',');
    if (comma == std::string::npos) continue;
    std::string key = line.substr(0, comma);
    std::string val = line.substr(comma + 1);
    if (key == "replicas") r.replicas = std::stoi(val);
    else if (key == "mean") r.timing.mean = std::stod(val);
    else if (key == "std") r.timing.std = std::stod(val);
    else if (key == "min") r.timing.min = std::stod(val);
    else if (key == "q1") r.timing.q1 = std::stod(val);
    else if (key == "median") r.timing.median = std::stod(val);
    else if (key == "q3") r.timing.q3 = std::stod(val);
    else if (key == "max") r.timing.max = std::stod(val);
    else if (key == "window_s") r.window_s = std::stoll(val);
    else if (key == "peak_unique_mmsi") r.peak_unique_mmsi = std::stoull(val);
    else if (key == "capacity_cores") r.capacity_cores = std::stoi(val);
    else if (key == "built") r.built = std::stoull(val);
    else if (key == "rejected") r.rejected = std::stoull(val);
    else if (key == "tested") r.tested = std::stoull(val);
    else if (key == "tracks_per_s") r.tracks_per_s = std::stod(val);
    else if (key == "wall_s") r.wall_s = std::stod(val);
  }
  return r;
}

std::string BenchReport::cdf_csv() const {
  std::string out = "unique_mmsi,fraction\n";
  char buf[64];
  for (const auto& p : cdf) {
    std::snprintf(buf, sizeof(buf), "%llu,%.17g\n",
                  static_cast<unsigned long long>(p.value), p.fraction);
    out += buf;
  }
  return out;
}

BenchReport run_benchmark(const GeneratedTraffic& traffic,
                          const Scorer& scorer,
                          const PreprocessConfig& preprocess,
                          const DetectParams& detect, int replicas,
                          int n_partitions) {
  auto log = std::make_shared<PartitionedLog>(n_partitions);
  for (const auto& m : traffic.messages) log->publish(m);
  log->close();

  Engine engine(log, preprocess, &scorer, detect, replicas);
  auto t0 = std::chrono::steady_clock::now();
  engine.run_to_end();
  engine.flush_open_tracks();
  auto t1 = std::chrono::steady_clock::now();

  BenchReport r;
  r.replicas = engine.replicas();
  r.wall_s = std::chrono::duration<double>(t1 - t0).count();
  r.timing = timing_stats(engine.detection_seconds());
  r.window_s = 600;
  r.cdf = unique_mmsi_cdf(traffic.messages, r.window_s);
  r.peak_unique_mmsi = r.cdf.empty() ? 0 : r.cdf.back().value;
  r.capacity_cores = capacity_estimate(
      static_cast<double>(r.peak_unique_mmsi), r.timing.mean,
      static_cast<double>(r.window_s));
  auto counters = engine.counters();
  r.built = counters.built;
  r.rejected = counters.rejected();
  r.tested = counters.tested;
  r.tracks_per_s = r.wall_s > 0
                       ? static_cast<double>(counters.tested) / r.wall_s
                       : 0.0;
  return r;
}

}  // namespace aisdet
