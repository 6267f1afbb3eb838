#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aisdet/domain.hpp"
#include "aisdet/stream.hpp"

namespace aisdet {

struct TimingStats {
  double mean = 0, std = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  bool operator==(const TimingStats&) const = default;
};

class EmptySamplesError : public std::runtime_error {
 public:
  EmptySamplesError() : std::runtime_error("no timing samples") {}
};

/// Mean, population std, min/max, quartiles by linear interpolation between
/// closest order statistics.
TimingStats timing_stats(std::vector<double> samples);

struct CdfPoint {
  uint64_t value = 0;      // unique-MMSI count
  double fraction = 0.0;   // cumulative fraction of windows
  bool operator==(const CdfPoint&) const = default;
};
using CdfCurve = std::vector<CdfPoint>;

/// Distinct-MMSI count per fixed window, as a CDF over windows. Windows are
/// anchored at the first timestamp truncated to the window size; empty
/// windows inside the span count as zero.
CdfCurve unique_mmsi_cdf(const std::vector<AisMessage>& messages,
                         int64_t window_s);

/// Smallest count v with CDF(v) >= fraction.
uint64_t cdf_value_at(const CdfCurve& curve, double fraction);

/// Human-readable reading of the curve at the given fraction.
std::string cdf_reading(const CdfCurve& curve, double fraction);

/// Cores needed to keep up with the peak detection call rate.
int capacity_estimate(double peak_calls_per_window, double mean_time_s,
                      double window_s);

// --- synthetic traffic --------------------------------------------------

struct Lane {
  std::vector<std::pair<double, double>> waypoints;  // (lat, lon)
  double speed_kn = 12.0;
  int vessels = 0;  // 0: use scenario default
};

enum class AnomalyType : uint8_t { loop = 0, stop = 1, off_lane = 2 };

std::string_view to_string(AnomalyType t);

struct AnomalyInjection {
  AnomalyType type;
  double fraction = 0.0;  // of the clean vessel total, rounded
};

struct SyntheticScenario {
  std::vector<Lane> lanes;
  int vessels_per_lane = 10;
  double cross_track_sigma_deg = 0.01;
  double speed_sigma_kn = 0.5;
  double cog_sigma_deg = 2.0;
  std::vector<AnomalyInjection> anomalies;
  int64_t duration_s = 24 * 3600;
  int64_t report_period_s = 60;
  int64_t t_start = 1500000000;
  uint64_t seed = 1;
  uint64_t mmsi_base = 200000000;
};

SyntheticScenario load_scenario(const std::filesystem::path& path);
void save_scenario(const SyntheticScenario& scenario,
                   const std::filesystem::path& path);

struct GroundTruthEntry {
  std::string track_id;
  uint64_t mmsi = 0;
  AnomalyType type;
};

struct GeneratedTraffic {
  std::vector<AisMessage> messages;  // globally time-sorted
  std::vector<GroundTruthEntry> truth;
  uint64_t clean_vessels = 0;
  uint64_t anomalous_vessels = 0;
};

/// Deterministic lane-following traffic with Gaussian cross-track/speed
/// noise and labeled anomaly injections.
GeneratedTraffic generate(const SyntheticScenario& scenario);

void write_ground_truth(const GeneratedTraffic& traffic,
                        const std::filesystem::path& path);

/// Publishes a time-sorted message stream into the log. Inter-message
/// delays are scaled by 1/speed_factor; a non-finite or non-positive factor
/// replays as fast as possible.
void replay(const std::vector<AisMessage>& messages, double speed_factor,
            PartitionedLog& log);

struct BenchReport {
  int replicas = 1;
  TimingStats timing;
  CdfCurve cdf;
  int64_t window_s = 600;
  uint64_t peak_unique_mmsi = 0;
  int capacity_cores = 1;
  uint64_t built = 0;
  uint64_t rejected = 0;
  uint64_t tested = 0;
  double tracks_per_s = 0.0;
  double wall_s = 0.0;

  std::string to_json() const;
  static BenchReport from_json(const std::string& text);
  std::string to_csv() const;  // key,value rows (cdf excluded)
  static BenchReport from_csv(const std::string& text);
  std::string cdf_csv() const;  // two columns: unique_mmsi,fraction
};

BenchReport run_benchmark(const GeneratedTraffic& traffic,
                          const Scorer& scorer,
                          const PreprocessConfig& preprocess,
                          const DetectParams& detect, int replicas,
                          int n_partitions);

}  // namespace aisdet
