#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aisdet/domain.hpp"

namespace aisdet {

struct PreprocessConfig {
  Roi roi;
  double max_sog_knots = 30.0;
  int64_t gap_threshold_s = 4 * 3600;
  int64_t resample_period_s = 600;
  int64_t min_track_duration_s = 4 * 3600;
  int64_t redetect_period_s = 3600;

  bool valid() const {
    return roi.valid() && max_sog_knots > 0 && gap_threshold_s > 0 &&
           resample_period_s > 0 && min_track_duration_s > 0 &&
           redetect_period_s > 0 &&
           resample_period_s <= min_track_duration_s;
  }
  /// Resampled point count a track must reach before detection.
  int min_detect_points() const {
    return static_cast<int>(min_track_duration_s / resample_period_s) + 1;
  }
};

enum class DropReason : uint8_t {
  out_of_roi = 0,
  over_speed = 1,
  non_monotone_time = 2,
  duplicate_time = 3,
};

std::string_view to_string(DropReason reason);

/// Stateless validity filter (ROI membership, speed cap). Time-monotonicity
/// checks need per-MMSI state and live in OperatorState.
std::optional<DropReason> validate(const AisMessage& msg,
                                   const PreprocessConfig& cfg);

class TooFewPointsError : public std::runtime_error {
 public:
  TooFewPointsError() : std::runtime_error("resample needs >= 2 points") {}
};

/// Resamples a track onto the fixed grid t0, t0+period, ... up to the last
/// original timestamp. lat/lon/sog interpolate linearly; cog along the
/// shortest circular arc; sog clamped at 0 from below.
Track resample(const Track& track, int64_t period_s);

// --- operator events ---------------------------------------------------

struct TrackOpened {
  TrackId id;
};
struct TrackExtended {
  TrackId id;
};
struct TrackClosed {
  TrackId id;
  Track track;
};
struct DetectionDue {
  TrackId id;
  uint32_t watermark;  // 0 at min duration, +1 per redetect period
  Track raw;           // unresampled prefix; caller resamples when scoring
};
struct MessageDropped {
  DropReason reason;
};

using Event =
    std::variant<TrackOpened, TrackExtended, TrackClosed, DetectionDue,
                 MessageDropped>;

struct PipelineCounters {
  uint64_t processed = 0;
  uint64_t kept = 0;
  uint64_t dropped = 0;
  uint64_t dropped_by_reason[4] = {0, 0, 0, 0};
  uint64_t built = 0;   // tracks closed
  uint64_t tested = 0;  // tracks that triggered detection at least once
  uint64_t rejected() const { return built - tested; }
};

/// The stateful front half of the streaming operator: incremental track
/// building, gap splitting and detection triggering. Single-writer; one
/// instance per stream partition.
class OperatorState {
 public:
  explicit OperatorState(PreprocessConfig cfg);

  /// Validates and ingests one message, returning the emitted events.
  std::vector<Event> process(const AisMessage& msg);

  /// Closes every open track whose last message is older than the gap
  /// threshold relative to `now`.
  std::vector<Event> flush(int64_t now);

  /// Closes all open tracks (stream end).
  std::vector<Event> flush_all();

  const PipelineCounters& counters() const { return counters_; }
  const PreprocessConfig& config() const { return cfg_; }
  size_t open_track_count() const { return open_.size(); }

  /// State handoff serialization for partition rebalancing.
  std::vector<uint8_t> serialize() const;
  static OperatorState deserialize(std::span<const uint8_t> bytes,
                                   const PreprocessConfig& cfg);

 private:
  struct OpenTrack {
    Track track;
    uint32_t next_watermark = 0;
    bool tested = false;
  };

  std::vector<Event> close_track(uint64_t mmsi);

  PreprocessConfig cfg_;
  std::map<uint64_t, OpenTrack> open_;      // mmsi -> open track
  std::map<uint64_t, int64_t> last_seen_;   // mmsi -> last accepted timestamp
  PipelineCounters counters_;
};

/// Convenience batch driver: runs a message sequence through one operator,
/// returning the closed tracks that reached the minimum duration, already
/// resampled, plus the final counters.
struct BatchResult {
  std::vector<Track> tracks;          // resampled, duration >= minimum
  std::vector<TrackId> track_ids;     // parallel to tracks
  PipelineCounters counters;
};
BatchResult preprocess_batch(std::span<const AisMessage> messages,
                             const PreprocessConfig& cfg);

}  // namespace aisdet
