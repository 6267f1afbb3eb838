#include "aisdet/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "aisdet/binio.hpp"

namespace aisdet {

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::out_of_roi: return "out-of-roi";
    case DropReason::over_speed: return "over-speed";
    case DropReason::non_monotone_time: return "non-monotone-time";
    case DropReason::duplicate_time: return "duplicate-time";
  }
  return "unknown";
}

std::optional<DropReason> validate(const AisMessage& msg,
                                   const PreprocessConfig& cfg) {
  if (!cfg.roi.contains(msg.lat, msg.lon)) return DropReason::out_of_roi;
  if (msg.sog > cfg.max_sog_knots) return DropReason::over_speed;
  return std::nullopt;
}

namespace {

double lerp(double a, double b, double u) { return a + (b - a) * u; }

double lerp_cog(double a, double b, double u) {
  // shortest circular arc
  double d = std::fmod(b - a + 540.0, 360.0) - 180.0;
  return normalize_cog(a + d * u);
}

}  // namespace

Track resample(const Track& track, int64_t period_s) {
  if (track.points.size() < 2) throw TooFewPointsError();

  Track out;
  out.mmsi = track.mmsi;
  out.complete = track.complete;
  const auto& pts = track.points;
  int64_t t0 = pts.front().timestamp;
  int64_t t_end = pts.back().timestamp;
  size_t seg = 0;  // current segment [seg, seg+1]
  for (int64_t t = t0; t <= t_end; t += period_s) {
    while (seg + 2 < pts.size() && pts[seg + 1].timestamp <= t) ++seg;
    const AisMessage& a = pts[seg];
    const AisMessage& b = pts[seg + 1];
    AisMessage m;
    m.mmsi = track.mmsi;
    m.timestamp = t;
    m.source = a.source;
    if (t == a.timestamp) {
      m = a;
      m.timestamp = t;
    } else if (t == b.timestamp) {
      m = b;
      m.timestamp = t;
    } else {
      double u = static_cast<double>(t - a.timestamp) /
                 static_cast<double>(b.timestamp - a.timestamp);
      m.lat = lerp(a.lat, b.lat, u);
      m.lon = lerp(a.lon, b.lon, u);
      m.sog = std::max(0.0, lerp(a.sog, b.sog, u));
      m.cog = lerp_cog(a.cog, b.cog, u);
    }
    out.points.push_back(m);
  }
  return out;
}

OperatorState::OperatorState(PreprocessConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<Event> OperatorState::close_track(uint64_t mmsi) {
  std::vector<Event> events;
  auto it = open_.find(mmsi);
  if (it == open_.end()) return events;
  Track t = std::move(it->second.track);
  t.complete = true;
  TrackId id{mmsi, t.points.front().timestamp};
  open_.erase(it);
  ++counters_.built;
  events.push_back(TrackClosed{id, std::move(t)});
  return events;
}

std::vector<Event> OperatorState::process(const AisMessage& msg) {
  std::vector<Event> events;
  ++counters_.processed;

  auto drop = [&](DropReason r) {
    ++counters_.dropped;
    ++counters_.dropped_by_reason[static_cast<int>(r)];
    events.push_back(MessageDropped{r});
    return events;
  };

  if (auto reason = validate(msg, cfg_)) return drop(*reason);
  auto seen = last_seen_.find(msg.mmsi);
  if (seen != last_seen_.end()) {
    if (msg.timestamp == seen->second) return drop(DropReason::duplicate_time);
    if (msg.timestamp < seen->second) {
      return drop(DropReason::non_monotone_time);
    }
  }
  ++counters_.kept;
  last_seen_[msg.mmsi] = msg.timestamp;

  auto it = open_.find(msg.mmsi);
  if (it != open_.end() &&
      msg.timestamp - it->second.track.points.back().timestamp >
          cfg_.gap_threshold_s) {
    auto closed = close_track(msg.mmsi);
    events.insert(events.end(), closed.begin(), closed.end());
    it = open_.end();
  }

  if (it == open_.end()) {
    OpenTrack ot;
    ot.track.mmsi = msg.mmsi;
    ot.track.points.push_back(msg);
    open_.emplace(msg.mmsi, std::move(ot));
    events.push_back(TrackOpened{TrackId{msg.mmsi, msg.timestamp}});
  } else {
    it->second.track.points.push_back(msg);
    events.push_back(TrackExtended{
        TrackId{msg.mmsi, it->second.track.points.front().timestamp}});
  }

  OpenTrack& ot = open_.at(msg.mmsi);
  TrackId id{msg.mmsi, ot.track.points.front().timestamp};
  int64_t duration = ot.track.duration_s();
  while (duration >= cfg_.min_track_duration_s +
                         static_cast<int64_t>(ot.next_watermark) *
                             cfg_.redetect_period_s) {
    if (!ot.tested) {
      ot.tested = true;
      ++counters_.tested;
    }
    events.push_back(DetectionDue{id, ot.next_watermark, ot.track});
    ++ot.next_watermark;
  }
  return events;
}

std::vector<Event> OperatorState::flush(int64_t now) {
  std::vector<uint64_t> stale;
  for (const auto& [mmsi, ot] : open_) {
    if (now - ot.track.points.back().timestamp > cfg_.gap_threshold_s) {
      stale.push_back(mmsi);
    }
  }
  std::vector<Event> events;
  for (uint64_t mmsi : stale) {
    auto closed = close_track(mmsi);
    events.insert(events.end(), closed.begin(), closed.end());
  }
  return events;
}

std::vector<Event> OperatorState::flush_all() {
  std::vector<uint64_t> all;
  all.reserve(open_.size());
  for (const auto& [mmsi, _] : open_) all.push_back(mmsi);
  std::vector<Event> events;
  for (uint64_t mmsi : all) {
    auto closed = close_track(mmsi);
    events.insert(events.end(), closed.begin(), closed.end());
  }
  return events;
}

namespace {

void put_message(ByteWriter& w, const AisMessage& m) {
  w.u64(m.mmsi);
  w.i64(m.timestamp);
  w.f64(m.lat);
  w.f64(m.lon);
  w.f64(m.sog);
  w.f64(m.cog);
  w.u8(static_cast<uint8_t>(m.source));
}

AisMessage get_message(ByteReader& r) {
  AisMessage m;
  m.mmsi = r.u64();
  m.timestamp = r.i64();
  m.lat = r.f64();
  m.lon = r.f64();
  m.sog = r.f64();
  m.cog = r.f64();
  m.source = static_cast<Source>(r.u8());
  return m;
}

}  // namespace

std::vector<uint8_t> OperatorState::serialize() const {
  ByteWriter w;
  w.u64(counters_.processed);
  w.u64(counters_.kept);
  w.u64(counters_.dropped);
  for (uint64_t c : counters_.dropped_by_reason) w.u64(c);
  w.u64(counters_.built);
  w.u64(counters_.tested);
  w.u64(last_seen_.size());
  for (const auto& [mmsi, ts] : last_seen_) {
    w.u64(mmsi);
    w.i64(ts);
  }
  w.u64(open_.size());
  for (const auto& [mmsi, ot] : open_) {
    w.u64(mmsi);
    w.u32(ot.next_watermark);
    w.u8(ot.tested ? 1 : 0);
    w.u64(ot.track.points.size());
    for (const auto& p : ot.track.points) put_message(w, p);
  }
  return w.take();
}

OperatorState OperatorState::deserialize(std::span<const uint8_t> bytes,
                                         const PreprocessConfig& cfg) {
  OperatorState s(cfg);
  ByteReader r(bytes);
  s.counters_.processed = r.u64();
  s.counters_.kept = r.u64();
  s.counters_.dropped = r.u64();
  for (uint64_t& c : s.counters_.dropped_by_reason) c = r.u64();
  s.counters_.built = r.u64();
  s.counters_.tested = r.u64();
  uint64_t n_seen = r.u64();
  for (uint64_t i = 0; i < n_seen; ++i) {
    uint64_t mmsi = r.u64();
    s.last_seen_[mmsi] = r.i64();
  }
  uint64_t n_open = r.u64();
  for (uint64_t i = 0; i < n_open; ++i) {
    uint64_t mmsi = r.u64();
    OpenTrack ot;
    ot.track.mmsi = mmsi;
    ot.next_watermark = r.u32();
    ot.tested = r.u8() != 0;
    uint64_t n_pts = r.u64();
    ot.track.points.reserve(n_pts);
    for (uint64_t k = 0; k < n_pts; ++k) {
      ot.track.points.push_back(get_message(r));
    }
    s.open_.emplace(mmsi, std::move(ot));
  }
  if (!r.done()) throw TruncatedInputError();
  return s;
}

BatchResult preprocess_batch(std::span<const AisMessage> messages,
                             const PreprocessConfig& cfg) {
  OperatorState state(cfg);
  BatchResult out;
  auto handle = [&](std::vector<Event> events) {
    for (auto& ev : events) {
      if (auto* closed = std::get_if<TrackClosed>(&ev)) {
        if (closed->track.duration_s() >= cfg.min_track_duration_s) {
          out.tracks.push_back(resample(closed->track, cfg.resample_period_s));
          out.track_ids.push_back(closed->id);
        }
      }
    }
  };
  for (const auto& msg : messages) handle(state.process(msg));
  handle(state.flush_all());
  out.counters = state.counters();
  return out;
}

}  // namespace aisdet
