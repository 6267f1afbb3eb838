#include "aisdet/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "aisdet/binio.hpp"

namespace aisdet {

int partition_of(uint64_t mmsi, int n_partitions) {
  uint8_t be[8];
  for (int i = 0; i < 8; ++i) {
    be[i] = static_cast<uint8_t>(mmsi >> (56 - 8 * i));
  }
  return static_cast<int>(fnv1a64(be) % static_cast<uint64_t>(n_partitions));
}

std::vector<uint8_t> encode_message(const AisMessage& msg) {
  ByteWriter w;
  w.u64(msg.mmsi);
  w.i64(msg.timestamp);
  w.f64(msg.lat);
  w.f64(msg.lon);
  w.f64(msg.sog);
  w.f64(msg.cog);
  w.u8(static_cast<uint8_t>(msg.source));
  return w.take();
}

AisMessage decode_message(std::span<const uint8_t> payload) {
  ByteReader r(payload);
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

PartitionedLog::PartitionedLog(int n_partitions) {
  parts_.resize(static_cast<size_t>(std::max(1, n_partitions)));
}

std::pair<int, uint64_t> PartitionedLog::publish(uint64_t key,
                                                 std::vector<uint8_t> payload) {
  std::lock_guard lock(mu_);
  if (closed_) throw LogClosedError();
  int p = partition_of(key, partitions());
  uint64_t offset = parts_[p].size();
  parts_[p].push_back(LogRecord{offset, key, std::move(payload)});
  return {p, offset};
}

void PartitionedLog::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
}

bool PartitionedLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

uint64_t PartitionedLog::size(int partition) const {
  std::lock_guard lock(mu_);
  return parts_[partition].size();
}

LogRecord PartitionedLog::read(int partition, uint64_t offset) const {
  std::lock_guard lock(mu_);
  return parts_[partition].at(offset);
}

namespace {
constexpr char kLogMagic[4] = {'G', 'T', 'P', 'L'};
constexpr uint16_t kLogVersion = 1;
}  // namespace

void PartitionedLog::save(const std::filesystem::path& dir) const {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir);
  for (size_t p = 0; p < parts_.size(); ++p) {
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(kLogMagic), 4));
    w.u16(kLogVersion);
    for (const auto& rec : parts_[p]) {
      ByteWriter body;
      body.u64(rec.offset);
      body.u32(8);  // key length: fixed-width u64
      body.u64(rec.key);
      body.bytes(rec.payload);
      w.u32(static_cast<uint32_t>(body.data().size()));
      w.bytes(body.data());
    }
    char name[32];
    std::snprintf(name, sizeof(name), "partition-%04zu.gtpl", p);
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw LogError(LogErrorKind::io, "cannot write partition file");
    out.write(reinterpret_cast<const char*>(w.data().data()),
              static_cast<std::streamsize>(w.data().size()));
    if (!out) throw LogError(LogErrorKind::io, "partition write failed");
  }
}

std::shared_ptr<PartitionedLog> PartitionedLog::load(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw LogError(LogErrorKind::io, "no such log directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".gtpl") files.push_back(entry.path());
  }
  if (files.empty()) {
    throw LogError(LogErrorKind::io, "no partition files in " + dir.string());
  }
  std::sort(files.begin(), files.end());

  auto log = std::make_shared<PartitionedLog>(static_cast<int>(files.size()));
  for (size_t p = 0; p < files.size(); ++p) {
    std::ifstream in(files[p], std::ios::binary);
    if (!in) throw LogError(LogErrorKind::io, "cannot open " + files[p].string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    try {
      ByteReader r(bytes);
      auto magic = r.bytes(4);
      if (!std::equal(magic.begin(), magic.end(),
                      reinterpret_cast<const uint8_t*>(kLogMagic))) {
        throw LogError(LogErrorKind::corrupt, "bad partition magic");
      }
      uint16_t version = r.u16();
      if (version != kLogVersion) {
        throw LogError(LogErrorKind::version_mismatch,
                       "unsupported partition log version");
      }
      while (!r.done()) {
        uint32_t len = r.u32();
        ByteReader body(r.bytes(len));
        LogRecord rec;
        rec.offset = body.u64();
        uint32_t key_len = body.u32();
        if (key_len != 8) {
          throw LogError(LogErrorKind::corrupt, "unexpected key length");
        }
        rec.key = body.u64();
        auto payload = body.bytes(body.remaining());
        rec.payload.assign(payload.begin(), payload.end());
        if (rec.offset != log->parts_[p].size()) {
          throw LogError(LogErrorKind::corrupt, "non-contiguous offsets");
        }
        log->parts_[p].push_back(std::move(rec));
      }
    } catch (const TruncatedInputError&) {
      throw LogError(LogErrorKind::corrupt,
                     "truncated partition file " + files[p].string());
    }
  }
  return log;
}

OperatorGroup OperatorGroup::make(int n_partitions, int replicas) {
  OperatorGroup g;
  g.replicas = std::max(1, std::min(replicas, n_partitions));
  g.assignment.resize(static_cast<size_t>(n_partitions));
  for (int p = 0; p < n_partitions; ++p) {
    g.assignment[p] = p % g.replicas;
  }
  return g;
}

std::string Alert::to_json() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"track_id\":\"%s\",\"mmsi\":%llu,\"t_start\":%lld,"
                "\"t_end\":%lld,\"n\":%d,\"k\":%d,\"nfa\":%.17g,"
                "\"decision\":\"%s\"}",
                track_id.c_str(), static_cast<unsigned long long>(mmsi),
                static_cast<long long>(t_start), static_cast<long long>(t_end),
                n, k, nfa, std::string(to_string(decision)).c_str());
  return buf;
}

Engine::Engine(std::shared_ptr<PartitionedLog> log, PreprocessConfig preprocess,
               const Scorer* scorer, DetectParams detect, int replicas)
    : log_(std::move(log)),
      preprocess_(std::move(preprocess)),
      scorer_(scorer),
      detect_(detect) {
  group_ = OperatorGroup::make(log_->partitions(), replicas);
  parts_.resize(static_cast<size_t>(log_->partitions()));
  for (auto& pr : parts_) {
    pr.state = std::make_unique<OperatorState>(preprocess_);
  }
}

void Engine::rebalance(int new_replica_count) {
  OperatorGroup next = OperatorGroup::make(log_->partitions(), new_replica_count);
  // Moved partitions ship their operator state through the serialized
  // handoff contract; the byte round-trip is the delivery.
  for (int p = 0; p < log_->partitions(); ++p) {
    if (next.assignment[p] != group_.assignment[p]) {
      auto bytes = parts_[p].state->serialize();
      parts_[p].state = std::make_unique<OperatorState>(
          OperatorState::deserialize(bytes, preprocess_));
    }
  }
  group_ = next;
}

void Engine::handle_events(std::vector<Event>&& events) {
  for (auto& ev : events) {
    if (auto* closed = std::get_if<TrackClosed>(&ev)) {
      std::lock_guard lock(emit_mu_);
      closed_.insert(closed->id.str());
    } else if (auto* due = std::get_if<DetectionDue>(&ev)) {
      // Timed section covers resampling plus scoring, per-track.
      auto t0 = std::chrono::steady_clock::now();
      Track resampled = resample(due->raw, preprocess_.resample_period_s);
      Verdict v = detect_track(*scorer_, resampled, detect_.normalcy,
                               detect_.min_points, due->id.str());
      auto t1 = std::chrono::steady_clock::now();
      double seconds = std::chrono::duration<double>(t1 - t0).count();

      std::optional<Alert> emitted;
      {
        std::lock_guard lock(emit_mu_);
        detection_seconds_.push_back(seconds);
        if (v.decision != Decision::normal) {
          Alert a{v.track_id, v.mmsi,     v.t_start, v.t_end, v.n,
                  v.k,        v.nfa,      v.decision, due->watermark};
          auto key = std::make_pair(v.track_id, due->watermark);
          if (alerts_.emplace(key, a).second) emitted = a;
        }
      }
      if (emitted && alert_sink) alert_sink(*emitted);
    }
  }
}

void Engine::process_record(int partition, const LogRecord& record) {
  if (record_tap) record_tap(partition, record.offset, record.key);
  AisMessage msg = decode_message(record.payload);
  handle_events(parts_[partition].state->process(msg));
  parts_[partition].committed = record.offset + 1;  // commit after mutation
}

bool Engine::step(uint64_t max_records_per_partition) {
  bool progressed = false;
  for (int r = 0; r < group_.replicas; ++r) {
    for (int p = 0; p < log_->partitions(); ++p) {
      if (group_.assignment[p] != r) continue;
      uint64_t end = log_->size(p);
      uint64_t n = 0;
      while (parts_[p].committed < end && n < max_records_per_partition) {
        process_record(p, log_->read(p, parts_[p].committed));
        ++n;
      }
      progressed = progressed || n > 0;
    }
  }
  return progressed;
}

void Engine::consume_available(int partition) {
  uint64_t end = log_->size(partition);
  while (parts_[partition].committed < end) {
    process_record(partition, log_->read(partition, parts_[partition].committed));
  }
}

void Engine::run_to_end() {
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(group_.replicas));
  for (int r = 0; r < group_.replicas; ++r) {
    threads.emplace_back([this, r] {
      for (int p = 0; p < log_->partitions(); ++p) {
        if (group_.assignment[p] == r) consume_available(p);
      }
    });
  }
  for (auto& t : threads) t.join();
}

void Engine::run_live(const std::function<bool()>& stop) {
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(group_.replicas));
  for (int r = 0; r < group_.replicas; ++r) {
    threads.emplace_back([this, r, &stop] {
      while (true) {
        bool idle = true;
        for (int p = 0; p < log_->partitions(); ++p) {
          if (group_.assignment[p] != r) continue;
          if (parts_[p].committed < log_->size(p)) {
            consume_available(p);
            idle = false;
          }
        }
        if (idle) {
          if (stop() && log_->closed()) return;
          std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
      }
    });
  }
  for (auto& t : threads) t.join();
}

void Engine::flush_open_tracks() {
  for (auto& pr : parts_) {
    handle_events(pr.state->flush_all());
  }
}

std::vector<Alert> Engine::alerts() const {
  std::lock_guard lock(emit_mu_);
  std::vector<Alert> out;
  out.reserve(alerts_.size());
  for (const auto& [_, a] : alerts_) out.push_back(a);
  return out;
}

std::vector<std::string> Engine::closed_track_ids() const {
  std::lock_guard lock(emit_mu_);
  return {closed_.begin(), closed_.end()};
}

PipelineCounters Engine::counters() const {
  PipelineCounters total;
  for (const auto& pr : parts_) {
    const auto& c = pr.state->counters();
    total.processed += c.processed;
    total.kept += c.kept;
    total.dropped += c.dropped;
    for (int i = 0; i < 4; ++i) {
      total.dropped_by_reason[i] += c.dropped_by_reason[i];
    }
    total.built += c.built;
    total.tested += c.tested;
  }
  return total;
}

std::vector<double> Engine::detection_seconds() const {
  std::lock_guard lock(emit_mu_);
  return detection_seconds_;
}

std::vector<uint8_t> Engine::snapshot() const {
  ByteWriter w;
  w.u64(parts_.size());
  for (const auto& pr : parts_) {
    w.u64(pr.committed);
    auto bytes = pr.state->serialize();
    w.u32(static_cast<uint32_t>(bytes.size()));
    w.bytes(bytes);
  }
  return w.take();
}

void Engine::restore(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  uint64_t n = r.u64();
  if (n != parts_.size()) {
    throw std::runtime_error("snapshot partition count mismatch");
  }
  for (auto& pr : parts_) {
    pr.committed = r.u64();
    uint32_t len = r.u32();
    pr.state = std::make_unique<OperatorState>(
        OperatorState::deserialize(r.bytes(len), preprocess_));
  }
}

void Engine::rewind(int partition, uint64_t offset) {
  parts_[partition].committed = std::min(parts_[partition].committed, offset);
}

}  // namespace aisdet
