#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aisdet/normalcy.hpp"
#include "aisdet/preprocess.hpp"

namespace aisdet {

/// Stable MMSI-keyed partitioning: FNV-1a 64 over the 8-byte big-endian
/// encoding, modulo the partition count.
int partition_of(uint64_t mmsi, int n_partitions);

std::vector<uint8_t> encode_message(const AisMessage& msg);
AisMessage decode_message(std::span<const uint8_t> payload);

class LogClosedError : public std::runtime_error {
 public:
  LogClosedError() : std::runtime_error("log is closed") {}
};

enum class LogErrorKind { io, version_mismatch, corrupt };

class LogError : public std::runtime_error {
 public:
  LogError(LogErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  LogErrorKind kind() const { return kind_; }

 private:
  LogErrorKind kind_;
};

struct LogRecord {
  uint64_t offset = 0;
  uint64_t key = 0;
  std::vector<uint8_t> payload;
};

/// In-process keyed log: per-partition append-only FIFO sequences.
/// publish() is safe from multiple threads; readers see a consistent
/// prefix per partition.
class PartitionedLog {
 public:
  explicit PartitionedLog(int n_partitions);

  std::pair<int, uint64_t> publish(uint64_t key, std::vector<uint8_t> payload);
  std::pair<int, uint64_t> publish(const AisMessage& msg) {
    return publish(msg.mmsi, encode_message(msg));
  }
  void close();
  bool closed() const;

  int partitions() const { return static_cast<int>(parts_.size()); }
  uint64_t size(int partition) const;
  LogRecord read(int partition, uint64_t offset) const;

  /// One `GTPL` file per partition in `dir`.
  void save(const std::filesystem::path& dir) const;
  static std::shared_ptr<PartitionedLog> load(const std::filesystem::path& dir);

 private:
  mutable std::mutex mu_;
  bool closed_ = false;
  std::vector<std::vector<LogRecord>> parts_;
};

/// Partition-to-replica ownership; round-robin assignment.
struct OperatorGroup {
  int replicas = 1;
  std::vector<int> assignment;  // partition -> replica

  static OperatorGroup make(int n_partitions, int replicas);
};

struct Alert {
  std::string track_id;
  uint64_t mmsi = 0;
  int64_t t_start = 0;
  int64_t t_end = 0;
  int n = 0;
  int k = 0;
  double nfa = 0.0;
  Decision decision = Decision::normal;
  uint32_t watermark = 0;

  std::string to_json() const;
};

struct DetectParams {
  NormalcyParams normalcy;
  int min_points = 25;
};

/// Drives replicated operators over a partitioned log: per-partition
/// OperatorState, per-message offset commit (at-least-once), alert and
/// track-closed de-duplication. Single-threaded stepping is available for
/// deterministic rebalance testing; run_to_end() uses one thread per
/// replica.
class Engine {
 public:
  Engine(std::shared_ptr<PartitionedLog> log, PreprocessConfig preprocess,
         const Scorer* scorer, DetectParams detect, int replicas);

  /// Reassigns partitions round-robin and ships moved partition state
  /// through the serialize/deserialize handoff contract.
  void rebalance(int new_replica_count);

  /// Processes up to max_records per partition, single-threaded, partitions
  /// in replica-then-partition order. Returns false when nothing remains.
  bool step(uint64_t max_records_per_partition);

  /// Consumes everything currently in the log with one thread per replica.
  void run_to_end();

  /// Polling consume loop for live mode; returns when `stop` is set and the
  /// log is drained.
  void run_live(const std::function<bool()>& stop);

  void flush_open_tracks();

  std::vector<Alert> alerts() const;               // de-duplicated, sorted
  std::vector<std::string> closed_track_ids() const;
  PipelineCounters counters() const;               // aggregated
  std::vector<double> detection_seconds() const;
  int replicas() const { return group_.replicas; }

  /// Crash simulation hooks: snapshot/restore all partition states and
  /// committed offsets; rewind resets one partition's committed offset.
  std::vector<uint8_t> snapshot() const;
  void restore(std::span<const uint8_t> bytes);
  void rewind(int partition, uint64_t offset);

  /// Test tap: called for every consumed record (partition, offset, key).
  /// Only safe with single-threaded stepping.
  std::function<void(int, uint64_t, uint64_t)> record_tap;

  /// Alert sink for live mode; called outside the engine mutex.
  std::function<void(const Alert&)> alert_sink;

 private:
  void process_record(int partition, const LogRecord& record);
  void consume_available(int partition);
  void handle_events(std::vector<Event>&& events);

  std::shared_ptr<PartitionedLog> log_;
  PreprocessConfig preprocess_;
  const Scorer* scorer_;
  DetectParams detect_;
  OperatorGroup group_;

  struct PartitionRuntime {
    std::unique_ptr<OperatorState> state;
    uint64_t committed = 0;
  };
  std::vector<PartitionRuntime> parts_;

  mutable std::mutex emit_mu_;
  std::map<std::pair<std::string, uint32_t>, Alert> alerts_;  // de-dup
  std::set<std::string> closed_;
  std::vector<double> detection_seconds_;
};

}  // namespace aisdet
