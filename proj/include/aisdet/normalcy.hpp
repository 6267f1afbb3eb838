#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aisdet/domain.hpp"

namespace aisdet {

/// Per-message likelihood scorer with cell-local thresholds. detect_track
/// works against this interface; the histogram model below is the reference
/// implementation.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const AisMessage& msg) const = 0;  // log-likelihood
  virtual bool cell_validated(CellId cell) const = 0;
  virtual double threshold(CellId cell) const = 0;  // only for validated cells
  virtual int validated_cell_count() const = 0;
  virtual const Roi& roi() const = 0;
  virtual const GridConfig& grid() const = 0;
};

struct NormalcyParams {
  double alpha = 1.0;          // Laplace pseudo-count
  double q = 0.05;             // per-message quantile level
  uint64_t min_cell_count = 50;
  double epsilon_nfa = 1.0;

  bool valid() const {
    return alpha > 0 && q > 0 && q < 1 && epsilon_nfa > 0;
  }
  bool operator==(const NormalcyParams&) const = default;
};

class EmptyTrainingSetError : public std::runtime_error {
 public:
  EmptyTrainingSetError() : std::runtime_error("empty training set") {}
};

enum class ModelErrorKind { io, version_mismatch, corrupt };

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ModelErrorKind kind() const { return kind_; }

 private:
  ModelErrorKind kind_;
};

/// Cell-conditional histogram over (sog_bin, cog_bin) with Laplace smoothing.
/// Immutable after fit; concurrent readers need no synchronization.
class NormalcyModel final : public Scorer {
 public:
  static NormalcyModel fit(const std::vector<Track>& tracks, const Roi& roi,
                           const GridConfig& grid, const NormalcyParams& params);

  double score(const AisMessage& msg) const override;
  bool cell_validated(CellId cell) const override;
  double threshold(CellId cell) const override;
  int validated_cell_count() const override { return validated_cells_; }
  const Roi& roi() const override { return roi_; }
  const GridConfig& grid() const override { return grid_; }
  const NormalcyParams& params() const { return params_; }
  GridShape shape() const { return shape_; }

  uint64_t count(CellId cell, KinematicBin bin) const;
  uint64_t cell_total(CellId cell) const;

  /// Model file: magic `GTNM`, version u16, length-prefixed payload
  /// (config + dense counts), CRC-32 trailer.
  void save(const std::filesystem::path& path) const;
  static NormalcyModel load(const std::filesystem::path& path);
  std::vector<uint8_t> serialize() const;
  static NormalcyModel deserialize(std::span<const uint8_t> bytes);

  bool operator==(const NormalcyModel& other) const;

 private:
  NormalcyModel() = default;
  void compute_thresholds();
  size_t flat_index(CellId cell, KinematicBin bin) const;

  Roi roi_;
  GridConfig grid_;
  NormalcyParams params_;
  GridShape shape_;
  std::vector<uint64_t> counts_;       // [cell * B + bin]
  std::vector<uint64_t> cell_totals_;  // [cell]
  std::vector<double> thresholds_;     // [cell], NaN when unvalidated
  int validated_cells_ = 0;
};

enum class Decision : uint8_t { normal = 0, abnormal = 1, insufficient_data = 2 };

std::string_view to_string(Decision d);

struct MessageFlag {
  bool abnormal = false;
  bool unvalidated_cell = false;
  double score = 0.0;
  double threshold = 0.0;  // NaN in unvalidated cells
};

struct Verdict {
  std::string track_id;
  uint64_t mmsi = 0;
  int64_t t_start = 0;
  int64_t t_end = 0;
  int n = 0;  // scored messages
  int k = 0;  // abnormal flags
  std::vector<MessageFlag> flags;
  double nfa = 0.0;
  Decision decision = Decision::normal;
};

class TrackTooShortError : public std::runtime_error {
 public:
  TrackTooShortError() : std::runtime_error("track too short for detection") {}
};

/// Upper binomial tail P[X >= k], X ~ Bin(n, q). Log-space, stable for
/// n up to 10000. Throws std::domain_error on invalid arguments.
double binomial_tail(int n, int k, double q);

/// Cell-local a-contrario rule: a message is flagged when its score falls
/// below its cell threshold or its cell is unvalidated. The track decision
/// bounds the expected number of false alarms:
/// nfa = validated_cells * binomial_tail(n, k, q).
Verdict detect_track(const Scorer& scorer, const Track& resampled,
                     const NormalcyParams& params, int min_points,
                     const std::string& track_id);

struct GeofenceZone {
  std::string name;
  std::vector<std::pair<double, double>> ring;  // (lat, lon), implicit closure
};

/// Even-odd point-in-polygon test per zone; boundary points count as inside.
std::vector<std::string> geofence_check(const AisMessage& msg,
                                        const std::vector<GeofenceZone>& zones);

/// Reads a GeoJSON FeatureCollection of Polygon features with a `name`
/// property.
std::vector<GeofenceZone> load_geofence_zones(const std::filesystem::path& path);

}  // namespace aisdet
