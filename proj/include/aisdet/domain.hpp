#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aisdet {

enum class Source : uint8_t { terrestrial = 0, satellite = 1, unknown = 2 };

/// One timestamped AIS position report.
struct AisMessage {
  uint64_t mmsi = 0;       // 1..999999999
  int64_t timestamp = 0;   // seconds since epoch
  double lat = 0.0;        // degrees, [-90, 90]
  double lon = 0.0;        // degrees, [-180, 180]
  double sog = 0.0;        // knots, >= 0
  double cog = 0.0;        // degrees, [0, 360)
  Source source = Source::unknown;

  bool operator==(const AisMessage&) const = default;
};

/// Wraps a course into [0, 360); 360 maps to 0.
double normalize_cog(double cog_deg);

/// Geographic bounding box. Both upper edges are inclusive; no antimeridian
/// wrap.
struct Roi {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool valid() const { return lat_min < lat_max && lon_min < lon_max; }
  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
  double lat_span() const { return lat_max - lat_min; }
  double lon_span() const { return lon_max - lon_min; }

  bool operator==(const Roi&) const = default;
};

/// Spatial/kinematic discretization used by the normalcy model.
struct GridConfig {
  double cell_size_deg = 0.1;
  double sog_bin_knots = 1.0;
  double sog_cap_knots = 30.0;
  double cog_bin_deg = 10.0;

  int sog_bins() const {
    return static_cast<int>(std::ceil(sog_cap_knots / sog_bin_knots));
  }
  int cog_bins() const {
    return static_cast<int>(std::lround(360.0 / cog_bin_deg));
  }
  /// Total kinematic bins per cell.
  int kinematic_bins() const { return sog_bins() * cog_bins(); }

  bool valid() const;

  bool operator==(const GridConfig&) const = default;
};

struct CellId {
  int row = 0;
  int col = 0;
  auto operator<=>(const CellId&) const = default;
};

struct GridShape {
  int rows = 0;
  int cols = 0;
  int cells() const { return rows * cols; }
  bool operator==(const GridShape&) const = default;
};

GridShape grid_shape(const Roi& roi, const GridConfig& grid);

class OutOfRoiError : public std::runtime_error {
 public:
  OutOfRoiError(double lat, double lon);
};

/// Maps an in-ROI position to its grid cell. Points exactly on the upper
/// lat/lon edge clamp into the last row/col. Throws OutOfRoiError otherwise.
CellId cell_index(const AisMessage& msg, const Roi& roi, const GridConfig& grid);

struct KinematicBin {
  int sog_bin = 0;
  int cog_bin = 0;
  auto operator<=>(const KinematicBin&) const = default;
};

/// Discretizes (sog, cog). SOG at or above the cap clamps into the top bin.
KinematicBin kinematic_bin(const AisMessage& msg, const GridConfig& grid);

/// Inverse of cell_index up to the cell's bounding box.
struct CellBox {
  double lat_min, lat_max, lon_min, lon_max;
};
CellBox cell_box(CellId cell, const Roi& roi, const GridConfig& grid);

/// Time-ordered message sequence for one vessel.
struct Track {
  uint64_t mmsi = 0;
  std::vector<AisMessage> points;
  bool complete = false;

  int64_t duration_s() const {
    return points.empty() ? 0
                          : points.back().timestamp - points.front().timestamp;
  }
  bool operator==(const Track&) const = default;
};

/// Stable track identity: vessel plus the timestamp the track was opened at.
struct TrackId {
  uint64_t mmsi = 0;
  int64_t t_open = 0;

  std::string str() const {
    return std::to_string(mmsi) + ":" + std::to_string(t_open);
  }
  auto operator<=>(const TrackId&) const = default;
};

}  // namespace aisdet
