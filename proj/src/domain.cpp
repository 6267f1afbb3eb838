#include "aisdet/domain.hpp"

#include <algorithm>

namespace aisdet {

double normalize_cog(double cog_deg) {
  double c = std::fmod(cog_deg, 360.0);
  if (c < 0.0) c += 360.0;
  if (c >= 360.0) c = 0.0;  // fmod can return 360.0 - eps rounding up
  return c;
}

bool GridConfig::valid() const {
  if (cell_size_deg <= 0.0 || sog_bin_knots <= 0.0 || sog_cap_knots <= 0.0 ||
      cog_bin_deg <= 0.0) {
    return false;
  }
  // cog bin width must divide 360 evenly
  double n = 360.0 / cog_bin_deg;
  return std::abs(n - std::round(n)) < 1e-9;
}

GridShape grid_shape(const Roi& roi, const GridConfig& grid) {
  GridShape s;
  s.rows = static_cast<int>(std::ceil(roi.lat_span() / grid.cell_size_deg - 1e-12));
  s.cols = static_cast<int>(std::ceil(roi.lon_span() / grid.cell_size_deg - 1e-12));
  s.rows = std::max(s.rows, 1);
  s.cols = std::max(s.cols, 1);
  return s;
}

OutOfRoiError::OutOfRoiError(double lat, double lon)
    : std::runtime_error("position (" + std::to_string(lat) + ", " +
                         std::to_string(lon) + ") outside ROI") {}

CellId cell_index(const AisMessage& msg, const Roi& roi,
                  const GridConfig& grid) {
  if (!roi.contains(msg.lat, msg.lon)) {
    throw OutOfRoiError(msg.lat, msg.lon);
  }
  GridShape shape = grid_shape(roi, grid);
  int row = static_cast<int>(
      std::floor((msg.lat - roi.lat_min) / grid.cell_size_deg));
  int col = static_cast<int>(
      std::floor((msg.lon - roi.lon_min) / grid.cell_size_deg));
  // upper-edge points clamp into the last row/col
  row = std::clamp(row, 0, shape.rows - 1);
  col = std::clamp(col, 0, shape.cols - 1);
  return CellId{row, col};
}

KinematicBin kinematic_bin(const AisMessage& msg, const GridConfig& grid) {
  double sog = std::min(msg.sog, std::nextafter(grid.sog_cap_knots, 0.0));
  int sog_bin = static_cast<int>(std::floor(sog / grid.sog_bin_knots));
  sog_bin = std::clamp(sog_bin, 0, grid.sog_bins() - 1);
  int cog_bin =
      static_cast<int>(std::floor(normalize_cog(msg.cog) / grid.cog_bin_deg));
  cog_bin = std::clamp(cog_bin, 0, grid.cog_bins() - 1);
  return KinematicBin{sog_bin, cog_bin};
}

CellBox cell_box(CellId cell, const Roi& roi, const GridConfig& grid) {
  GridShape shape = grid_shape(roi, grid);
  CellBox box;
  box.lat_min = roi.lat_min + cell.row * grid.cell_size_deg;
  box.lon_min = roi.lon_min + cell.col * grid.cell_size_deg;
  box.lat_max = cell.row == shape.rows - 1
                    ? roi.lat_max
                    : box.lat_min + grid.cell_size_deg;
  box.lon_max = cell.col == shape.cols - 1
                    ? roi.lon_max
                    : box.lon_min + grid.cell_size_deg;
  return box;
}

}  // namespace aisdet
