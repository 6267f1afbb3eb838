#include "aisdet/normalcy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "aisdet/binio.hpp"

namespace aisdet {

namespace {
constexpr char kMagic[4] = {'G', 'T', 'N', 'M'};
constexpr uint16_t kVersion = 1;
}  // namespace

size_t NormalcyModel::flat_index(CellId cell, KinematicBin bin) const {
  size_t c = static_cast<size_t>(cell.row) * shape_.cols + cell.col;
  return c * grid_.kinematic_bins() +
         static_cast<size_t>(bin.sog_bin) * grid_.cog_bins() + bin.cog_bin;
}

NormalcyModel NormalcyModel::fit(const std::vector<Track>& tracks,
                                 const Roi& roi, const GridConfig& grid,
                                 const NormalcyParams& params) {
  NormalcyModel m;
  m.roi_ = roi;
  m.grid_ = grid;
  m.params_ = params;
  m.shape_ = grid_shape(roi, grid);
  size_t bins = static_cast<size_t>(m.shape_.cells()) * grid.kinematic_bins();
  m.counts_.assign(bins, 0);

  uint64_t total = 0;
  for (const auto& track : tracks) {
    for (const auto& msg : track.points) {
      CellId cell = cell_index(msg, roi, grid);
      KinematicBin bin = kinematic_bin(msg, grid);
      ++m.counts_[m.flat_index(cell, bin)];
      ++total;
    }
  }
  if (total == 0) throw EmptyTrainingSetError();
  m.compute_thresholds();
  return m;
}

void NormalcyModel::compute_thresholds() {
  int cells = shape_.cells();
  int B = grid_.kinematic_bins();
  cell_totals_.assign(cells, 0);
  thresholds_.assign(cells, std::numeric_limits<double>::quiet_NaN());
  validated_cells_ = 0;

  for (int c = 0; c < cells; ++c) {
    uint64_t total = 0;
    for (int b = 0; b < B; ++b) {
      total += counts_[static_cast<size_t>(c) * B + b];
    }
    cell_totals_[c] = total;
    if (total < params_.min_cell_count) continue;
    ++validated_cells_;

    // The training scores in this cell form a multiset: each message in bin
    // b scores log((n_b + a)/(N + aB)). The threshold is the empirical
    // q-quantile with lower interpolation.
    std::vector<std::pair<double, uint64_t>> by_score;
    double denom = static_cast<double>(total) + params_.alpha * B;
    for (int b = 0; b < B; ++b) {
      uint64_t n_b = counts_[static_cast<size_t>(c) * B + b];
      if (n_b == 0) continue;
      by_score.emplace_back(std::log((n_b + params_.alpha) / denom), n_b);
    }
    std::sort(by_score.begin(), by_score.end());
    uint64_t target = static_cast<uint64_t>(
        std::floor(params_.q * static_cast<double>(total - 1)));
    uint64_t seen = 0;
    for (const auto& [score, n_b] : by_score) {
      seen += n_b;
      if (seen > target) {
        thresholds_[c] = score;
        break;
      }
    }
  }
}

double NormalcyModel::score(const AisMessage& msg) const {
  CellId cell = cell_index(msg, roi_, grid_);
  KinematicBin bin = kinematic_bin(msg, grid_);
  size_t c = static_cast<size_t>(cell.row) * shape_.cols + cell.col;
  double B = grid_.kinematic_bins();
  double n = static_cast<double>(counts_[flat_index(cell, bin)]);
  double total = static_cast<double>(cell_totals_[c]);
  return std::log((n + params_.alpha) / (total + params_.alpha * B));
}

bool NormalcyModel::cell_validated(CellId cell) const {
  size_t c = static_cast<size_t>(cell.row) * shape_.cols + cell.col;
  return cell_totals_[c] >= params_.min_cell_count;
}

double NormalcyModel::threshold(CellId cell) const {
  size_t c = static_cast<size_t>(cell.row) * shape_.cols + cell.col;
  return thresholds_[c];
}

uint64_t NormalcyModel::count(CellId cell, KinematicBin bin) const {
  return counts_[flat_index(cell, bin)];
}

uint64_t NormalcyModel::cell_total(CellId cell) const {
  return cell_totals_[static_cast<size_t>(cell.row) * shape_.cols + cell.col];
}

std::vector<uint8_t> NormalcyModel::serialize() const {
  ByteWriter payload;
  payload.f64(roi_.lat_min);
  payload.f64(roi_.lat_max);
  payload.f64(roi_.lon_min);
  payload.f64(roi_.lon_max);
  payload.f64(grid_.cell_size_deg);
  payload.f64(grid_.sog_bin_knots);
  payload.f64(grid_.sog_cap_knots);
  payload.f64(grid_.cog_bin_deg);
  payload.f64(params_.alpha);
  payload.f64(params_.q);
  payload.u64(params_.min_cell_count);
  payload.f64(params_.epsilon_nfa);
  payload.u32(static_cast<uint32_t>(shape_.rows));
  payload.u32(static_cast<uint32_t>(shape_.cols));
  payload.u32(static_cast<uint32_t>(grid_.kinematic_bins()));
  for (uint64_t c : counts_) payload.u64(c);

  ByteWriter w;
  w.bytes(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(kMagic), 4));
  w.u16(kVersion);
  w.u32(static_cast<uint32_t>(payload.data().size()));
  w.bytes(payload.data());
  uint32_t crc = crc32(w.data());
  w.u32(crc);
  return w.take();
}

NormalcyModel NormalcyModel::deserialize(std::span<const uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(),
                    reinterpret_cast<const uint8_t*>(kMagic))) {
      throw ModelError(ModelErrorKind::corrupt, "bad model magic");
    }
    uint16_t version = r.u16();
    if (version != kVersion) {
      throw ModelError(ModelErrorKind::version_mismatch,
                       "unsupported model version " + std::to_string(version));
    }
    uint32_t payload_len = r.u32();
    if (r.remaining() != payload_len + 4u) {
      throw ModelError(ModelErrorKind::corrupt, "model payload length mismatch");
    }
    uint32_t expected = crc32(bytes.subspan(0, bytes.size() - 4));
    ByteReader payload(r.bytes(payload_len));
    uint32_t stored = r.u32();
    if (stored != expected) {
      throw ModelError(ModelErrorKind::corrupt, "model checksum mismatch");
    }

    NormalcyModel m;
    m.roi_.lat_min = payload.f64();
    m.roi_.lat_max = payload.f64();
    m.roi_.lon_min = payload.f64();
    m.roi_.lon_max = payload.f64();
    m.grid_.cell_size_deg = payload.f64();
    m.grid_.sog_bin_knots = payload.f64();
    m.grid_.sog_cap_knots = payload.f64();
    m.grid_.cog_bin_deg = payload.f64();
    m.params_.alpha = payload.f64();
    m.params_.q = payload.f64();
    m.params_.min_cell_count = payload.u64();
    m.params_.epsilon_nfa = payload.f64();
    m.shape_.rows = static_cast<int>(payload.u32());
    m.shape_.cols = static_cast<int>(payload.u32());
    uint32_t bins = payload.u32();
    if (!m.roi_.valid() || !m.grid_.valid() ||
        m.shape_ != grid_shape(m.roi_, m.grid_) ||
        bins != static_cast<uint32_t>(m.grid_.kinematic_bins())) {
      throw ModelError(ModelErrorKind::corrupt, "inconsistent model config");
    }
    size_t n = static_cast<size_t>(m.shape_.cells()) * bins;
    m.counts_.reserve(n);
    for (size_t i = 0; i < n; ++i) m.counts_.push_back(payload.u64());
    if (!payload.done()) {
      throw ModelError(ModelErrorKind::corrupt, "trailing model payload");
    }
    m.compute_thresholds();
    return m;
  } catch (const TruncatedInputError&) {
    throw ModelError(ModelErrorKind::corrupt, "truncated model file");
  }
}

void NormalcyModel::save(const std::filesystem::path& path) const {
  auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError(ModelErrorKind::io, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError(ModelErrorKind::io, "write failed: " + path.string());
}

NormalcyModel NormalcyModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(ModelErrorKind::io, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

bool NormalcyModel::operator==(const NormalcyModel& other) const {
  return roi_ == other.roi_ && grid_ == other.grid_ &&
         params_ == other.params_ && shape_ == other.shape_ &&
         counts_ == other.counts_;
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::normal: return "normal";
    case Decision::abnormal: return "abnormal";
    case Decision::insufficient_data: return "insufficient-data";
  }
  return "unknown";
}

double binomial_tail(int n, int k, double q) {
  if (n < 0 || k < 0 || k > n || q <= 0.0 || q >= 1.0) {
    throw std::domain_error("binomial_tail: invalid arguments");
  }
  if (k == 0) return 1.0;
  double log_q = std::log(q);
  double log_1mq = std::log1p(-q);
  // log C(n,i) + i log q + (n-i) log(1-q), summed from the largest term
  std::vector<double> log_terms;
  log_terms.reserve(n - k + 1);
  double max_term = -std::numeric_limits<double>::infinity();
  for (int i = k; i <= n; ++i) {
    double lt = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                std::lgamma(n - i + 1.0) + i * log_q + (n - i) * log_1mq;
    log_terms.push_back(lt);
    max_term = std::max(max_term, lt);
  }
  double sum = 0.0;
  for (double lt : log_terms) sum += std::exp(lt - max_term);
  return std::min(1.0, std::exp(max_term) * sum);
}

Verdict detect_track(const Scorer& scorer, const Track& resampled,
                     const NormalcyParams& params, int min_points,
                     const std::string& track_id) {
  int n = static_cast<int>(resampled.points.size());
  if (n < min_points) throw TrackTooShortError();

  Verdict v;
  v.track_id = track_id;
  v.mmsi = resampled.mmsi;
  v.t_start = resampled.points.front().timestamp;
  v.t_end = resampled.points.back().timestamp;
  v.n = n;
  v.flags.reserve(resampled.points.size());

  int unvalidated = 0;
  for (const auto& msg : resampled.points) {
    CellId cell = cell_index(msg, scorer.roi(), scorer.grid());
    MessageFlag flag;
    flag.score = scorer.score(msg);
    if (!scorer.cell_validated(cell)) {
      flag.unvalidated_cell = true;
      flag.abnormal = true;
      flag.threshold = std::numeric_limits<double>::quiet_NaN();
      ++unvalidated;
    } else {
      flag.threshold = scorer.threshold(cell);
      flag.abnormal = flag.score < flag.threshold;
    }
    if (flag.abnormal) ++v.k;
    v.flags.push_back(flag);
  }

  v.nfa = scorer.validated_cell_count() * binomial_tail(v.n, v.k, params.q);
  if (unvalidated * 2 > n) {
    v.decision = Decision::insufficient_data;
  } else {
    v.decision = v.nfa < params.epsilon_nfa ? Decision::abnormal
                                            : Decision::normal;
  }
  return v;
}

namespace {

bool on_segment(double px, double py, double ax, double ay, double bx,
                double by) {
  double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  if (std::abs(cross) > 1e-12) return false;
  return px >= std::min(ax, bx) - 1e-12 && px <= std::max(ax, bx) + 1e-12 &&
         py >= std::min(ay, by) - 1e-12 && py <= std::max(ay, by) + 1e-12;
}

bool point_in_ring(double lat, double lon,
                   const std::vector<std::pair<double, double>>& ring) {
  size_t n = ring.size();
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    double ai = ring[i].first, oi = ring[i].second;
    double aj = ring[j].first, oj = ring[j].second;
    if (on_segment(lat, lon, ai, oi, aj, oj)) return true;  // boundary
    if ((oi > lon) != (oj > lon)) {
      double t = (lon - oi) / (oj - oi);
      double lat_cross = ai + t * (aj - ai);
      if (lat < lat_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

std::vector<std::string> geofence_check(const AisMessage& msg,
                                        const std::vector<GeofenceZone>& zones) {
  std::vector<std::string> violated;
  for (const auto& zone : zones) {
    if (zone.ring.size() < 3) continue;
    if (point_in_ring(msg.lat, msg.lon, zone.ring)) {
      violated.push_back(zone.name);
    }
  }
  return violated;
}

std::vector<GeofenceZone> load_geofence_zones(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("type", "") != "FeatureCollection") {
    throw std::runtime_error("expected a GeoJSON FeatureCollection");
  }
  std::vector<GeofenceZone> zones;
  for (const auto& feature : j.at("features")) {
    const auto& geom = feature.at("geometry");
    if (geom.value("type", "") != "Polygon") continue;
    GeofenceZone zone;
    zone.name = feature.at("properties").value("name", "");
    const auto& outer = geom.at("coordinates").at(0);
    for (const auto& coord : outer) {
      // GeoJSON order is [lon, lat]
      zone.ring.emplace_back(coord.at(1).get<double>(),
                             coord.at(0).get<double>());
    }
    if (zone.ring.size() > 1 && zone.ring.front() == zone.ring.back()) {
      zone.ring.pop_back();
    }
    if (zone.ring.size() < 3) {
      throw std::runtime_error("geofence ring needs >= 3 vertices");
    }
    zones.push_back(std::move(zone));
  }
  return zones;
}

}  // namespace aisdet
