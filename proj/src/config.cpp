#include "aisdet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace aisdet {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

int64_t to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + value);
  }
}

}  // namespace

void AppConfig::finalize() {
  preprocess.roi = roi;
  if (!roi.valid()) throw ConfigError("invalid roi: min must be < max");
  if (!grid.valid()) {
    throw ConfigError("invalid grid: positive sizes, cog_bin_deg must divide 360");
  }
  if (!preprocess.valid()) {
    throw ConfigError(
        "invalid preprocess config: durations must be > 0 and "
        "resample_period_s <= min_track_duration_s");
  }
  if (!normalcy.valid()) {
    throw ConfigError("invalid normalcy config: alpha > 0, q in (0,1)");
  }
  if (n_partitions < 1) throw ConfigError("n_partitions must be >= 1");
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (replicas > n_partitions) {
    throw ConfigError("replicas must be <= n_partitions");
  }
}

AppConfig default_config() {
  AppConfig cfg;
  cfg.finalize();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());

  AppConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section != "roi" && section != "grid" && section != "preprocess" &&
          section != "normalcy" && section != "stream") {
        throw ConfigError("unknown config section [" + section + "] at line " +
                          std::to_string(lineno));
      }
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    std::string full = section + "." + key;

    if (full == "roi.lat_min") cfg.roi.lat_min = to_double(full, value);
    else if (full == "roi.lat_max") cfg.roi.lat_max = to_double(full, value);
    else if (full == "roi.lon_min") cfg.roi.lon_min = to_double(full, value);
    else if (full == "roi.lon_max") cfg.roi.lon_max = to_double(full, value);
    else if (full == "grid.cell_size_deg") cfg.grid.cell_size_deg = to_double(full, value);
    else if (full == "grid.sog_bin_knots") cfg.grid.sog_bin_knots = to_double(full, value);
    else if (full == "grid.sog_cap_knots") cfg.grid.sog_cap_knots = to_double(full, value);
    else if (full == "grid.cog_bin_deg") cfg.grid.cog_bin_deg = to_double(full, value);
    else if (full == "preprocess.max_sog_knots") cfg.preprocess.max_sog_knots = to_double(full, value);
    else if (full == "preprocess.gap_threshold_s") cfg.preprocess.gap_threshold_s = to_int(full, value);
    else if (full == "preprocess.resample_period_s") cfg.preprocess.resample_period_s = to_int(full, value);
    else if (full == "preprocess.min_track_duration_s") cfg.preprocess.min_track_duration_s = to_int(full, value);
    else if (full == "preprocess.redetect_period_s") cfg.preprocess.redetect_period_s = to_int(full, value);
    else if (full == "normalcy.alpha") cfg.normalcy.alpha = to_double(full, value);
    else if (full == "normalcy.q") cfg.normalcy.q = to_double(full, value);
    else if (full == "normalcy.min_cell_count") cfg.normalcy.min_cell_count = static_cast<uint64_t>(to_int(full, value));
    else if (full == "normalcy.epsilon_nfa") cfg.normalcy.epsilon_nfa = to_double(full, value);
    else if (full == "stream.n_partitions") cfg.n_partitions = static_cast<int>(to_int(full, value));
    else if (full == "stream.replicas") cfg.replicas = static_cast<int>(to_int(full, value));
    else {
      throw ConfigError("unknown config key " + full + " at line " +
                        std::to_string(lineno));
    }
  }
  cfg.finalize();
  return cfg;
}

Roi parse_roi(const std::string& text) {
  std::istringstream in(text);
  std::string part;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, part, ',')) {
      throw ConfigError("--roi expects latmin,latmax,lonmin,lonmax");
    }
    v[i] = to_double("roi", trim(part));
  }
  if (std::getline(in, part, ',')) {
    throw ConfigError("--roi expects exactly four values");
  }
  Roi roi{v[0], v[1], v[2], v[3]};
  if (!roi.valid()) throw ConfigError("invalid --roi: min must be < max");
  return roi;
}

std::string config_reference() {
  return
      "Config file keys (key = value, sections in [brackets]):\n"
      "  [roi]        lat_min (47), lat_max (49), lon_min (-7), lon_max (-4)\n"
      "  [grid]       cell_size_deg (0.1), sog_bin_knots (1), sog_cap_knots (30),\n"
      "               cog_bin_deg (10)\n"
      "  [preprocess] max_sog_knots (30), gap_threshold_s (14400),\n"
      "               resample_period_s (600), min_track_duration_s (14400),\n"
      "               redetect_period_s (3600)\n"
      "  [normalcy]   alpha (1), q (0.05), min_cell_count (50), epsilon_nfa (1)\n"
      "  [stream]     n_partitions (16), replicas (1)\n"
      "CLI flags override file values.\n";
}

}  // namespace aisdet
