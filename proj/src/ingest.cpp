#include "aisdet/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace aisdet {

namespace {

constexpr std::string_view kFieldNames[] = {"mmsi", "timestamp", "lat",
                                            "lon",  "sog",       "cog"};

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<int64_t> parse_int(std::string_view s) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Source> parse_source(std::string_view s) {
  if (s == "terrestrial") return Source::terrestrial;
  if (s == "satellite") return Source::satellite;
  if (s == "unknown") return Source::unknown;
  return std::nullopt;
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::terrestrial: return "terrestrial";
    case Source::satellite: return "satellite";
    default: return "unknown";
  }
}

/// Range checks shared by the CSV, JSON and AIVDM paths.
std::optional<IngestError> check_ranges(const AisMessage& m) {
  if (m.mmsi == 0 || m.mmsi > 999999999ull) {
    return IngestError{IngestErrorCode::range_error, "mmsi"};
  }
  if (m.lat < -90.0 || m.lat > 90.0) {
    return IngestError{IngestErrorCode::range_error, "lat"};
  }
  if (m.lon < -180.0 || m.lon > 180.0) {
    return IngestError{IngestErrorCode::range_error, "lon"};
  }
  if (m.sog < 0.0) {
    return IngestError{IngestErrorCode::range_error, "sog"};
  }
  return std::nullopt;
}

Parsed<AisMessage> parse_csv_record(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 6 && fields.size() != 7) {
    return IngestError{IngestErrorCode::malformed_line, "field-count"};
  }

  AisMessage m;
  auto mmsi = parse_int(fields[0]);
  if (!mmsi || *mmsi < 0) {
    return IngestError{IngestErrorCode::malformed_line, "mmsi"};
  }
  m.mmsi = static_cast<uint64_t>(*mmsi);
  auto ts = parse_int(fields[1]);
  if (!ts) return IngestError{IngestErrorCode::malformed_line, "timestamp"};
  m.timestamp = *ts;

  double* numeric[] = {&m.lat, &m.lon, &m.sog, &m.cog};
  for (int i = 0; i < 4; ++i) {
    auto v = parse_double(fields[2 + i]);
    if (!v) {
      return IngestError{IngestErrorCode::malformed_line,
                         std::string(kFieldNames[2 + i])};
    }
    *numeric[i] = *v;
  }
  if (fields.size() == 7) {
    auto src = parse_source(fields[6]);
    if (!src) return IngestError{IngestErrorCode::malformed_line, "source"};
    m.source = *src;
  }
  m.cog = normalize_cog(m.cog);
  if (auto err = check_ranges(m)) return *err;
  return m;
}

Parsed<AisMessage> parse_json_record(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return IngestError{IngestErrorCode::malformed_line, "json"};
  }
  AisMessage m;
  for (auto name : {"mmsi", "timestamp", "lat", "lon", "sog", "cog"}) {
    if (!j.contains(name) || !j[name].is_number()) {
      return IngestError{IngestErrorCode::malformed_line, name};
    }
  }
  m.mmsi = j["mmsi"].get<uint64_t>();
  m.timestamp = j["timestamp"].get<int64_t>();
  m.lat = j["lat"].get<double>();
  m.lon = j["lon"].get<double>();
  m.sog = j["sog"].get<double>();
  m.cog = normalize_cog(j["cog"].get<double>());
  if (j.contains("source")) {
    if (!j["source"].is_string()) {
      return IngestError{IngestErrorCode::malformed_line, "source"};
    }
    auto src = parse_source(j["source"].get<std::string>());
    if (!src) return IngestError{IngestErrorCode::malformed_line, "source"};
    m.source = *src;
  }
  for (double v : {m.lat, m.lon, m.sog, m.cog}) {
    if (!std::isfinite(v)) {
      return IngestError{IngestErrorCode::malformed_line, "non-finite"};
    }
  }
  if (auto err = check_ranges(m)) return *err;
  return m;
}

}  // namespace

std::string_view to_string(IngestErrorCode code) {
  switch (code) {
    case IngestErrorCode::malformed_line: return "malformed-line";
    case IngestErrorCode::range_error: return "range-error";
    case IngestErrorCode::checksum_mismatch: return "checksum-mismatch";
    case IngestErrorCode::multipart_unsupported: return "multipart-unsupported";
    case IngestErrorCode::not_position_report: return "not-a-position-report";
    case IngestErrorCode::missing_kinematics: return "missing-kinematics";
  }
  return "unknown";
}

Parsed<AisMessage> parse_record(std::string_view line) {
  if (line.empty()) {
    return IngestError{IngestErrorCode::malformed_line, "empty"};
  }
  if (line.front() == '{') return parse_json_record(line);
  return parse_csv_record(line);
}

std::string render_record(const AisMessage& msg) {
  char buf[256];
  int n = std::snprintf(buf, sizeof(buf), "%llu,%lld,%.17g,%.17g,%.17g,%.17g,%s",
                        static_cast<unsigned long long>(msg.mmsi),
                        static_cast<long long>(msg.timestamp), msg.lat, msg.lon,
                        msg.sog, msg.cog, source_name(msg.source).data());
  return std::string(buf, static_cast<size_t>(n));
}

int aivdm_sixbit(char c) {
  int v = static_cast<unsigned char>(c);
  if (v < 48 || v > 119) return -1;
  if (v > 87) {
    if (v < 96) return -1;
    v -= 8;
  }
  return (v - 48) & 0x3F;
}

namespace {

/// Extracts `width` bits starting at `start` from a de-armored payload.
std::optional<uint32_t> payload_bits(const std::vector<uint8_t>& sixbits,
                                     int start, int width) {
  if (start + width > static_cast<int>(sixbits.size()) * 6) return std::nullopt;
  uint32_t v = 0;
  for (int i = start; i < start + width; ++i) {
    int chunk = i / 6;
    int bit = 5 - i % 6;  // MSB first within each six-bit chunk
    v = (v << 1) | ((sixbits[chunk] >> bit) & 1);
  }
  return v;
}

int32_t sign_extend(uint32_t v, int width) {
  uint32_t sign = 1u << (width - 1);
  return (v & sign) ? static_cast<int32_t>(v | ~((sign << 1) - 1))
                    : static_cast<int32_t>(v);
}

}  // namespace

Parsed<AisMessage> decode_aivdm(std::string_view sentence, int64_t timestamp) {
  if (sentence.size() < 2 || sentence[0] != '!') {
    return IngestError{IngestErrorCode::malformed_line, "start"};
  }
  size_t star = sentence.rfind('*');
  if (star == std::string_view::npos || star + 3 > sentence.size()) {
    return IngestError{IngestErrorCode::malformed_line, "checksum"};
  }
  uint8_t sum = 0;
  for (size_t i = 1; i < star; ++i) {
    sum ^= static_cast<uint8_t>(sentence[i]);
  }
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  int hi = hex(sentence[star + 1]);
  int lo = hex(sentence[star + 2]);
  if (hi < 0 || lo < 0) {
    return IngestError{IngestErrorCode::malformed_line, "checksum"};
  }
  if (sum != static_cast<uint8_t>(hi * 16 + lo)) {
    return IngestError{IngestErrorCode::checksum_mismatch, "checksum"};
  }

  // split comma-separated header fields up to the '*'
  std::string_view body = sentence.substr(0, star);
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t comma = body.find(',', start);
    fields.push_back(body.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 7) {
    return IngestError{IngestErrorCode::malformed_line, "field-count"};
  }
  if (fields[0] != "!AIVDM" && fields[0] != "!AIVDO") {
    return IngestError{IngestErrorCode::malformed_line, "talker"};
  }
  if (fields[1] != "1" || fields[2] != "1") {
    return IngestError{IngestErrorCode::multipart_unsupported, "fragments"};
  }

  std::vector<uint8_t> sixbits;
  sixbits.reserve(fields[5].size());
  for (char c : fields[5]) {
    int v = aivdm_sixbit(c);
    if (v < 0) {
      return IngestError{IngestErrorCode::malformed_line, "payload"};
    }
    sixbits.push_back(static_cast<uint8_t>(v));
  }

  auto type = payload_bits(sixbits, 0, 6);
  if (!type) return IngestError{IngestErrorCode::malformed_line, "payload"};
  if (*type < 1 || *type > 3) {
    return IngestError{IngestErrorCode::not_position_report, "type"};
  }
  auto mmsi = payload_bits(sixbits, 8, 30);
  auto sog_raw = payload_bits(sixbits, 50, 10);
  auto lon_raw = payload_bits(sixbits, 61, 28);
  auto lat_raw = payload_bits(sixbits, 89, 27);
  auto cog_raw = payload_bits(sixbits, 116, 12);
  if (!mmsi || !sog_raw || !lon_raw || !lat_raw || !cog_raw) {
    return IngestError{IngestErrorCode::malformed_line, "payload"};
  }
  if (*sog_raw == 1023) {
    return IngestError{IngestErrorCode::missing_kinematics, "sog"};
  }
  if (*cog_raw == 3600) {
    return IngestError{IngestErrorCode::missing_kinematics, "cog"};
  }

  AisMessage m;
  m.mmsi = *mmsi;
  m.timestamp = timestamp;
  m.sog = *sog_raw / 10.0;
  m.lon = sign_extend(*lon_raw, 28) / 600000.0;
  m.lat = sign_extend(*lat_raw, 27) / 600000.0;
  m.cog = normalize_cog(*cog_raw / 10.0);
  if (auto err = check_ranges(m)) return *err;
  return m;
}

Parsed<AisMessage> parse_timestamped_aivdm(std::string_view line) {
  size_t tab = line.find('\t');
  if (tab == std::string_view::npos) {
    return IngestError{IngestErrorCode::malformed_line, "timestamp-prefix"};
  }
  auto ts = parse_int(line.substr(0, tab));
  if (!ts) return IngestError{IngestErrorCode::malformed_line, "timestamp"};
  return decode_aivdm(line.substr(tab + 1), *ts);
}

std::vector<AisMessage> read_record_file(const std::filesystem::path& path,
                                         IngestFileStats* stats) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<AisMessage> out;
  IngestFileStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++local.lines;
    if (line.front() == '#') {
      ++local.skipped_comments;
      continue;
    }
    auto parsed = parse_record(line);
    if (parsed.ok()) {
      out.push_back(parsed.value());
      ++local.parsed;
    } else {
      ++local.errors;
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace aisdet
