#include <doctest.h>

#include <cstdio>
#include <random>
#include <string>

#include "aisdet/ingest.hpp"

using namespace aisdet;

namespace {

// Test-side AIVDM encoder, written independently of the decoder: packs the
// type 1 position-report fields MSB-first into 168 bits, armors them and
// appends the NMEA checksum. Used as the construction oracle below.
struct RefFields {
  uint32_t mmsi;
  double sog, lon, lat, cog;
};

void put_bits(std::vector<int>& bits, uint64_t value, int width) {
  for (int i = width - 1; i >= 0; --i) bits.push_back((value >> i) & 1);
}

std::string encode_aivdm(const RefFields& f) {
  std::vector<int> bits;
  put_bits(bits, 1, 6);        // message type 1
  put_bits(bits, 0, 2);        // repeat
  put_bits(bits, f.mmsi, 30);
  put_bits(bits, 0, 4);        // nav status
  put_bits(bits, 0, 8);        // rate of turn
  put_bits(bits, static_cast<uint64_t>(std::llround(f.sog * 10)), 10);
  put_bits(bits, 0, 1);        // position accuracy
  auto signed_field = [&](double v, double scale, int width) {
    int64_t raw = std::llround(v * scale);
    uint64_t mask = (1ull << width) - 1;
    put_bits(bits, static_cast<uint64_t>(raw) & mask, width);
  };
  signed_field(f.lon, 600000.0, 28);
  signed_field(f.lat, 600000.0, 27);
  put_bits(bits, static_cast<uint64_t>(std::llround(f.cog * 10)), 12);
  put_bits(bits, 511, 9);      // true heading unavailable
  put_bits(bits, 60, 6);       // timestamp unavailable
  put_bits(bits, 0, 2);        // maneuver
  put_bits(bits, 0, 3);        // spare
  put_bits(bits, 0, 1);        // RAIM
  put_bits(bits, 0, 19);       // radio status
  REQUIRE(bits.size() == 168);

  std::string payload;
  for (size_t i = 0; i < bits.size(); i += 6) {
    int v = 0;
    for (int b = 0; b < 6; ++b) v = (v << 1) | bits[i + b];
    payload += static_cast<char>(v < 40 ? v + 48 : v + 56);
  }
  std::string body = "AIVDM,1,1,,A," + payload + ",0";
  uint8_t sum = 0;
  for (char c : body) sum ^= static_cast<uint8_t>(c);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "*%02X", sum);
  return "!" + body + buf;
}

}  // namespace

TEST_CASE("parse_record maps CSV fields") {
  auto r = parse_record("227006760,1490000000,48.10,-5.50,12.3,215.0");
  REQUIRE(r.ok());
  CHECK(r.value().mmsi == 227006760);
  CHECK(r.value().timestamp == 1490000000);
  CHECK(r.value().lat == 48.10);
  CHECK(r.value().lon == -5.50);
  CHECK(r.value().sog == 12.3);
  CHECK(r.value().cog == 215.0);
  CHECK(r.value().source == Source::unknown);
}

TEST_CASE("parse_record rejects bad lines with the offending field") {
  auto r = parse_record("1,0,95.0,0,0,0");
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::range_error);
  CHECK(r.error().field == "lat");

  r = parse_record("1,0,48.0,-5.0,10");
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::malformed_line);

  r = parse_record("1,0,48.0,-5.0,abc,0");
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::malformed_line);
  CHECK(r.error().field == "sog");

  r = parse_record("1,0,48.0,-5.0,-3,0");
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::range_error);
  CHECK(r.error().field == "sog");

  CHECK(!parse_record("").ok());
}

TEST_CASE("parse_record accepts JSON lines") {
  auto r = parse_record(
      R"({"mmsi":227006760,"timestamp":1490000000,"lat":48.1,"lon":-5.5,"sog":12.3,"cog":215.0,"source":"satellite"})");
  REQUIRE(r.ok());
  CHECK(r.value().mmsi == 227006760);
  CHECK(r.value().source == Source::satellite);

  CHECK(!parse_record(R"({"mmsi":1})").ok());
  CHECK(!parse_record("{not json").ok());
}

TEST_CASE("record round-trip property") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ulat(-90, 90);
  std::uniform_real_distribution<double> ulon(-180, 180);
  std::uniform_real_distribution<double> usog(0, 40);
  std::uniform_real_distribution<double> ucog(0, 360);
  for (int i = 0; i < 500; ++i) {
    AisMessage m;
    m.mmsi = rng() % 999999999 + 1;
    m.timestamp = static_cast<int64_t>(rng() % 2000000000);
    m.lat = ulat(rng);
    m.lon = ulon(rng);
    m.sog = usog(rng);
    m.cog = normalize_cog(ucog(rng));
    m.source = static_cast<Source>(rng() % 3);
    auto r = parse_record(render_record(m));
    REQUIRE(r.ok());
    CHECK(r.value() == m);
  }
}

TEST_CASE("six-bit armoring endpoints") {
  CHECK(aivdm_sixbit('0') == 0);
  CHECK(aivdm_sixbit('W') == 39);
  CHECK(aivdm_sixbit('`') == 40);
  CHECK(aivdm_sixbit('w') == 63);
  CHECK(aivdm_sixbit('X') == -1);
  CHECK(aivdm_sixbit(' ') == -1);
  CHECK(aivdm_sixbit('x') == -1);
}

TEST_CASE("decode_aivdm inverts the reference encoder") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ulat(-89, 89);
  std::uniform_real_distribution<double> ulon(-179, 179);
  std::uniform_int_distribution<int> usog(0, 1022);
  std::uniform_int_distribution<int> ucog(0, 3599);
  for (int i = 0; i < 40; ++i) {
    RefFields f;
    f.mmsi = static_cast<uint32_t>(rng() % 999999999 + 1);
    f.sog = usog(rng) / 10.0;
    f.cog = ucog(rng) / 10.0;
    // quantize coordinates to the wire resolution first
    f.lat = std::llround(ulat(rng) * 600000.0) / 600000.0;
    f.lon = std::llround(ulon(rng) * 600000.0) / 600000.0;

    auto r = decode_aivdm(encode_aivdm(f), 1490000000 + i);
    REQUIRE(r.ok());
    CHECK(r.value().mmsi == f.mmsi);
    CHECK(r.value().timestamp == 1490000000 + i);
    CHECK(r.value().sog == doctest::Approx(f.sog).epsilon(1e-12));
    CHECK(r.value().cog == doctest::Approx(f.cog).epsilon(1e-12));
    CHECK(r.value().lat == doctest::Approx(f.lat).epsilon(1e-12));
    CHECK(r.value().lon == doctest::Approx(f.lon).epsilon(1e-12));
  }
}

TEST_CASE("decode_aivdm rejects bad checksums and unsupported sentences") {
  RefFields f{227006760, 12.3, -5.5, 48.1, 215.0};
  std::string good = encode_aivdm(f);
  REQUIRE(decode_aivdm(good, 0).ok());

  // flip a checksum digit
  std::string bad = good;
  bad.back() = bad.back() == '0' ? '1' : '0';
  auto r = decode_aivdm(bad, 0);
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::checksum_mismatch);

  // multipart sentence
  std::string multi = good;
  multi.replace(7, 3, "2,1");
  uint8_t sum = 0;
  for (size_t i = 1; i < multi.size() - 3; ++i) sum ^= multi[i];
  char cs[8];
  std::snprintf(cs, sizeof(cs), "%02X", sum);
  multi[multi.size() - 2] = cs[0];
  multi[multi.size() - 1] = cs[1];
  r = decode_aivdm(multi, 0);
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::multipart_unsupported);
}

TEST_CASE("decode_aivdm flags unavailable kinematics") {
  RefFields f{227006760, 102.3, -5.5, 48.1, 215.0};  // 1023 = unavailable
  auto r = decode_aivdm(encode_aivdm(f), 0);
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::missing_kinematics);

  f = RefFields{227006760, 12.3, -5.5, 48.1, 360.0};  // 3600 = unavailable
  r = decode_aivdm(encode_aivdm(f), 0);
  REQUIRE(!r.ok());
  CHECK(r.error().code == IngestErrorCode::missing_kinematics);
}

TEST_CASE("decode_aivdm survives arbitrary input") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 10000; ++i) {
    size_t len = rng() % 64;
    std::string junk;
    for (size_t k = 0; k < len; ++k) {
      junk += static_cast<char>(rng() % 256);
    }
    auto r = decode_aivdm(junk, 0);
    if (r.ok()) {
      CHECK(r.value().lat >= -90.0);
      CHECK(r.value().lat <= 90.0);
      CHECK(r.value().lon >= -180.0);
      CHECK(r.value().lon <= 180.0);
    }
  }
  // mutated valid sentences exercise the payload paths
  RefFields f{123456789, 10.0, 3.3, 51.2, 123.4};
  std::string base = encode_aivdm(f);
  for (int i = 0; i < 10000; ++i) {
    std::string s = base;
    s[rng() % s.size()] = static_cast<char>(rng() % 256);
    (void)decode_aivdm(s, 0);
  }
}

TEST_CASE("timestamped AIVDM sidecar format") {
  RefFields f{227006760, 12.3, -5.5, 48.1, 215.0};
  std::string line = "1490000123\t" + encode_aivdm(f);
  auto r = parse_timestamped_aivdm(line);
  REQUIRE(r.ok());
  CHECK(r.value().timestamp == 1490000123);
  CHECK(!parse_timestamped_aivdm("no tab here").ok());
  CHECK(!parse_timestamped_aivdm("abc\t!AIVDM").ok());
}
