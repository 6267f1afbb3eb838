#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aisdet/domain.hpp"

namespace aisdet {

enum class IngestErrorCode {
  malformed_line,
  range_error,
  checksum_mismatch,
  multipart_unsupported,
  not_position_report,
  missing_kinematics,
};

std::string_view to_string(IngestErrorCode code);

struct IngestError {
  IngestErrorCode code;
  std::string field;  // offending field name, may be empty
};

/// Value-or-error result for the stateless parsers.
template <typename T>
class [[nodiscard]] Parsed {
 public:
  Parsed(T value) : v_(std::move(value)) {}
  Parsed(IngestError err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return std::get<T>(v_); }
  const IngestError& error() const { return std::get<IngestError>(v_); }

 private:
  std::variant<T, IngestError> v_;
};

/// Parses one structured record line: either CSV
/// `mmsi,timestamp,lat,lon,sog,cog[,source]` or a single-line JSON object
/// with the same keys. COG is normalized into [0, 360).
Parsed<AisMessage> parse_record(std::string_view line);

/// Canonical CSV rendering; parse_record(render_record(m)) == m.
std::string render_record(const AisMessage& msg);

/// De-armoring table for AIVDM six-bit characters; -1 for invalid input.
int aivdm_sixbit(char c);

/// Decodes a single-fragment !AIVDM/!AIVDO position report (ITU-R M.1371
/// types 1, 2, 3). The sentence carries no full timestamp, so the caller
/// supplies one.
Parsed<AisMessage> decode_aivdm(std::string_view sentence, int64_t timestamp);

/// Parses the `epoch_seconds<TAB>!AIVDM...` sidecar-timestamp format.
Parsed<AisMessage> parse_timestamped_aivdm(std::string_view line);

struct IngestFileStats {
  uint64_t lines = 0;
  uint64_t parsed = 0;
  uint64_t skipped_comments = 0;
  uint64_t errors = 0;
};

/// Reads a CSV/JSON-lines record file; `#`-prefixed lines are comments.
/// Malformed lines are counted, not fatal.
std::vector<AisMessage> read_record_file(const std::filesystem::path& path,
                                         IngestFileStats* stats = nullptr);

}  // namespace aisdet
