#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "aisdet/normalcy.hpp"
#include "aisdet/preprocess.hpp"

namespace aisdet {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Tool configuration: `key = value` lines grouped by `[section]` headers,
/// `#` comments. Unknown sections or keys are rejected. CLI flags override
/// file values.
struct AppConfig {
  Roi roi{47.0, 49.0, -7.0, -4.0};
  GridConfig grid;
  PreprocessConfig preprocess;  // roi mirrored from `roi` after load
  NormalcyParams normalcy;
  int n_partitions = 16;
  int replicas = 1;

  void finalize();  // copies roi into preprocess, validates everything
};

AppConfig load_config(const std::filesystem::path& path);
AppConfig default_config();

/// Parses `latmin,latmax,lonmin,lonmax`.
Roi parse_roi(const std::string& text);

/// All config keys with their defaults, for --help.
std::string config_reference();

}  // namespace aisdet
