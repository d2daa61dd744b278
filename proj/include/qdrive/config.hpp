#pragma once

// Run configuration: JSON document, schema validation, defaults, noise
// profiles and conversion to a RunPlan.

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdrive/noise.hpp"
#include "qdrive/pipeline.hpp"

namespace qdrive {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPartial = 3;

struct SweepGrid {
  std::vector<double> reductions{1.0, 1e4};
  std::vector<double> longevities_us{10.0, std::numeric_limits<double>::infinity()};
  int repeats = 1;
};

struct RunConfig {
  RunPlan plan;
  std::string noise_profile = "torino";
  double gate_noise_reduction = 1.0;
  double qubit_longevity_us = 0.0;  // 0 keeps the profile's relaxation times
  int workers = 1;
  std::string output_dir = "out";
  SweepGrid sweep;
};

/// Parse and validate a JSON document; missing keys take defaults. Errors
/// name the offending key and, when it can be located, its line.
RunConfig parse_config(const std::string& text);
inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved document: every key, including tier-dependent optimizer
/// settings and seeds.
nlohmann::json config_to_json(const RunConfig& config);

/// "a.b.c=value" with value parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Document with overrides applied, then parsed.
RunConfig parse_config(const nlohmann::json& doc, const std::string& source_text = {});

/// Builtin name ("torino", "ideal") or a path to a profile JSON document.
NoiseModel load_noise_profile(const std::string& name_or_path);
nlohmann::json noise_to_json(const NoiseModel& model);
NoiseModel noise_from_json(const nlohmann::json& j);

/// Profile after the configured reduction and longevity factors.
NoiseModel resolved_noise(const RunConfig& config);

/// $QDRIVE_OUTPUT_ROOT or the working directory.
std::filesystem::path output_root();

}  // namespace qdrive
