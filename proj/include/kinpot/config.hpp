#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinpot/mild_solver.hpp"

namespace kinpot {

inline constexpr const char* kToolVersion = "0.1.0";

// Parses and validates a JSON scenario; throws ConfigError listing every problem.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

// Full configuration with every default echoed, keys sorted.
std::string canonical_config(const ScenarioConfig& cfg, int indent = 2);
// FNV-1a 64 of the compact canonical form, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

struct RunManifest {
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    std::string start_time;
    std::string end_time;
    std::vector<std::string> files;
    std::string status = "ok";
    std::string error;
};
std::string manifest_json(const RunManifest& m);
std::string utc_timestamp();

}  // namespace kinpot
