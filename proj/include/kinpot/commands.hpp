#pragma once

#include <string>

#include "kinpot/bounds.hpp"
#include "kinpot/config.hpp"
#include "kinpot/output.hpp"

namespace kinpot {

inline constexpr const char* kOutDirEnv = "KINPOT_OUT_DIR";

// --out wins, then the environment variable, then "kinpot_out".
std::string resolve_out_dir(const std::string& flag);

// Each command writes its files plus manifest.json into out_dir. On error the
// manifest records the failure and the exception propagates.
RunManifest run_command(const ScenarioConfig& cfg, const std::string& out_dir);
RunManifest local_command(const ScenarioConfig& cfg, const std::string& out_dir);
RunManifest verify_command(const ScenarioConfig& cfg, const std::string& out_dir, const BoundOptions& opt);

struct TrajectoryRequest {
    Vec x{0.25, 0.0, 0.0};
    Vec v{1.0, 0.0, 0.0};
    double t = 1.0;
    double s_end = 0.0;
    double threshold = -1.0;  // negative: use thresholds.delta_star
};
RunManifest characteristics_command(const ScenarioConfig& cfg, const std::string& out_dir, const TrajectoryRequest& q);
RunManifest jacobian_scan_command(const ScenarioConfig& cfg, const std::string& out_dir, const TrajectoryRequest& q);

void plot_command(const std::string& csv_path, const std::string& svg_path, const PlotOptions& opt);

}  // namespace kinpot
