#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "mcg/video.hpp"

namespace mcg {

/// JSON text records for trajectories and motion specs.
///
/// TrajectorySpec: {"boxes": [[cx, cy, w, h], ...]}   (normalized, one per frame)
/// MotionSpec:     {"shape": "square"|"circle", "size": int, "color": [r,g,b],
///                  "background": [r,g,b], "trajectory": <TrajectorySpec>}
///
/// Unknown keys are rejected with a ValidationError.
nlohmann::json to_json(const TrajectorySpec& t);
nlohmann::json to_json(const MotionSpec& m);
TrajectorySpec trajectory_from_json(const nlohmann::json& j);
MotionSpec motion_from_json(const nlohmann::json& j);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);

/// Throws ValidationError listing the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& allowed, const std::string& where);

}  // namespace mcg
