#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchxai/sli/sli.hpp"

namespace sketchxai::sli {

nlohmann::ordered_json config_to_json(const SliConfig& config);
SliConfig config_from_json(const nlohmann::json& j);

// Header line: {"type":"header","format":"sketchxai.trajectory","version":1,
// "original_label", "target_label", "categories", "config", "seed", "strokes"}.
nlohmann::ordered_json header_to_json(const Trajectory& traj, const std::vector<std::string>& categories);

// {"t":int,"locations":[[x,y]...],"p_orig":float,"p_target":float,"loss":float}
// Values are rounded to `decimals` places when it is >= 0 (fixed-precision mode).
nlohmann::ordered_json frame_to_json(const Frame& frame, int decimals = -1);
Frame frame_from_json(const nlohmann::json& j);

// Newline-delimited: the header, then one line per frame. Output is a pure
// function of the trajectory, so identical runs give identical bytes.
void write_trajectory(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& categories,
                      int decimals = -1);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                     const std::vector<std::string>& categories, int decimals = -1);

struct LoadedTrajectory {
  Trajectory trajectory;
  std::vector<std::string> categories;
};

LoadedTrajectory read_trajectory(std::istream& in);
LoadedTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace sketchxai::sli
