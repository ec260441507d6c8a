#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/sli/sli.hpp"

namespace sketchxai::app {

// Sketch wire format, normalized coordinates:
//   {"strokes": [[[x, y], ...], ...], "label": optional int or category name}
nlohmann::ordered_json sketch_to_json(const data::Sketch& sketch);

// Throws ValidationError whose field is a path below `field`, for example
// "sketch.strokes[2][0]".
data::Sketch sketch_from_json(const nlohmann::json& j, const std::vector<std::string>& categories,
                              const std::string& field = "sketch");

// Accepts an index or a category name.
int resolve_category(const nlohmann::json& value, const std::vector<std::string>& categories,
                     const std::string& field);
int resolve_category(const std::string& value, const std::vector<std::string>& categories, const std::string& field);

// SLI options as sent by clients; missing keys keep their defaults.
sli::SliConfig sli_config_from_json(const nlohmann::json& j, const std::vector<std::string>& categories,
                                    const std::string& field = "config");

// With keep_label unset any label in the file is ignored.
data::Sketch load_sketch_file(const std::filesystem::path& path, const std::vector<std::string>& categories,
                              bool keep_label = true);
void save_sketch_file(const std::filesystem::path& path, const data::Sketch& sketch);

}  // namespace sketchxai::app
