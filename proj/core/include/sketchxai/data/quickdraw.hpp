#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchxai/data/sketch.hpp"

namespace sketchxai::data {

// The 30 categories used for the explanation studies, in their canonical order.
const std::vector<std::string>& study_categories();

struct LoadStats {
  std::size_t lines_read = 0;
  std::size_t malformed_lines = 0;
};

struct LabeledCollection {
  std::vector<std::string> categories;
  std::vector<Sketch> sketches;
  LoadStats stats;
};

// Parses one simplified-QuickDraw NDJSON record. Only `drawing` is required;
// returns nullopt on malformed input.
std::optional<Sketch> parse_quickdraw_line(std::string_view line);

std::string to_quickdraw_line(const Sketch& raw, std::string_view word);

// Reads `<dir>/<category>.ndjson` for each category; labels follow the order of
// `categories`. Sketches are returned with raw integer coordinates. A
// per_class_limit of 0 means no limit.
LabeledCollection load_quickdraw(const std::filesystem::path& dir, const std::vector<std::string>& categories,
                                 std::size_t per_class_limit);

// normalize -> pad 1-point strokes -> RDP.
Sketch preprocess(const Sketch& raw, double rdp_epsilon);

}  // namespace sketchxai::data
