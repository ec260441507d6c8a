#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/sli/sli.hpp"

namespace sketchxai::render {

struct SvgOptions {
  int pixels = 256;
  double stroke_width = 0.015;  // in canvas units
  std::string caption;          // drawn in the top-left corner when non-empty
};

// One polyline per stroke over the fixed [-1,1]^2 viewport (y pointing down).
// Geometry outside the viewport is clipped on screen but kept in the document.
std::string render_svg(const data::Sketch& sketch, const SvgOptions& options = {});

enum class FrameFormat { kSvgFrames, kGif };

FrameFormat frame_format_from_string(const std::string& s);

// Caption used for trajectory frames, e.g. "t=12 face 0.41 -> camera 0.37".
std::string frame_caption(const sli::Trajectory& traj, std::size_t frame, const std::vector<std::string>& categories);

// Frame indices kept for a stride: 0, stride, 2*stride, ... and always the last.
std::vector<std::size_t> frame_selection(std::size_t frame_count, int stride);

// Writes frame_NNNN.svg files into `dir` and returns their paths. GIF output
// is not built and throws kUnsupported.
std::vector<std::filesystem::path> render_trajectory(const sli::Trajectory& traj,
                                                     const std::vector<std::string>& categories,
                                                     const std::filesystem::path& dir, FrameFormat format,
                                                     int stride = 1, const SvgOptions& options = {});

}  // namespace sketchxai::render
