#pragma once

#include <span>

#include "sketchxai/data/sketch.hpp"

namespace sketchxai::data {

// 2 px in raw QuickDraw units expressed on the normalized canvas (2/255 * 2).
inline constexpr double kDefaultRdpEpsilon = 0.0157;

// Euclidean distance from p to the closed segment [a, b]; falls back to the
// point distance when a == b.
double point_segment_distance(Point p, Point a, Point b);

// Ramer-Douglas-Peucker simplification. Endpoints are always kept; an interior
// point is kept when its distance to the current chord exceeds epsilon. Ties
// on the farthest point resolve to the lowest index.
Stroke rdp_simplify(const Stroke& stroke, double epsilon = kDefaultRdpEpsilon);

Sketch rdp_simplify(const Sketch& sketch, double epsilon = kDefaultRdpEpsilon);

}  // namespace sketchxai::data
