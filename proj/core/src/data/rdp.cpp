#include "sketchxai/data/rdp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

double point_segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double dx = p.x - (a.x + t * vx);
  const double dy = p.y - (a.y + t * vy);
  return std::hypot(dx, dy);
}

Stroke rdp_simplify(const Stroke& stroke, double epsilon) {
  const auto& pts = stroke.points;
  if (pts.size() < 2) throw Error(ErrorCode::kInvalidArgument, "rdp_simplify needs at least 2 points");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "rdp epsilon must be >= 0");

  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;

  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    if (last <= first + 1) continue;

    double max_dist = -1.0;
    std::size_t index = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double d = point_segment_distance(pts[i], pts[first], pts[last]);
      if (d > max_dist) {
        max_dist = d;
        index = i;
      }
    }
    if (max_dist > epsilon) {
      keep[index] = true;
      stack.emplace_back(index, last);
      stack.emplace_back(first, index);
    }
  }

  Stroke out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.points.push_back(pts[i]);
  return out;
}

Sketch rdp_simplify(const Sketch& sketch, double epsilon) {
  Sketch out = fix_degenerate_strokes(sketch);
  for (auto& s : out.strokes) s = rdp_simplify(s, epsilon);
  return out;
}

}  // namespace sketchxai::data
