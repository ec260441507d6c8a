#include "sketchxai/data/sketch.hpp"

#include <cmath>
#include <string>

#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

std::size_t Sketch::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.points.size();
  return n;
}

Sketch normalize(const Sketch& raw) {
  Sketch out = raw;
  for (std::size_t i = 0; i < out.strokes.size(); ++i) {
    auto& pts = out.strokes[i].points;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      auto& p = pts[j];
      if (!(p.x >= 0.0 && p.x <= kRawCanvasMax && p.y >= 0.0 && p.y <= kRawCanvasMax)) {
        throw ValidationError("strokes[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                              "raw coordinate outside [0, 255]");
      }
      p.x = 2.0 * p.x / kRawCanvasMax - 1.0;
      p.y = 2.0 * p.y / kRawCanvasMax - 1.0;
    }
  }
  return out;
}

Sketch denormalize(const Sketch& normalized) {
  Sketch out = normalized;
  for (auto& s : out.strokes) {
    for (auto& p : s.points) {
      p.x = (p.x + 1.0) * kRawCanvasMax / 2.0;
      p.y = (p.y + 1.0) * kRawCanvasMax / 2.0;
    }
  }
  return out;
}

void validate(const Sketch& sketch) {
  if (sketch.strokes.empty()) throw ValidationError("strokes", "sketch has no strokes");
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    const auto& pts = sketch.strokes[i].points;
    if (pts.empty()) throw ValidationError("strokes[" + std::to_string(i) + "]", "stroke has no points");
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (!std::isfinite(pts[j].x) || !std::isfinite(pts[j].y)) {
        throw ValidationError("strokes[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                              "non-finite coordinate");
      }
    }
  }
  if (sketch.label) {
    if (*sketch.label < 0 || (sketch.category_vocab_size > 0 && *sketch.label >= sketch.category_vocab_size)) {
      throw ValidationError("label", "label outside category vocabulary");
    }
  }
}

Sketch fix_degenerate_strokes(Sketch sketch) {
  for (auto& s : sketch.strokes) {
    if (s.points.size() == 1) s.points.push_back(s.points.front());
  }
  return sketch;
}

Sketch translate(const Sketch& sketch, Point offset) {
  Sketch out = sketch;
  for (auto& s : out.strokes)
    for (auto& p : s.points) p = p + offset;
  return out;
}

}  // namespace sketchxai::data
