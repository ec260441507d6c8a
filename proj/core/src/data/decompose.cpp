#include "sketchxai/data/decompose.hpp"

#include <algorithm>
#include <string>

#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

std::size_t DecomposedStroke::real_point_count() const {
  return static_cast<std::size_t>(
      std::count_if(shape.begin(), shape.end(), [](const ShapePoint& p) { return p.pen != PenState::kPadding; }));
}

std::vector<DecomposedStroke> decompose(const Sketch& sketch) {
  std::vector<DecomposedStroke> out;
  out.reserve(sketch.strokes.size());
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    const auto& pts = sketch.strokes[i].points;
    if (pts.empty()) throw ValidationError("strokes[" + std::to_string(i) + "]", "stroke has no points");
    DecomposedStroke ds;
    ds.order = static_cast<int>(i);
    ds.location = pts.front();
    ds.shape.reserve(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) {
      ShapePoint sp;
      if (j > 0) {
        sp.dx = pts[j].x - pts[j - 1].x;
        sp.dy = pts[j].y - pts[j - 1].y;
      }
      sp.pen = (j + 1 == pts.size()) ? PenState::kEnd : PenState::kDrawing;
      ds.shape.push_back(sp);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

Sketch recompose(const std::vector<DecomposedStroke>& strokes) {
  Sketch out;
  out.strokes.reserve(strokes.size());
  for (const auto& ds : strokes) {
    Stroke s;
    Point cur = ds.location;
    for (std::size_t j = 0; j < ds.shape.size(); ++j) {
      const auto& sp = ds.shape[j];
      if (sp.pen == PenState::kPadding) break;
      if (j > 0) cur = cur + Point{sp.dx, sp.dy};
      s.points.push_back(cur);
    }
    out.strokes.push_back(std::move(s));
  }
  return out;
}

void validate_shape(const std::vector<ShapePoint>& shape) {
  // (1,0)* (0,1) (0,0)*
  std::size_t j = 0;
  while (j < shape.size() && shape[j].pen == PenState::kDrawing) ++j;
  if (j == shape.size() || shape[j].pen != PenState::kEnd) {
    throw ValidationError("shape[" + std::to_string(j) + "]", "expected end-of-stroke pen state");
  }
  ++j;
  for (; j < shape.size(); ++j) {
    const auto& sp = shape[j];
    if (sp.pen != PenState::kPadding || sp.dx != 0.0 || sp.dy != 0.0) {
      throw ValidationError("shape[" + std::to_string(j) + "]", "padding must be an all-zero suffix");
    }
  }
  if (shape.front().dx != 0.0 || shape.front().dy != 0.0) {
    throw ValidationError("shape[0]", "first offset must be (0, 0)");
  }
}

std::vector<Point> locations_of(const std::vector<DecomposedStroke>& strokes) {
  std::vector<Point> out;
  out.reserve(strokes.size());
  for (const auto& s : strokes) out.push_back(s.location);
  return out;
}

std::vector<DecomposedStroke> with_locations(std::vector<DecomposedStroke> strokes,
                                             const std::vector<Point>& locations) {
  if (locations.size() != strokes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "location count does not match stroke count");
  }
  for (std::size_t i = 0; i < strokes.size(); ++i) strokes[i].location = locations[i];
  return strokes;
}

int TokenizedSketch::stroke_count() const {
  return static_cast<int>(std::count(stroke_mask.begin(), stroke_mask.end(), true));
}

std::vector<DecomposedStroke> truncate(const std::vector<DecomposedStroke>& strokes, TokenizerLimits limits) {
  const auto n = std::min<std::size_t>(strokes.size(), static_cast<std::size_t>(limits.max_strokes));
  std::vector<DecomposedStroke> out(strokes.begin(), strokes.begin() + static_cast<std::ptrdiff_t>(n));
  for (auto& ds : out) {
    auto real = ds.real_point_count();
    ds.shape.resize(real);
    if (real > static_cast<std::size_t>(limits.max_points)) {
      ds.shape.resize(static_cast<std::size_t>(limits.max_points));
      ds.shape.back().pen = PenState::kEnd;
    }
  }
  return out;
}

TokenizedSketch tokenize(const std::vector<DecomposedStroke>& strokes, TokenizerLimits limits) {
  const auto kept = truncate(strokes, limits);
  TokenizedSketch t;
  t.max_strokes = limits.max_strokes;
  t.max_points = limits.max_points;
  const auto ms = static_cast<std::size_t>(limits.max_strokes);
  const auto mp = static_cast<std::size_t>(limits.max_points);
  t.shape_tensor.assign(ms * mp * 4, 0.0f);
  t.location_tensor.assign(ms * 2, 0.0f);
  t.order_ids.assign(ms, 0);
  t.stroke_mask.assign(ms, false);
  t.point_counts.assign(ms, 0);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& ds = kept[i];
    t.stroke_mask[i] = true;
    t.order_ids[i] = ds.order;
    t.location_tensor[i * 2] = static_cast<float>(ds.location.x);
    t.location_tensor[i * 2 + 1] = static_cast<float>(ds.location.y);
    t.point_counts[i] = static_cast<int>(ds.shape.size());
    for (std::size_t j = 0; j < ds.shape.size(); ++j) {
      const auto v = ds.shape[j].as_vector();
      for (std::size_t c = 0; c < 4; ++c) t.shape_tensor[(i * mp + j) * 4 + c] = static_cast<float>(v[c]);
    }
  }
  return t;
}

}  // namespace sketchxai::data
