#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sketchxai/data/sketch.hpp"

namespace sketchxai::data {

// Pen state of one shape point: (1,0) drawing, (0,1) end of stroke, (0,0)
// padding.
enum class PenState : std::uint8_t { kDrawing, kEnd, kPadding };

constexpr std::array<double, 2> pen_bits(PenState s) {
  switch (s) {
    case PenState::kDrawing: return {1.0, 0.0};
    case PenState::kEnd: return {0.0, 1.0};
    case PenState::kPadding: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

struct ShapePoint {
  double dx = 0.0;
  double dy = 0.0;
  PenState pen = PenState::kPadding;

  std::array<double, 4> as_vector() const {
    const auto p = pen_bits(pen);
    return {dx, dy, p[0], p[1]};
  }
  friend bool operator==(const ShapePoint&, const ShapePoint&) = default;
};

// One stroke split into drawing order, absolute start location and a
// location-free shape (offsets to the previous point, first offset zero).
struct DecomposedStroke {
  int order = 0;
  Point location;
  std::vector<ShapePoint> shape;

  std::size_t real_point_count() const;
  friend bool operator==(const DecomposedStroke&, const DecomposedStroke&) = default;
};

std::vector<DecomposedStroke> decompose(const Sketch& sketch);

// Inverse of decompose. Padding points are dropped; label metadata is not
// carried by the decomposed form and is left empty.
Sketch recompose(const std::vector<DecomposedStroke>& strokes);

// Throws ValidationError unless the pen states follow (1,0)* (0,1) (0,0)* and
// the first offset is zero.
void validate_shape(const std::vector<ShapePoint>& shape);

std::vector<Point> locations_of(const std::vector<DecomposedStroke>& strokes);
std::vector<DecomposedStroke> with_locations(std::vector<DecomposedStroke> strokes,
                                             const std::vector<Point>& locations);

struct TokenizerLimits {
  int max_strokes = 32;
  int max_points = 64;
};

// Fixed-size batching form. Tensors are row-major and zero-filled outside the
// real strokes / real points.
struct TokenizedSketch {
  int max_strokes = 0;
  int max_points = 0;
  std::vector<float> shape_tensor;     // [max_strokes][max_points][4]
  std::vector<float> location_tensor;  // [max_strokes][2]
  std::vector<int> order_ids;          // [max_strokes]
  std::vector<bool> stroke_mask;       // [max_strokes]
  std::vector<int> point_counts;       // [max_strokes]

  int stroke_count() const;
  float shape_at(int stroke, int point, int channel) const {
    return shape_tensor[(static_cast<std::size_t>(stroke) * max_points + point) * 4 + channel];
  }
};

// Keeps the earliest max_strokes strokes. Strokes longer than max_points are
// cut and their last kept point is forced to the end state.
std::vector<DecomposedStroke> truncate(const std::vector<DecomposedStroke>& strokes, TokenizerLimits limits);

TokenizedSketch tokenize(const std::vector<DecomposedStroke>& strokes, TokenizerLimits limits);

}  // namespace sketchxai::data
