#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sketchxai::data {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

struct Stroke {
  std::vector<Point> points;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

// Raw QuickDraw sketches carry integer coordinates in [0, 255]; after
// normalize() every coordinate lies in [-1, 1] with the canvas centre at the
// origin.
struct Sketch {
  std::vector<Stroke> strokes;
  std::optional<int> label;
  int category_vocab_size = 0;

  std::size_t point_count() const;
  friend bool operator==(const Sketch&, const Sketch&) = default;
};

inline constexpr double kRawCanvasMax = 255.0;

// Maps raw [0,255] coordinates onto [-1,1]: x' = 2x/255 - 1.
Sketch normalize(const Sketch& raw);

// Inverse of normalize (no rounding back to integers).
Sketch denormalize(const Sketch& normalized);

// Throws ValidationError when the sketch breaks the type invariants: at least
// one stroke, every stroke non-empty, finite coordinates, label < vocab size.
void validate(const Sketch& sketch);

// Pads 1-point strokes to two identical points so every stroke can be
// simplified and decomposed.
Sketch fix_degenerate_strokes(Sketch sketch);

Sketch translate(const Sketch& sketch, Point offset);

}  // namespace sketchxai::data
