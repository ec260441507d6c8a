#include "sketchxai/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

#include "sketchxai/data/quickdraw.hpp"
#include "sketchxai/data/rdp.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

namespace {

using Poly = std::vector<Point>;
constexpr double kPi = std::numbers::pi;

struct Pen {
  std::mt19937_64& rng;

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

  Point jitter(Point p, double sigma) { return {p.x + normal(sigma), p.y + normal(sigma)}; }

  // Densifies a polyline and adds a little hand tremor.
  Poly trace(const Poly& corners, int per_segment = 8) {
    Poly out;
    for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
      for (int k = 0; k < per_segment; ++k) {
        const double t = static_cast<double>(k) / per_segment;
        out.push_back(jitter(corners[i] + t * (corners[i + 1] - corners[i]), 0.003));
      }
    }
    out.push_back(jitter(corners.back(), 0.003));
    return out;
  }

  Poly maybe_reverse(Poly p, double prob = 0.5) {
    if (coin(prob)) std::reverse(p.begin(), p.end());
    return p;
  }

  Poly ellipse(Point c, double rx, double ry, double a0, double a1, int n) {
    Poly out;
    for (int k = 0; k <= n; ++k) {
      const double a = a0 + (a1 - a0) * k / n;
      out.push_back(jitter({c.x + rx * std::cos(a), c.y + ry * std::sin(a)}, 0.003));
    }
    return out;
  }

  // Closed loop in a random direction, starting at a random angle unless one
  // is given.
  Poly circle(Point c, double r, std::optional<double> start = std::nullopt) {
    const double a0 = start ? *start + normal(0.15) : uniform(0.0, 2.0 * kPi);
    const double sweep = (coin(0.5) ? 1.0 : -1.0) * uniform(2.0 * kPi, 2.15 * kPi);
    const double squash = uniform(0.85, 1.15);
    return ellipse(c, r * squash, r / squash, a0, a0 + sweep, 28);
  }

  // Rectangle drawn in one stroke from a random point on its outline (on the
  // top edge when `top_start` is set).
  Poly rectangle(Point c, double w, double h, bool top_start = false) {
    Poly corners = {{c.x - w / 2, c.y - h / 2}, {c.x + w / 2, c.y - h / 2}, {c.x + w / 2, c.y + h / 2},
                    {c.x - w / 2, c.y + h / 2}};
    const bool reversed = coin(0.5);
    if (reversed) std::reverse(corners.begin(), corners.end());
    int side = integer(0, 3);
    double t = uniform(0.0, 1.0);
    if (top_start) {
      side = reversed ? 2 : 0;
      t = uniform(0.4, 0.6);
    }
    const Point a = corners[static_cast<std::size_t>(side)];
    const Point b = corners[static_cast<std::size_t>((side + 1) % 4)];
    const Point start = a + t * (b - a);
    Poly path = {start};
    for (int k = 1; k <= 4; ++k) path.push_back(corners[static_cast<std::size_t>((side + k) % 4)]);
    path.push_back(start);
    return trace(path, 6);
  }

  Poly line(Point a, Point b) { return maybe_reverse(trace({a, b})); }

  Poly smile(Point c, double w) { return maybe_reverse(ellipse(c, w / 2, w / 3, 0.0, kPi, 16)); }
  Poly frown(Point c, double w) { return maybe_reverse(ellipse(c, w / 2, w / 3, kPi, 2.0 * kPi, 16)); }

  Poly hands(Point c, double s) {
    return maybe_reverse(trace({{c.x - 0.35 * s, c.y - 0.5 * s}, c, {c.x + 0.5 * s, c.y - 0.15 * s}}));
  }
};

struct Slot {
  Point anchor;
  double size;
};

// Moves a stroke so it starts at `start`; every class drawing into a slot
// shares that start distribution, so the slot alone says little about the class.
Poly pin(Poly poly, Point start) {
  const Point d = start - poly.front();
  for (auto& p : poly) p = p + d;
  return poly;
}

Point place(Pen& pen, Slot s, double sigma = 0.025) { return pen.jitter(s.anchor, sigma); }

// Layout A: big outline, two small upper items, one lower item.
constexpr Slot kOutline{{0.5, 0.1}, 0.8};
constexpr Slot kUpperLeft{{0.33, 0.38}, 0.14};
constexpr Slot kUpperRight{{0.63, 0.38}, 0.14};
constexpr Slot kLower{{0.38, 0.68}, 0.3};
// The smiley variant moves the upper pair up and inwards and the lower item down.
constexpr Slot kSmileyLeft{{0.36, 0.25}, 0.14};
constexpr Slot kSmileyRight{{0.62, 0.25}, 0.14};
constexpr Slot kSmileyLower{{0.38, 0.8}, 0.3};

std::vector<Poly> face_like(Pen& pen, Slot left, Slot right, Slot lower) {
  const double r = pen.uniform(0.05, 0.08);
  return {pin(pen.circle({0.5, 0.5}, kOutline.size / 2, -kPi / 2), place(pen, kOutline, 0.01)),
          pin(pen.circle({0, 0}, r), place(pen, left)), pin(pen.circle({0, 0}, r), place(pen, right)),
          pin(pen.smile({0, 0}, lower.size * pen.uniform(0.8, 1.2)), place(pen, lower))};
}

std::vector<Poly> camera(Pen& pen) {
  return {pin(pen.rectangle({0.5, 0.5}, 0.8, pen.uniform(0.55, 0.75), true), place(pen, kOutline, 0.01)),
          pin(pen.rectangle({0, 0}, 0.12, 0.1), place(pen, kUpperLeft)),
          pin(pen.rectangle({0, 0}, 0.12, 0.1), place(pen, kUpperRight)),
          pin(pen.circle({0, 0}, pen.uniform(0.12, 0.17)), place(pen, kLower))};
}

std::vector<Poly> clock(Pen& pen) {
  auto tick = [&](Slot s) { return pin(pen.line({0, -0.06}, {0, 0.06}), place(pen, s)); };
  return {pin(pen.circle({0.5, 0.5}, kOutline.size / 2, -kPi / 2), place(pen, kOutline, 0.01)), tick(kUpperLeft), tick(kUpperRight),
          pin(pen.hands({0, 0}, kLower.size * pen.uniform(0.8, 1.1)), place(pen, kLower))};
}

// Layout B: a long bar and two uprights. Table hangs the legs below the top,
// bed puts the posts above the base; both use the same stroke shapes.
// Eyeglasses draw into the table's slots with different shapes.
constexpr Slot kTableBar{{0.1, 0.3}, 0.8};
constexpr Slot kTableLeft{{0.2, 0.32}, 0.5};
constexpr Slot kTableRight{{0.75, 0.32}, 0.5};
constexpr Slot kBedBar{{0.1, 0.75}, 0.8};
constexpr Slot kBedLeft{{0.2, 0.2}, 0.5};
constexpr Slot kBedRight{{0.75, 0.2}, 0.5};

std::vector<Poly> bar_and_posts(Pen& pen, Slot bar, Slot left, Slot right) {
  const double w = pen.uniform(0.7, 0.85);
  const double len = 0.5 * pen.uniform(0.85, 1.15);
  return {pin(pen.trace({{0, 0}, {w, 0}}), place(pen, bar)), pin(pen.trace({{0, 0}, {0, len}}), place(pen, left)),
          pin(pen.trace({{0, 0}, {0, len}}), place(pen, right))};
}

std::vector<Poly> eyeglasses(Pen& pen) {
  const double r = pen.uniform(0.1, 0.14);
  return {pin(pen.frown({0, 0}, 0.3), place(pen, kTableBar)), pin(pen.circle({0, 0}, r), place(pen, kTableLeft)),
          pin(pen.circle({0, 0}, r), place(pen, kTableRight))};
}

// Layout C: a centre disc with radial items.
std::vector<Poly> radial(Pen& pen, bool bent, bool centre_first_canonical) {
  const Point c = pen.jitter({0.5, 0.5}, 0.02);
  const double r = pen.uniform(0.13, 0.18);
  std::vector<Poly> rays;
  const int k = pen.integer(5, 9);
  const double a0 = pen.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < k; ++i) {
    const double a = a0 + 2.0 * kPi * i / k + pen.normal(0.08);
    const double r0 = r + 0.05;
    const double r1 = r0 + pen.uniform(0.18, 0.26);
    const Point p0{c.x + r0 * std::cos(a), c.y + r0 * std::sin(a)};
    const Point p1{c.x + r1 * std::cos(a), c.y + r1 * std::sin(a)};
    if (bent) {
      const double rm = 0.5 * (r0 + r1);
      const Point knee{c.x + rm * std::cos(a + 0.35), c.y + rm * std::sin(a + 0.35)};
      rays.push_back(pen.maybe_reverse(pen.trace({p0, knee, p1})));
    } else {
      rays.push_back(pen.line(p0, p1));
    }
  }
  std::vector<Poly> out;
  const bool centre_first = pen.coin(0.85) ? centre_first_canonical : !centre_first_canonical;
  const Poly disc = pen.circle(c, r, -kPi / 2);
  if (centre_first) out.push_back(disc);
  out.insert(out.end(), rays.begin(), rays.end());
  if (!centre_first) out.push_back(disc);
  return out;
}

using Generator = std::function<std::vector<Poly>(Pen&)>;

const std::map<std::string, Generator>& generators() {
  static const std::map<std::string, Generator> kGenerators = {
      {"face", [](Pen& p) { return face_like(p, kUpperLeft, kUpperRight, kLower); }},
      {"smiley_face", [](Pen& p) { return face_like(p, kSmileyLeft, kSmileyRight, kSmileyLower); }},
      {"camera", camera},
      {"clock", clock},
      {"table", [](Pen& p) { return bar_and_posts(p, kTableBar, kTableLeft, kTableRight); }},
      {"bed", [](Pen& p) { return bar_and_posts(p, kBedBar, kBedLeft, kBedRight); }},
      {"eyeglasses", eyeglasses},
      {"sun", [](Pen& p) { return radial(p, false, true); }},
      {"flower", [](Pen& p) { return radial(p, false, false); }},
      {"spider", [](Pen& p) { return radial(p, true, true); }},
  };
  return kGenerators;
}

}  // namespace

const std::vector<std::string>& synthetic_categories() {
  static const std::vector<std::string> kNames = {"bed",   "camera", "clock", "eyeglasses", "face",
                                                  "flower", "smiley_face", "spider", "sun", "table"};
  return kNames;
}

Sketch synthesize_raw(const std::string& category, std::mt19937_64& rng) {
  const auto& gens = generators();
  const auto it = gens.find(category);
  if (it == gens.end()) throw Error(ErrorCode::kMissingCategory, "no synthetic generator for '" + category + "'");
  Pen pen{rng};
  auto strokes = it->second(pen);

  // Occasional adjacent swap of the drawing order (not for the radial layout,
  // whose order is what separates sun from flower).
  if (category != "sun" && category != "flower" && category != "spider" && strokes.size() > 2 && pen.coin(0.2)) {
    const auto i = static_cast<std::size_t>(pen.integer(1, static_cast<int>(strokes.size()) - 2));
    std::swap(strokes[i], strokes[i + 1]);
  }

  // Small global rotation, then the unit canvas is scaled to [0, 255].
  const double theta = pen.normal(0.05);
  const double cs = std::cos(theta), sn = std::sin(theta);
  Sketch raw;
  for (const auto& s : strokes) {
    Stroke st;
    for (const auto& p : s) {
      const Point q{p.x - 0.5, p.y - 0.5};
      const Point r{0.5 + cs * q.x - sn * q.y, 0.5 + sn * q.x + cs * q.y};
      const double x = std::clamp(std::round(r.x * kRawCanvasMax), 0.0, kRawCanvasMax);
      const double y = std::clamp(std::round(r.y * kRawCanvasMax), 0.0, kRawCanvasMax);
      st.points.push_back({x, y});
    }
    if (st.points.size() < 2) st.points.push_back(st.points.front());
    raw.strokes.push_back(rdp_simplify(st, 2.0));
  }
  return raw;
}

void write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<std::string>& categories,
                            std::size_t per_class, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    std::mt19937_64 rng(seed * 1000003ULL + c);
    const auto path = dir / (categories[c] + ".ndjson");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    for (std::size_t i = 0; i < per_class; ++i) out << to_quickdraw_line(synthesize_raw(categories[c], rng), categories[c]) << '\n';
  }
}

}  // namespace sketchxai::data
