#include "sketchxai/data/quickdraw.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sketchxai/data/rdp.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

const std::vector<std::string>& study_categories() {
  static const std::vector<std::string> kCategories = {
      "airplane",    "apple", "baseball_bat", "bed",        "bicycle",    "book",        "bread",  "broom",
      "camera",      "car",   "cell_phone",   "chair",      "clock",      "cloud",       "eye",    "eyeglasses",
      "face",        "flower", "headphones",  "hot_dog",    "laptop",     "pants",       "shorts", "smiley_face",
      "snake",       "spider", "star",        "sun",        "table",      "tree"};
  return kCategories;
}

std::optional<Sketch> parse_quickdraw_line(std::string_view line) {
  auto doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  auto it = doc.find("drawing");
  if (it == doc.end() || !it->is_array() || it->empty()) return std::nullopt;

  Sketch sketch;
  for (const auto& stroke : *it) {
    if (!stroke.is_array() || stroke.size() < 2) return std::nullopt;
    const auto& xs = stroke[0];
    const auto& ys = stroke[1];
    if (!xs.is_array() || !ys.is_array() || xs.size() != ys.size() || xs.empty()) return std::nullopt;
    Stroke s;
    s.points.reserve(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (!xs[j].is_number() || !ys[j].is_number()) return std::nullopt;
      const double x = xs[j].get<double>();
      const double y = ys[j].get<double>();
      if (x < 0.0 || x > kRawCanvasMax || y < 0.0 || y > kRawCanvasMax) return std::nullopt;
      s.points.push_back({x, y});
    }
    sketch.strokes.push_back(std::move(s));
  }
  return sketch;
}

std::string to_quickdraw_line(const Sketch& raw, std::string_view word) {
  nlohmann::json drawing = nlohmann::json::array();
  for (const auto& s : raw.strokes) {
    nlohmann::json xs = nlohmann::json::array();
    nlohmann::json ys = nlohmann::json::array();
    for (const auto& p : s.points) {
      xs.push_back(static_cast<int>(std::lround(p.x)));
      ys.push_back(static_cast<int>(std::lround(p.y)));
    }
    drawing.push_back({xs, ys});
  }
  nlohmann::json rec = {{"word", std::string(word)}, {"recognized", true}, {"drawing", drawing}};
  return rec.dump();
}

LabeledCollection load_quickdraw(const std::filesystem::path& dir, const std::vector<std::string>& categories,
                                 std::size_t per_class_limit) {
  LabeledCollection out;
  out.categories = categories;
  const int vocab = static_cast<int>(categories.size());
  for (int label = 0; label < vocab; ++label) {
    const auto& name = categories[static_cast<std::size_t>(label)];
    const auto path = dir / (name + ".ndjson");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kMissingCategory, "missing category file for '" + name + "': " + path.string());

    std::size_t taken = 0;
    std::string line;
    while ((per_class_limit == 0 || taken < per_class_limit) && std::getline(in, line)) {
      if (line.empty()) continue;
      ++out.stats.lines_read;
      auto sketch = parse_quickdraw_line(line);
      if (!sketch) {
        ++out.stats.malformed_lines;
        continue;
      }
      sketch->label = label;
      sketch->category_vocab_size = vocab;
      out.sketches.push_back(std::move(*sketch));
      ++taken;
    }
    if (taken == 0) throw Error(ErrorCode::kEmptyCategory, "category '" + name + "' has no usable sketches");
  }
  return out;
}

Sketch preprocess(const Sketch& raw, double rdp_epsilon) {
  return rdp_simplify(normalize(raw), rdp_epsilon);
}

}  // namespace sketchxai::data
