#include "sketchxai/app/wire.hpp"

#include <cmath>
#include <fstream>

#include "sketchxai/util/error.hpp"

namespace sketchxai::app {

using nlohmann::json;

nlohmann::ordered_json sketch_to_json(const data::Sketch& sketch) {
  using nlohmann::ordered_json;
  ordered_json strokes = ordered_json::array();
  for (const auto& s : sketch.strokes) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : s.points) pts.push_back({p.x, p.y});
    strokes.push_back(std::move(pts));
  }
  ordered_json j;
  j["strokes"] = std::move(strokes);
  if (sketch.label) j["label"] = *sketch.label;
  return j;
}

int resolve_category(const std::string& value, const std::vector<std::string>& categories, const std::string& field) {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == value) return static_cast<int>(i);
  }
  if (!value.empty() && value.find_first_not_of("0123456789") == std::string::npos) {
    const int idx = std::stoi(value);
    if (idx < static_cast<int>(categories.size())) return idx;
  }
  throw Error(ErrorCode::kNotFound, field + ": unknown category '" + value + "'");
}

int resolve_category(const json& value, const std::vector<std::string>& categories, const std::string& field) {
  if (value.is_string()) return resolve_category(value.get<std::string>(), categories, field);
  if (value.is_number_integer()) {
    const auto idx = value.get<long long>();
    if (idx < 0 || idx >= static_cast<long long>(categories.size())) {
      throw Error(ErrorCode::kNotFound, field + ": category index " + std::to_string(idx) + " out of range");
    }
    return static_cast<int>(idx);
  }
  throw ValidationError(field, "expected a category name or index");
}

data::Sketch sketch_from_json(const json& j, const std::vector<std::string>& categories, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  const auto it = j.find("strokes");
  if (it == j.end()) throw ValidationError(field + ".strokes", "missing");
  if (!it->is_array()) throw ValidationError(field + ".strokes", "expected an array");
  data::Sketch sketch;
  sketch.category_vocab_size = static_cast<int>(categories.size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& stroke = (*it)[i];
    const std::string sf = field + ".strokes[" + std::to_string(i) + "]";
    if (!stroke.is_array() || stroke.empty()) throw ValidationError(sf, "expected a non-empty array of points");
    data::Stroke s;
    for (std::size_t k = 0; k < stroke.size(); ++k) {
      const auto& p = stroke[k];
      const std::string pf = sf + "[" + std::to_string(k) + "]";
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ValidationError(pf, "expected [x, y]");
      }
      const data::Point pt{p[0].get<double>(), p[1].get<double>()};
      if (!std::isfinite(pt.x) || !std::isfinite(pt.y)) throw ValidationError(pf, "non-finite coordinate");
      s.points.push_back(pt);
    }
    sketch.strokes.push_back(std::move(s));
  }
  if (sketch.strokes.empty()) throw ValidationError(field + ".strokes", "sketch has no strokes");
  if (const auto l = j.find("label"); l != j.end() && !l->is_null()) {
    try {
      sketch.label = resolve_category(*l, categories, field + ".label");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotFound) throw ValidationError(field + ".label", "unknown category");
      throw;
    }
  }
  return data::fix_degenerate_strokes(std::move(sketch));
}

namespace {

template <typename T>
T field_value(const json& j, const char* key, T fallback, const std::string& field) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(field + "." + key, "wrong type");
  }
}

}  // namespace

sli::SliConfig sli_config_from_json(const json& j, const std::vector<std::string>& categories,
                                    const std::string& field) {
  sli::SliConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  if (j.contains("task")) {
    try {
      c.task = sli::task_from_string(field_value<std::string>(j, "task", "", field));
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(field + ".task", e.what());
    }
  }
  if (j.contains("init")) {
    try {
      c.init = sli::init_from_string(field_value<std::string>(j, "init", "", field));
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw ValidationError(field + ".init", e.what());
    }
  }
  if (const auto t = j.find("target"); t != j.end() && !t->is_null()) {
    try {
      c.target = resolve_category(*t, categories, field + ".target");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotFound) throw ValidationError(field + ".target", "unknown category");
      throw;
    }
  }
  c.steps = field_value<int>(j, "steps", c.steps, field);
  c.eta_max = field_value<double>(j, "eta_max", c.eta_max, field);
  c.eta_min = field_value<double>(j, "eta_min", c.eta_min, field);
  c.cap = field_value<double>(j, "cap", c.cap, field);
  c.sigma = field_value<double>(j, "sigma", c.sigma, field);
  c.lambda = field_value<double>(j, "lambda", c.lambda, field);
  c.seed = field_value<std::uint64_t>(j, "seed", c.seed, field);
  if (const auto s = j.find("stop_confidence"); s != j.end() && !s->is_null()) {
    c.stop_confidence = field_value<double>(j, "stop_confidence", 0.0, field);
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(field + "." + e.field(), e.detail());
  }
  return c;
}

data::Sketch load_sketch_file(const std::filesystem::path& path, const std::vector<std::string>& categories,
                              bool keep_label) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  if (!keep_label && j.is_object()) j.erase("label");
  return sketch_from_json(j, categories);
}

void save_sketch_file(const std::filesystem::path& path, const data::Sketch& sketch) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << sketch_to_json(sketch).dump() << '\n';
}

}  // namespace sketchxai::app
