#include "sketchxai/model/checkpoint.hpp"

#include <fstream>

#include "sketchxai/util/binary_io.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::model {

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},     {"depth", c.depth},
          {"heads", c.heads},             {"mlp_ratio", c.mlp_ratio},
          {"max_strokes", c.max_strokes}, {"max_points", c.max_points},
          {"num_classes", c.num_classes}, {"use_shape", c.use_shape},
          {"use_location", c.use_location}, {"use_order", c.use_order}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.embed_dim = j.at("embed_dim").get<int>();
    c.depth = j.at("depth").get<int>();
    c.heads = j.at("heads").get<int>();
    c.mlp_ratio = j.value("mlp_ratio", 4);
    c.max_strokes = j.at("max_strokes").get<int>();
    c.max_points = j.at("max_points").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.use_shape = j.value("use_shape", true);
    c.use_location = j.value("use_location", true);
    c.use_order = j.value("use_order", true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".json";
  return p;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tensors = ckpt.params.tensors();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    io::BinaryWriter w(out);
    w.write_magic("SXCK");
    w.write<std::uint32_t>(kCheckpointFormatVersion);
    w.write<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
      w.write_string(t.name);
      w.write<std::uint32_t>(static_cast<std::uint32_t>(t.rows));
      w.write<std::uint32_t>(static_cast<std::uint32_t>(t.cols));
      w.write_array(t.data, static_cast<std::size_t>(t.size()));
    }
    if (!w.ok()) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }

  nlohmann::json side;
  side["format"] = "sketchxai.checkpoint";
  side["version"] = kCheckpointFormatVersion;
  side["dtype"] = "float32";
  side["layout"] = "column-major";
  side["config"] = config_to_json(ckpt.config);
  side["categories"] = ckpt.categories;
  side["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) side["tensors"].push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}});
  std::ofstream js(sidecar_path(path));
  if (!js) throw Error(ErrorCode::kIo, "cannot write " + sidecar_path(path).string());
  js << side.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw Error(ErrorCode::kIo, "cannot read checkpoint sidecar " + sidecar_path(path).string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad checkpoint sidecar: ") + e.what());
  }
  if (side.value("format", "") != "sketchxai.checkpoint" || side.value("version", 0u) != kCheckpointFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported checkpoint sidecar");
  }

  Checkpoint ckpt;
  ckpt.config = config_from_json(side.at("config"));
  ckpt.categories = side.at("categories").get<std::vector<std::string>>();
  if (static_cast<int>(ckpt.categories.size()) != ckpt.config.num_classes) {
    throw Error(ErrorCode::kConfigMismatch, "category vocabulary size differs from num_classes");
  }
  ckpt.params = Parameters<float>::zeros(ckpt.config);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  io::BinaryReader r(in);
  r.expect_magic("SXCK");
  if (r.read<std::uint32_t>() != kCheckpointFormatVersion) throw Error(ErrorCode::kFormat, "unsupported checkpoint version");
  auto tensors = ckpt.params.tensors();
  if (r.read<std::uint32_t>() != tensors.size()) throw Error(ErrorCode::kConfigMismatch, "tensor count differs from config");
  for (auto& t : tensors) {
    const auto name = r.read_string();
    const auto rows = r.read<std::uint32_t>();
    const auto cols = r.read<std::uint32_t>();
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw Error(ErrorCode::kConfigMismatch, "tensor '" + name + "' does not match expected '" + t.name + "'");
    }
    r.read_array(t.data, static_cast<std::size_t>(t.size()));
  }
  return ckpt;
}

}  // namespace sketchxai::model
