#include "sketchxai/model/config.hpp"

#include "sketchxai/util/error.hpp"

namespace sketchxai::model {

void ModelConfig::validate() const {
  if (embed_dim <= 0 || depth <= 0 || heads <= 0 || mlp_ratio <= 0 || max_strokes <= 0 || max_points <= 0 ||
      num_classes <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "model config sizes must be positive");
  }
  if (embed_dim % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "embed_dim must be even");
  if (embed_dim % heads != 0) throw Error(ErrorCode::kInvalidArgument, "embed_dim must be divisible by heads");
}

ModelConfig ModelConfig::micro(int num_classes) {
  ModelConfig c;
  c.embed_dim = 64;
  c.depth = 2;
  c.heads = 4;
  c.num_classes = num_classes;
  return c;
}

ModelConfig ModelConfig::tiny(int num_classes) {
  ModelConfig c;
  c.embed_dim = 192;
  c.depth = 12;
  c.heads = 3;
  c.num_classes = num_classes;
  return c;
}

ModelConfig ModelConfig::base(int num_classes) {
  ModelConfig c;
  c.embed_dim = 768;
  c.depth = 12;
  c.heads = 12;
  c.num_classes = num_classes;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name, int num_classes) {
  if (name == "micro") return micro(num_classes);
  if (name == "tiny") return tiny(num_classes);
  if (name == "base") return base(num_classes);
  throw Error(ErrorCode::kInvalidArgument, "unknown model preset '" + name + "'");
}

ModelConfig ModelConfig::with_ablation(const std::string& variant) const {
  ModelConfig c = *this;
  c.use_shape = c.use_location = c.use_order = true;
  if (variant == "full") return c;
  if (variant == "no_shape") {
    c.use_shape = false;
  } else if (variant == "no_location") {
    c.use_location = false;
  } else if (variant == "no_order") {
    c.use_order = false;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown ablation '" + variant + "'");
  }
  return c;
}

std::string ModelConfig::ablation_name() const {
  if (use_shape && use_location && use_order) return "full";
  if (!use_shape && use_location && use_order) return "no_shape";
  if (use_shape && !use_location && use_order) return "no_location";
  if (use_shape && use_location && !use_order) return "no_order";
  return "custom";
}

}  // namespace sketchxai::model
