#pragma once

#include <string>

#include "sketchxai/data/decompose.hpp"

namespace sketchxai::model {

struct ModelConfig {
  int embed_dim = 64;
  int depth = 2;
  int heads = 4;
  int mlp_ratio = 4;
  int max_strokes = 32;
  int max_points = 64;
  int num_classes = 10;
  bool use_shape = true;
  bool use_location = true;
  bool use_order = true;

  int lstm_hidden() const { return embed_dim / 2; }
  int head_dim() const { return embed_dim / heads; }
  data::TokenizerLimits limits() const { return {max_strokes, max_points}; }

  // Throws kInvalidArgument when embed_dim is odd or not divisible by heads.
  void validate() const;

  // Desk-scale default: depth 2, d=64, 4 heads.
  static ModelConfig micro(int num_classes);
  static ModelConfig tiny(int num_classes);
  static ModelConfig base(int num_classes);
  // "micro" | "tiny" | "base"
  static ModelConfig preset(const std::string& name, int num_classes);

  // "full" | "no_shape" | "no_location" | "no_order"
  ModelConfig with_ablation(const std::string& variant) const;
  std::string ablation_name() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace sketchxai::model
