#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchxai/model/config.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/model/parameters.hpp"

namespace sketchxai::model {

struct Checkpoint {
  ModelConfig config;
  std::vector<std::string> categories;
  Parameters<float> params;

  template <typename T>
  Network<T> network() const {
    return Network<T>(config, params.template cast<T>());
  }
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

// Writes `<path>` (magic "SXCK", u32 version, u32 tensor count, then per
// tensor: name, u32 rows, u32 cols, float32 column-major data) and the JSON
// sidecar `<path>.json` (config, categories, tensor names and shapes).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws kFormat on a truncated or inconsistent file and kConfigMismatch when
// tensor names/shapes disagree with the sidecar config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sketchxai::model
