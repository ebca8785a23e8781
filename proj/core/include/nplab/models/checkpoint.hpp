#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "nplab/models/model.hpp"

namespace nplab::models {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json to_json(const ModelConfig& cfg);
/// Overlays keys present in `j`; unknown keys raise ConfigError.
void update_from_json(ModelConfig& cfg, const nlohmann::json& j, const std::string& path = "model");

nlohmann::json to_json(const MlpParams& net);
MlpParams mlp_from_json(const nlohmann::json& j, const std::string& path);

/// Dimensions, switches and every named network with flattened row-major
/// weights, plus a format_version field.
nlohmann::json checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace nplab::models
