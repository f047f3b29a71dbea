#pragma once

#include <string>

#include "excirec/nn.hpp"
#include "json.hpp"

namespace excirec {

nlohmann::json network_config_to_json(const nn::NetworkConfig& cfg);
nn::NetworkConfig network_config_from_json(const nlohmann::json& j);

// EXNN container: magic "EXNN", u32 version, u64-length-prefixed config
// JSON, u32 tensor count, then each tensor as u32 rows, u32 cols, f32 data
// (row-major).
void save_checkpoint(const std::string& path, nn::Network<float>& net);
nn::Network<float> load_checkpoint(const std::string& path);

void save_history_csv(const std::string& path, const nn::TrainHistory& hist);

}  // namespace excirec
