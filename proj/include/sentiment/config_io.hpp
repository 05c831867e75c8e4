#pragma once

#include <json.hpp>

#include "sentiment/trainer.hpp"

namespace sentiment {

nlohmann::json config_to_json(const TrainConfig& cfg);

/// Applies the fields present in j on top of base; unknown keys throw.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

TrainConfig load_config_file(const std::string& path, TrainConfig base = {});

}  // namespace sentiment
