#pragma once

// nlohmann/json adapters shared by the serializers.

#include "json.hpp"
#include "reluflow/network.hpp"

namespace reluflow {

void to_json(nlohmann::json& j, const NetworkParams& net);
NetworkParams network_params_from_json(const nlohmann::json& j);

} // namespace reluflow
