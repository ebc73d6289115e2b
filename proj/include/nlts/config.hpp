#pragma once

// Strict JSON readers shared by the benchmark and CLI configs. Unknown keys are errors.

#include <initializer_list>
#include <string_view>

#include <json.hpp>

#include "nlts/net.hpp"
#include "nlts/train.hpp"

namespace nlts {

void require_object(const nlohmann::json& j, std::string_view where);
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view where);

/// {"learning_rate", "batch_size", "patience", "max_epochs", "adam_beta1", "adam_beta2",
///  "adam_eps", "tau", "clamp", "init_scale"}; absent keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

/// {"depth", "width"} or {"widths"}, plus optional "activation". input_dim is supplied by the caller.
Architecture hidden_layers_from_json(const nlohmann::json& j, Index input_dim);
nlohmann::json hidden_layers_to_json(const Architecture& arch);

}  // namespace nlts
