#pragma once

// JSON form of a network:
//   {"format": "nlts.mlp", "schema_version": 1,
//    "arch": {"input_dim": d, "widths": [p_1, ..., p_L]},
//    "activation": "relu" | "sigmoid",
//    "theta": [flatten_params order]}
// Doubles are written in shortest round-trip form, so load(save(net)) == net bit-for-bit.

#include <filesystem>

#include <json.hpp>

#include "nlts/net.hpp"

namespace nlts {

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

nlohmann::json mlp_to_json(const Mlpd& net);
Mlpd mlp_from_json(const nlohmann::json& j);

void save_mlp(const Mlpd& net, const std::filesystem::path& path);
Mlpd load_mlp(const std::filesystem::path& path);

}  // namespace nlts
