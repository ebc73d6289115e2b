#include "nlts/config.hpp"

#include <algorithm>
#include <string>

namespace nlts {

using nlohmann::json;

void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw FormatError(std::string(where) + ": expected a JSON object");
}

void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw FormatError(std::string(where) + ": unknown key '" + key + "'");
  }
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(where) + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
  require_known_keys(j,
                     {"learning_rate", "batch_size", "patience", "max_epochs", "adam_beta1", "adam_beta2", "adam_eps",
                      "tau", "clamp", "init_scale"},
                     "train");
  TrainConfig cfg;
  read_if(j, "learning_rate", cfg.learning_rate, "train");
  read_if(j, "batch_size", cfg.batch_size, "train");
  read_if(j, "patience", cfg.patience, "train");
  read_if(j, "max_epochs", cfg.max_epochs, "train");
  read_if(j, "adam_beta1", cfg.adam_beta1, "train");
  read_if(j, "adam_beta2", cfg.adam_beta2, "train");
  read_if(j, "adam_eps", cfg.adam_eps, "train");
  read_if(j, "init_scale", cfg.init_scale, "train");
  if (j.contains("tau")) {
    double tau = 1e-9;
    read_if(j, "tau", tau, "train");
    cfg.penalty = ClippedPenalty{0.0, tau};
  }
  if (j.contains("clamp")) {
    double clamp = 1.0;
    read_if(j, "clamp", clamp, "train");
    cfg.clamp = clamp;
  }
  cfg.validate();
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j{{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size}, {"patience", cfg.patience},
         {"max_epochs", cfg.max_epochs},       {"adam_beta1", cfg.adam_beta1}, {"adam_beta2", cfg.adam_beta2},
         {"adam_eps", cfg.adam_eps},           {"init_scale", cfg.init_scale},
         {"tau", cfg.penalty ? cfg.penalty->tau : 1e-9}};
  if (cfg.clamp) j["clamp"] = *cfg.clamp;
  return j;
}

Architecture hidden_layers_from_json(const json& j, Index input_dim) {
  require_known_keys(j, {"depth", "width", "widths", "activation"}, "arch");
  Architecture arch;
  arch.input_dim = input_dim;
  if (j.contains("widths")) {
    if (j.contains("depth") || j.contains("width")) throw FormatError("arch: give either widths or depth/width");
    read_if(j, "widths", arch.widths, "arch");
  } else {
    Index depth = 3, width = 128;
    read_if(j, "depth", depth, "arch");
    read_if(j, "width", width, "arch");
    if (depth < 1) throw FormatError("arch: depth must be >= 1");
    arch.widths.assign(static_cast<std::size_t>(depth), width);
  }
  if (j.contains("activation")) {
    std::string name;
    read_if(j, "activation", name, "arch");
    arch.activation = activation_from_string(name);
  }
  arch.validate();
  return arch;
}

json hidden_layers_to_json(const Architecture& arch) {
  return json{{"widths", arch.widths}, {"activation", std::string(to_string(arch.activation))}};
}

}  // namespace nlts
