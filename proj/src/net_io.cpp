#include "nlts/net_io.hpp"

#include <cmath>
#include <fstream>

namespace nlts {

using nlohmann::json;

json architecture_to_json(const Architecture& arch) {
  return json{{"input_dim", arch.input_dim}, {"widths", arch.widths}};
}

Architecture architecture_from_json(const json& j) {
  try {
    Architecture arch;
    arch.input_dim = j.at("input_dim").get<Index>();
    arch.widths = j.at("widths").get<std::vector<Index>>();
    if (j.contains("activation")) arch.activation = activation_from_string(j.at("activation").get<std::string>());
    arch.validate();
    return arch;
  } catch (const json::exception& e) {
    throw FormatError(std::string("architecture JSON: ") + e.what());
  }
}

json mlp_to_json(const Mlpd& net) {
  const Eigen::VectorXd theta = flatten_params(net);
  for (Index i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(theta(i))) throw FormatError("mlp JSON: parameter " + std::to_string(i) + " is not finite");
  }
  return json{{"format", "nlts.mlp"},
              {"schema_version", 1},
              {"arch", architecture_to_json(net.arch())},
              {"activation", std::string(to_string(net.arch().activation))},
              {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())}};
}

Mlpd mlp_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "nlts.mlp") throw FormatError("mlp JSON: wrong format tag");
    if (j.at("schema_version").get<int>() != 1) throw FormatError("mlp JSON: unsupported schema_version");
    Architecture arch = architecture_from_json(j.at("arch"));
    arch.activation = activation_from_string(j.at("activation").get<std::string>());
    const auto values = j.at("theta").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != arch.num_params())
      throw FormatError("mlp JSON: expected " + std::to_string(arch.num_params()) + " parameters, got " +
                        std::to_string(values.size()));
    const Eigen::Map<const Eigen::VectorXd> theta(values.data(), static_cast<Index>(values.size()));
    return unflatten_params<double>(arch, theta);
  } catch (const json::exception& e) {
    throw FormatError(std::string("mlp JSON: ") + e.what());
  }
}

void save_mlp(const Mlpd& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << mlp_to_json(net).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Mlpd load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return mlp_from_json(j);
}

}  // namespace nlts
