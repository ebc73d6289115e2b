#include "nlts/net.hpp"

namespace nlts {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "relu";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

Architecture Architecture::uniform(Index input_dim, Index depth, Index width,
                                   Activation activation) {
  if (depth < 1) throw DimensionError("architecture: depth must be >= 1");
  Architecture arch{input_dim, std::vector<Index>(static_cast<std::size_t>(depth), width),
                    activation};
  arch.validate();
  return arch;
}

void Architecture::validate() const {
  if (input_dim < 1) throw DimensionError("architecture: input_dim must be >= 1");
  if (widths.empty()) throw DimensionError("architecture: at least one hidden layer is required");
  for (Index w : widths) {
    if (w < 1) throw DimensionError("architecture: hidden widths must be >= 1");
  }
}

}  // namespace nlts
