#include "gmnn/autodiff/optimizer.hpp"

namespace gmnn::ad {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::RmsProp ? "rmsprop" : "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "rmsprop") return OptimizerKind::RmsProp;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

}  // namespace gmnn::ad
