#include "gmnn/models/layers.hpp"

#include <stdexcept>

namespace gmnn::models {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::GraphConv: return "gc";
    case LayerKind::MeanPool: return "meanpool";
    case LayerKind::Linear: return "linear";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "gc") return LayerKind::GraphConv;
  if (name == "meanpool") return LayerKind::MeanPool;
  if (name == "linear") return LayerKind::Linear;
  throw std::invalid_argument("unknown layer kind '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "none"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "none") return Activation::None;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::GraphConv: return "gc";
    case ArchKind::Linear: return "linear";
    case ArchKind::MeanPool: return "meanpool";
  }
  return "?";
}

ArchKind arch_kind_from_string(const std::string& name) {
  if (name == "gc") return ArchKind::GraphConv;
  if (name == "linear") return ArchKind::Linear;
  if (name == "meanpool") return ArchKind::MeanPool;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

std::vector<LayerSpec> build_layers(const ArchConfig& arch, std::size_t in_dim, std::size_t out_dim) {
  if (arch.layers == 0) throw std::invalid_argument("architecture needs at least one layer");
  std::vector<LayerSpec> layers;
  if (arch.kind == ArchKind::MeanPool) {
    for (std::size_t l = 0; l < arch.layers; ++l) {
      layers.push_back({LayerKind::MeanPool, in_dim, in_dim, Activation::None});
    }
    layers.push_back({LayerKind::Linear, in_dim, out_dim, Activation::None});
    return layers;
  }
  const LayerKind kind = arch.kind == ArchKind::GraphConv ? LayerKind::GraphConv : LayerKind::Linear;
  if (arch.hidden == 0 && (arch.layers > 1 || arch.linear_head)) {
    throw std::invalid_argument("hidden width must be positive");
  }
  std::size_t width = in_dim;
  const std::size_t relu_layers = arch.linear_head ? arch.layers : arch.layers - 1;
  for (std::size_t l = 0; l < relu_layers; ++l) {
    layers.push_back({kind, width, arch.hidden, Activation::Relu});
    width = arch.hidden;
  }
  layers.push_back({arch.linear_head ? LayerKind::Linear : kind, width, out_dim, Activation::None});
  return layers;
}

void validate_layers(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw std::invalid_argument("network without layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (s.in_dim == 0 || s.out_dim == 0) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has a zero dimension");
    }
    if (s.kind == LayerKind::MeanPool && s.in_dim != s.out_dim) {
      throw std::invalid_argument("mean-pooling layer " + std::to_string(l) + " cannot change width");
    }
    if (l > 0 && layers[l - 1].out_dim != s.in_dim) {
      throw std::invalid_argument("layer " + std::to_string(l) + " expects width " +
                                  std::to_string(s.in_dim) + " but receives " +
                                  std::to_string(layers[l - 1].out_dim));
    }
  }
}

}  // namespace gmnn::models
