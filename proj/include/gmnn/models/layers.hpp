#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gmnn::models {

enum class LayerKind { GraphConv, MeanPool, Linear };
enum class Activation { None, Relu };

/// GraphConv: act(A (x W) + b). Linear: act(x W + b). MeanPool: A x, no weights.
struct LayerSpec {
  LayerKind kind = LayerKind::GraphConv;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::None;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

inline bool propagates(LayerKind kind) { return kind != LayerKind::Linear; }
inline bool has_weights(LayerKind kind) { return kind != LayerKind::MeanPool; }

/// Shorthand for the architectures the experiments sweep over.
enum class ArchKind { GraphConv, Linear, MeanPool };

struct ArchConfig {
  ArchKind kind = ArchKind::GraphConv;
  std::size_t layers = 2;
  std::size_t hidden = 16;
  /// Append a Linear layer after `layers` ReLU layers (representation-learning head).
  bool linear_head = false;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

std::string to_string(ArchKind kind);
ArchKind arch_kind_from_string(const std::string& name);

/// Expands an architecture into layer specs chaining `in_dim` to `out_dim`.
std::vector<LayerSpec> build_layers(const ArchConfig& arch, std::size_t in_dim, std::size_t out_dim);

/// Throws std::invalid_argument when dims do not chain or a MeanPool layer changes width.
void validate_layers(const std::vector<LayerSpec>& layers);

}  // namespace gmnn::models
