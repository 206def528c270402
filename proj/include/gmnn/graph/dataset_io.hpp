#pragma once

#include "gmnn/graph/graph.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gmnn::graph {

/// Reads a portable dataset document:
///
///   {"num_nodes": N, "num_features": F, "num_classes": K,
///    "edges": [[u, v], ...], "features": [[node, feature, value], ...],
///    "labels": [[node, class], ...],
///    "splits": {"train": [...], "val": [...], "test": [...]}}
///
/// Indices are 0-based. Unknown fields are rejected. Throws DataError.
Graph load_dataset(const std::filesystem::path& path);
Graph parse_dataset(const nlohmann::json& doc);

/// Inverse of parse_dataset. Edges are written in canonical (u < v) form.
nlohmann::json dataset_to_json(const Graph& g);
void save_dataset(const Graph& g, const std::filesystem::path& path);

/// One directed, weighted edge record of a signed network.
struct WeightedEdge {
  NodeId source;
  NodeId target;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Weighted-edge sidecar consumed by the link task:
///   {"num_nodes": N, "edges": [[source, target, weight], ...]}
/// Records keep their file order; duplicates and both directions are kept.
std::vector<WeightedEdge> load_weighted_edges(const std::filesystem::path& path,
                                              std::size_t expected_num_nodes);
std::vector<WeightedEdge> parse_weighted_edges(const nlohmann::json& doc,
                                               std::size_t expected_num_nodes);
nlohmann::json weighted_edges_to_json(std::size_t num_nodes, const std::vector<WeightedEdge>& edges);

}  // namespace gmnn::graph
