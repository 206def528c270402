#include "gmnn/graph/graph.hpp"

#include <algorithm>
#include <string>

namespace gmnn::graph {

std::vector<Edge> canonical_edges(std::size_t num_nodes, std::span<const Edge> raw) {
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& [u, v] : raw) {
    if (u >= num_nodes || v >= num_nodes) {
      throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                      ") references a node >= num_nodes=" + std::to_string(num_nodes));
    }
    if (u == v) continue;
    edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

Graph make_graph(std::size_t num_nodes, std::span<const Edge> raw_edges,
                 ad::SparseMatrix<double> features, std::vector<std::optional<int>> labels,
                 std::size_t num_classes, Split split) {
  Graph g;
  g.num_nodes = num_nodes;
  g.edges = canonical_edges(num_nodes, raw_edges);
  g.raw_edge_count = raw_edges.size();
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.num_classes = num_classes;
  g.split = std::move(split);
  validate(g);
  return g;
}

void validate(const Graph& g) {
  if (g.features.rows() != g.num_nodes) {
    throw DataError("feature matrix has " + std::to_string(g.features.rows()) + " rows for " +
                    std::to_string(g.num_nodes) + " nodes");
  }
  if (g.labels.size() != g.num_nodes) {
    throw DataError("label vector has " + std::to_string(g.labels.size()) + " entries for " +
                    std::to_string(g.num_nodes) + " nodes");
  }
  for (const auto& [u, v] : g.edges) {
    if (u >= g.num_nodes || v >= g.num_nodes) throw DataError("edge endpoint out of range");
    if (u >= v) throw DataError("edges must be stored as (u, v) with u < v");
  }
  for (std::size_t n = 0; n < g.num_nodes; ++n) {
    if (g.labels[n] && (*g.labels[n] < 0 || static_cast<std::size_t>(*g.labels[n]) >= g.num_classes)) {
      throw DataError("node " + std::to_string(n) + " has label " + std::to_string(*g.labels[n]) +
                      " outside [0, " + std::to_string(g.num_classes) + ")");
    }
  }
  std::vector<int> owner(g.num_nodes, -1);
  const char* names[] = {"train", "val", "test"};
  const std::vector<NodeId>* parts[] = {&g.split.train, &g.split.val, &g.split.test};
  for (int s = 0; s < 3; ++s) {
    for (NodeId n : *parts[s]) {
      if (n >= g.num_nodes) {
        throw DataError(std::string(names[s]) + " split references node " + std::to_string(n) +
                        " >= num_nodes=" + std::to_string(g.num_nodes));
      }
      if (owner[n] == s) {
        throw DataError("node " + std::to_string(n) + " listed twice in the " + names[s] + " split");
      }
      if (owner[n] >= 0) {
        throw DataError("node " + std::to_string(n) + " appears in both the " + names[owner[n]] +
                        " and " + names[s] + " splits");
      }
      owner[n] = s;
    }
  }
  for (NodeId n : g.split.train) {
    if (!g.labels[n]) throw DataError("train node " + std::to_string(n) + " has no label");
  }
  for (NodeId n : g.split.test) {
    if (!g.labels[n]) throw DataError("test node " + std::to_string(n) + " has no label");
  }
}

std::vector<std::vector<NodeId>> neighbor_lists(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<std::vector<NodeId>> nbrs(num_nodes);
  for (const auto& [u, v] : edges) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  for (auto& list : nbrs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return nbrs;
}

std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> deg(g.num_nodes, 0);
  for (const auto& [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

std::vector<bool> labeled_mask(const Graph& g) {
  std::vector<bool> mask(g.num_nodes, false);
  for (NodeId n : g.split.train) mask[n] = true;
  return mask;
}

std::vector<NodeId> unlabeled_nodes(const Graph& g) {
  const auto mask = labeled_mask(g);
  std::vector<NodeId> out;
  for (NodeId n = 0; n < g.num_nodes; ++n) {
    if (!mask[n]) out.push_back(n);
  }
  return out;
}

Graph binarize_features(const Graph& g) {
  std::vector<ad::Triplet<double>> triplets;
  for (std::size_t r = 0; r < g.features.rows(); ++r) {
    const auto idx = g.features.row_indices(r);
    const auto val = g.features.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (val[k] > 0.0) triplets.push_back({r, idx[k], 1.0});
    }
  }
  Graph out = g;
  out.features = ad::SparseMatrix<double>::from_triplets(g.features.rows(), g.features.cols(),
                                                         std::move(triplets));
  return out;
}

Graph row_normalize_features(const Graph& g) {
  std::vector<double> values(g.features.values().begin(), g.features.values().end());
  const auto offsets = g.features.row_offsets();
  for (std::size_t r = 0; r < g.features.rows(); ++r) {
    double total = 0.0;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) total += values[k];
    if (total == 0.0) continue;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) values[k] /= total;
  }
  Graph out = g;
  out.features = g.features.with_values(std::move(values));
  return out;
}

}  // namespace gmnn::graph
