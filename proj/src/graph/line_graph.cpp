#include "gmnn/graph/line_graph.hpp"

#include <algorithm>
#include <string>

namespace gmnn::graph {

Graph build_line_graph(std::size_t num_nodes, std::span<const Edge> edge_records) {
  if (edge_records.empty()) throw DataError("line graph of a graph without edges");
  const std::size_t m = edge_records.size();

  std::vector<std::vector<NodeId>> incident(num_nodes);
  std::vector<ad::Triplet<double>> features;
  features.reserve(2 * m);
  for (std::size_t e = 0; e < m; ++e) {
    const auto [u, v] = edge_records[e];
    if (u >= num_nodes || v >= num_nodes) {
      throw DataError("edge record " + std::to_string(e) + " references a node >= num_nodes");
    }
    incident[u].push_back(e);
    features.push_back({e, u, 1.0});
    if (v != u) {
      incident[v].push_back(e);
      features.push_back({e, v, 1.0});
    }
  }

  std::vector<Edge> line_edges;
  std::size_t pairs = 0;
  for (const auto& list : incident) pairs += list.size() * (list.size() - (list.empty() ? 0 : 1)) / 2;
  line_edges.reserve(pairs);
  for (const auto& list : incident) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) line_edges.emplace_back(list[i], list[j]);
    }
  }

  Graph line;
  line.num_nodes = m;
  line.raw_edge_count = line_edges.size();
  line.edges = canonical_edges(m, line_edges);
  line.features = ad::SparseMatrix<double>::from_triplets(m, num_nodes, std::move(features));
  line.labels.assign(m, std::nullopt);
  line.num_classes = 0;
  validate(line);
  return line;
}

}  // namespace gmnn::graph
