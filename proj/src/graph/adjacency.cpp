#include "gmnn/graph/adjacency.hpp"

#include <cmath>

namespace gmnn::graph {

ad::SparseMatrix<double> normalize_adjacency(std::size_t num_nodes, std::span<const Edge> edges,
                                             bool add_self_loops) {
  const auto canonical = canonical_edges(num_nodes, edges);
  std::vector<double> degree(num_nodes, add_self_loops ? 1.0 : 0.0);
  for (const auto& [u, v] : canonical) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  std::vector<double> inv_sqrt(num_nodes, 0.0);
  for (std::size_t n = 0; n < num_nodes; ++n) {
    if (degree[n] > 0.0) inv_sqrt[n] = 1.0 / std::sqrt(degree[n]);
  }
  std::vector<ad::Triplet<double>> triplets;
  triplets.reserve(2 * canonical.size() + (add_self_loops ? num_nodes : 0));
  for (const auto& [u, v] : canonical) {
    const double w = inv_sqrt[u] * inv_sqrt[v];
    triplets.push_back({u, v, w});
    triplets.push_back({v, u, w});
  }
  if (add_self_loops) {
    for (std::size_t n = 0; n < num_nodes; ++n) triplets.push_back({n, n, inv_sqrt[n] * inv_sqrt[n]});
  }
  return ad::SparseMatrix<double>::from_triplets(num_nodes, num_nodes, std::move(triplets));
}

}  // namespace gmnn::graph
