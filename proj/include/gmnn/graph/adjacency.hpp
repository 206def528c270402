#pragma once

#include "gmnn/graph/graph.hpp"

namespace gmnn::graph {

/// With self-loops: D~^{-1/2} (A + I) D~^{-1/2}, D~ the degree of A + I.
/// Without: D^{-1/2} A D^{-1/2}; rows of isolated nodes stay empty.
ad::SparseMatrix<double> normalize_adjacency(std::size_t num_nodes, std::span<const Edge> edges,
                                             bool add_self_loops);

inline ad::SparseMatrix<double> normalize_adjacency(const Graph& g, bool add_self_loops) {
  return normalize_adjacency(g.num_nodes, g.edges, add_self_loops);
}

}  // namespace gmnn::graph
