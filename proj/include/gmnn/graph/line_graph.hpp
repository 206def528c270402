#pragma once

#include "gmnn/graph/graph.hpp"

namespace gmnn::graph {

/// One line-node per entry of `edge_records` (kept in input order, duplicates
/// and both directions included). Two line-nodes are adjacent iff their
/// records share an endpoint. Line-node features are the indicator vector of
/// the record's endpoints, of width `num_nodes`. The result is unlabeled with
/// an empty split. Throws DataError for an empty record list.
Graph build_line_graph(std::size_t num_nodes, std::span<const Edge> edge_records);

inline Graph build_line_graph(const Graph& g) { return build_line_graph(g.num_nodes, g.edges); }

}  // namespace gmnn::graph
