#pragma once

#include "gmnn/autodiff/sparse_matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gmnn::graph {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Raised for malformed or inconsistent dataset content.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Undirected attributed graph with partial labels.
///
/// `edges` holds each undirected pair once as (u, v) with u < v, sorted, with
/// self-loops removed. `raw_edge_count` is the number of edge records the
/// graph was built from, before symmetrization and deduplication.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::size_t raw_edge_count = 0;
  ad::SparseMatrix<double> features;
  std::vector<std::optional<int>> labels;
  std::size_t num_classes = 0;
  Split split;

  std::size_t num_features() const { return features.cols(); }

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Symmetrizes, deduplicates and drops self-loops. Throws DataError on
/// endpoints >= num_nodes.
std::vector<Edge> canonical_edges(std::size_t num_nodes, std::span<const Edge> raw);

/// Builds a graph from raw parts and checks every invariant.
Graph make_graph(std::size_t num_nodes, std::span<const Edge> raw_edges,
                 ad::SparseMatrix<double> features, std::vector<std::optional<int>> labels,
                 std::size_t num_classes, Split split);

/// Throws DataError naming the first violated invariant.
void validate(const Graph& g);

/// Sorted neighbor list per node.
std::vector<std::vector<NodeId>> neighbor_lists(std::size_t num_nodes, std::span<const Edge> edges);

std::vector<std::size_t> degrees(const Graph& g);

/// Nodes carrying ground truth during training (the train split).
std::vector<bool> labeled_mask(const Graph& g);

/// Every node outside the train split, ascending.
std::vector<NodeId> unlabeled_nodes(const Graph& g);

/// Every stored value > 0 becomes 1; values <= 0 are dropped.
Graph binarize_features(const Graph& g);

/// Scales every nonempty feature row to unit sum.
Graph row_normalize_features(const Graph& g);

}  // namespace gmnn::graph
