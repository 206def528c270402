#pragma once

#include "gmnn/graph/graph.hpp"

#include <cstdint>

namespace gmnn::graph {

/// Planted-partition graph with bag-of-words attributes, shaped like the small
/// citation benchmarks: homophilous edges, heavy-tailed degrees, binary
/// sparse features that are only weakly class-informative.
struct PlantedPartitionConfig {
  std::size_t num_nodes = 600;
  std::size_t num_classes = 4;
  double avg_degree = 4.0;
  /// Fraction of edges joining two nodes of the same class.
  double homophily = 0.8;
  std::size_t num_features = 200;
  std::size_t words_per_node = 12;
  /// Probability that a word is drawn from the node's class topic.
  double feature_signal = 0.3;
  std::size_t topic_size = 25;
  /// Spread of the log-normal node activity driving degree heterogeneity.
  double degree_spread = 0.8;
  std::size_t train_per_class = 10;
  std::size_t val_size = 100;
  std::size_t test_size = 300;
  std::uint64_t seed = 1;
};

Graph make_planted_partition(const PlantedPartitionConfig& cfg);

}  // namespace gmnn::graph
