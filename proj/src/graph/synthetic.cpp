#include "gmnn/graph/synthetic.hpp"

#include "gmnn/autodiff/matrix.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace gmnn::graph {

Graph make_planted_partition(const PlantedPartitionConfig& cfg) {
  if (cfg.num_classes == 0 || cfg.num_nodes < cfg.num_classes) {
    throw std::invalid_argument("planted partition needs at least one node per class");
  }
  if (cfg.train_per_class * cfg.num_classes + cfg.val_size + cfg.test_size > cfg.num_nodes) {
    throw std::invalid_argument("split sizes exceed num_nodes");
  }
  Rng rng(cfg.seed);
  const std::size_t n = cfg.num_nodes;
  const std::size_t k = cfg.num_classes;

  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<int>(i % k);
  std::shuffle(cls.begin(), cls.end(), rng);

  std::lognormal_distribution<double> activity_dist(0.0, cfg.degree_spread);
  std::vector<double> activity(n);
  for (auto& a : activity) a = activity_dist(rng);

  std::vector<std::vector<NodeId>> members(k);
  for (std::size_t i = 0; i < n; ++i) members[cls[i]].push_back(i);
  std::vector<std::discrete_distribution<std::size_t>> pick_in_class;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> w;
    for (NodeId m : members[c]) w.push_back(activity[m]);
    pick_in_class.emplace_back(w.begin(), w.end());
  }
  std::discrete_distribution<std::size_t> pick_any(activity.begin(), activity.end());
  std::bernoulli_distribution same_class(cfg.homophily);
  std::uniform_int_distribution<std::size_t> other_class(1, k > 1 ? k - 1 : 1);

  const auto target_edges = static_cast<std::size_t>(cfg.avg_degree * static_cast<double>(n) / 2.0);
  std::vector<Edge> edges;
  edges.reserve(target_edges);
  while (edges.size() < target_edges) {
    const NodeId u = pick_any(rng);
    std::size_t c = static_cast<std::size_t>(cls[u]);
    if (k > 1 && !same_class(rng)) c = (c + other_class(rng)) % k;
    const NodeId v = members[c][pick_in_class[c](rng)];
    if (u != v) edges.emplace_back(u, v);
  }

  std::vector<std::vector<std::size_t>> topics(k);
  std::vector<std::size_t> vocab(cfg.num_features);
  std::iota(vocab.begin(), vocab.end(), 0);
  for (auto& topic : topics) {
    std::shuffle(vocab.begin(), vocab.end(), rng);
    topic.assign(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(
                                                    std::min(cfg.topic_size, cfg.num_features)));
  }
  std::bernoulli_distribution from_topic(cfg.feature_signal);
  std::uniform_int_distribution<std::size_t> any_word(0, cfg.num_features - 1);
  std::vector<ad::Triplet<double>> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> words;
    const auto& topic = topics[cls[i]];
    std::uniform_int_distribution<std::size_t> topic_word(0, topic.size() - 1);
    for (std::size_t w = 0; w < cfg.words_per_node; ++w) {
      words.push_back(from_topic(rng) ? topic[topic_word(rng)] : any_word(rng));
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (std::size_t w : words) triplets.push_back({i, w, 1.0});
  }
  auto features = ad::SparseMatrix<double>::from_triplets(n, cfg.num_features, std::move(triplets));

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Split split;
  std::vector<std::size_t> taken(k, 0);
  std::vector<NodeId> rest;
  for (NodeId i : order) {
    if (taken[cls[i]] < cfg.train_per_class) {
      split.train.push_back(i);
      ++taken[cls[i]];
    } else {
      rest.push_back(i);
    }
  }
  split.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cfg.val_size));
  split.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(cfg.val_size),
                    rest.begin() + static_cast<std::ptrdiff_t>(cfg.val_size + cfg.test_size));
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());

  std::vector<std::optional<int>> labels(cls.begin(), cls.end());
  return make_graph(n, edges, std::move(features), std::move(labels), k, std::move(split));
}

}  // namespace gmnn::graph
