#pragma once

#include "gmnn/em/em.hpp"

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gmnn::testing {

/// Graph with the given edges, labels on `train`, and every other node in val.
inline graph::Graph small_graph(std::size_t n, std::vector<graph::Edge> edges, std::vector<int> labels,
                         std::vector<graph::NodeId> train, std::size_t k, Rng& rng) {
  std::vector<std::optional<int>> y(labels.begin(), labels.end());
  graph::Split split;
  split.train = train;
  for (graph::NodeId v = 0; v < n; ++v) {
    if (std::find(train.begin(), train.end(), v) == train.end()) split.val.push_back(v);
  }
  return graph::make_graph(n, edges, random_sparse<double>(n, 4, 0.5, rng), std::move(y), k, split);
}

inline models::PNet<double> sharp_pnet(const em::Problem<double>& problem, std::size_t layers, bool attrs, bool exclude,
                                       Rng& rng, double scale = 3.0) {
  auto p = models::make_pnet<double>({models::ArchKind::GraphConv, layers, 6}, problem.num_classes,
                                     problem.features.cols(), attrs, exclude, 0.0, rng);
  for (auto& param : p.net.params()) {
    param.value = random_matrix<double>(param.value.rows(), param.value.cols(), rng, scale);
  }
  return p;
}

// Independent oracle: exact E[log p(y_n | y_-n)] by enumerating every joint
// assignment of all unlabeled nodes other than n and running the full network.
inline ad::Matrix<double> brute_force_targets(const em::Problem<double>& problem, const models::PNet<double>& p,
                                              const ad::Matrix<double>& table) {
  const auto k = static_cast<Eigen::Index>(problem.num_classes);
  ad::Matrix<double> out = ad::Matrix<double>::Zero(table.rows(), table.cols());
  for (auto n : problem.unlabeled) {
    std::vector<graph::NodeId> others;
    for (auto m : problem.unlabeled) {
      if (m != n) others.push_back(m);
    }
    std::size_t total = 1;
    for (std::size_t i = 0; i < others.size(); ++i) total *= static_cast<std::size_t>(k);
    ad::RowVector<double> acc = ad::RowVector<double>::Zero(k);
    for (std::size_t code = 0; code < total; ++code) {
      ad::Matrix<double> labels = problem.observed;
      double w = 1;
      std::size_t c = code;
      for (auto m : others) {
        const auto cls = static_cast<Eigen::Index>(c % static_cast<std::size_t>(k));
        c /= static_cast<std::size_t>(k);
        labels(static_cast<Eigen::Index>(m), cls) = 1;
        w *= table(static_cast<Eigen::Index>(m), cls);
      }
      const ad::Matrix<double> logits = p.infer(problem.prop, labels, p.use_attrs ? &problem.features : nullptr);
      acc += w * ad::log_softmax_rows<double>(logits).row(static_cast<Eigen::Index>(n));
    }
    const double m = acc.maxCoeff();
    const double lse = m + std::log((acc.array() - m).exp().sum());
    out.row(static_cast<Eigen::Index>(n)) = acc.array() - lse;
  }
  return out;
}

}  // namespace gmnn::testing
