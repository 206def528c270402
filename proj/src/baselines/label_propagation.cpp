#include "gmnn/baselines/baselines.hpp"
#include "gmnn/graph/adjacency.hpp"
#include "gmnn/models/models.hpp"

#include <stdexcept>

namespace gmnn::baselines {

void validate(const LPConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("label propagation alpha must be in (0, 1)");
}

ad::Matrix<double> propagate_labels(const graph::Graph& g, const LPConfig& cfg) {
  validate(cfg);
  const auto s = graph::normalize_adjacency(g, false);
  ad::Matrix<double> y = ad::Matrix<double>::Zero(static_cast<Eigen::Index>(g.num_nodes),
                                                  static_cast<Eigen::Index>(g.num_classes));
  for (graph::NodeId n : g.split.train) y(static_cast<Eigen::Index>(n), *g.labels[n]) = 1.0;
  ad::Matrix<double> f = y;
  for (std::size_t it = 0; it < cfg.iterations; ++it) f = cfg.alpha * ad::multiply(s, f) + (1.0 - cfg.alpha) * y;
  return f;
}

std::vector<int> label_propagation(const graph::Graph& g, const LPConfig& cfg) {
  return models::predict(propagate_labels(g, cfg));
}

}  // namespace gmnn::baselines
