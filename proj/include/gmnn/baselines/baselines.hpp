#pragma once

#include "gmnn/em/em.hpp"
#include "gmnn/graph/graph.hpp"

namespace gmnn::baselines {

struct LPConfig {
  double alpha = 0.99;
  std::size_t iterations = 100;
};

/// Throws std::invalid_argument unless 0 < alpha < 1.
void validate(const LPConfig& cfg);

/// F after `iterations` steps of F <- alpha S F + (1 - alpha) Y, F(0) = Y,
/// with S = D^{-1/2} A D^{-1/2} and Y the one-hot train labels.
ad::Matrix<double> propagate_labels(const graph::Graph& g, const LPConfig& cfg);

/// Row argmax of propagate_labels, ties to the lowest class.
std::vector<int> label_propagation(const graph::Graph& g, const LPConfig& cfg);

/// q annotates the unlabeled nodes with the EM sampling strategy, then q is
/// retrained on its annotations plus the ground truth. Same schedule,
/// selection and stopping rules as train_gmnn.
template <typename T>
em::GMNNResult<T> self_training(const em::Problem<T>& problem, const em::EMConfig& cfg);

}  // namespace gmnn::baselines
