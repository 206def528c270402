#pragma once

#include "gmnn/graph/graph.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gmnn::tasks {

enum class Metric { Accuracy, F1 };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& name);

/// Fraction of `nodes` whose prediction equals the label. Throws on an empty
/// node set or an unlabeled node.
double accuracy(std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes);

/// F1 of class `positive` over `nodes`: 2PR/(P+R), and 0 when nothing is
/// predicted positive or no true positives exist.
double f1_score(std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes, int positive = 1);

double evaluate(Metric m, std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes);

struct Aggregate {
  double mean = 0.0;
  /// Sample standard deviation; 0 for a single value.
  double std = 0.0;
};

Aggregate aggregate(std::span<const double> values);

/// "83.675 ± 0.900" from fractions in [0, 1], reported in percent.
std::string format_mean_std(const Aggregate& a, int decimals = 3);

}  // namespace gmnn::tasks
