#include "gmnn/tasks/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gmnn::tasks {

std::string to_string(Metric m) { return m == Metric::Accuracy ? "accuracy" : "f1"; }

Metric metric_from_string(const std::string& name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "f1") return Metric::F1;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

namespace {

int label_of(std::span<const std::optional<int>> truth, graph::NodeId n) {
  if (n >= truth.size() || !truth[n]) throw std::invalid_argument("node " + std::to_string(n) + " has no label");
  return *truth[n];
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes) {
  if (nodes.empty()) throw std::invalid_argument("accuracy over an empty node set");
  std::size_t correct = 0;
  for (graph::NodeId n : nodes) correct += predicted[n] == label_of(truth, n);
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double f1_score(std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes, int positive) {
  if (nodes.empty()) throw std::invalid_argument("F1 over an empty node set");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (graph::NodeId n : nodes) {
    const bool actual = label_of(truth, n) == positive;
    const bool guess = predicted[n] == positive;
    tp += actual && guess;
    fp += !actual && guess;
    fn += actual && !guess;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2 * precision * recall / (precision + recall);
}

double evaluate(Metric m, std::span<const int> predicted, std::span<const std::optional<int>> truth,
                std::span<const graph::NodeId> nodes) {
  return m == Metric::Accuracy ? accuracy(predicted, truth, nodes) : f1_score(predicted, truth, nodes);
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate of no values");
  double total = 0;
  for (double v : values) total += v;
  Aggregate a;
  a.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::string format_mean_std(const Aggregate& a, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f \xC2\xB1 %.*f", decimals, 100 * a.mean, decimals, 100 * a.std);
  return buf;
}

}  // namespace gmnn::tasks
