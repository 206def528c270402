#pragma once

#include "gmnn/baselines/baselines.hpp"
#include "gmnn/em/em.hpp"
#include "gmnn/em/fixed_point.hpp"
#include "gmnn/graph/dataset_io.hpp"
#include "gmnn/tasks/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gmnn::tasks {

enum class Task { Object, Link, Unsupervised };
enum class Method { Gmnn, Gcn, LabelPropagation, SelfTraining, GmnnNonAmortized };

std::string to_string(Task t);
Task task_from_string(const std::string& name);
std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Throws std::invalid_argument for combinations without a driver.
void check_supported(Task t, Method m);

/// Turns a signed, weighted edge list into a link classification problem.
struct LinkSpec {
  /// Records with weight above this are class 1, below `negative_threshold` class 0.
  double positive_threshold = 3.0;
  double negative_threshold = -3.0;
  std::size_t train = 100;
  std::size_t val = 500;
};

struct ProbeConfig {
  std::size_t epochs = 300;
  double lr = 0.01;
  double weight_decay = 0.0;
};

struct TaskConfig {
  Task task = Task::Object;
  Method method = Method::Gmnn;
  em::EMConfig em;
  em::FixedPointConfig fixed_point;
  baselines::LPConfig lp;
  LinkSpec link;
  ProbeConfig probe;
  /// Every positive feature value becomes 1 before training.
  bool binarize_features = true;
  bool row_normalize_features = false;
};

/// Settings for `task`, tuned per dataset where the experiments differ
/// (`dataset` is matched case-insensitively against "pubmed").
TaskConfig default_config(Task task, Method method, const std::string& dataset = "");

nlohmann::json config_to_json(const TaskConfig& cfg);
/// Every field must be present. Throws std::invalid_argument.
TaskConfig config_from_json(const nlohmann::json& doc);

/// Sets one field by dotted path ("em.strategy.tau", "em.q_arch.hidden").
/// The value is parsed according to the field's current type. Throws
/// std::invalid_argument for unknown paths or unparsable values.
void apply_override(TaskConfig& cfg, const std::string& path, const std::string& value);

struct SeedResult {
  std::uint64_t seed = 0;
  double test = em::kMissing;
  double val = em::kMissing;
  std::size_t best_iteration = 0;
  em::EMHistory history;
};

struct RunResult {
  TaskConfig config;
  std::string dataset;
  std::vector<SeedResult> runs;

  std::vector<double> per_seed() const;
  Aggregate summary() const;
  /// {task, method, dataset, metric, config, seeds, per_seed, mean, std, runs}
  nlohmann::json to_json() const;
  /// The per-seed histories, each row prefixed with its seed.
  std::string histories_csv() const;
};

/// Runs `fn` for every seed on up to `parallel` threads; results are stored in seed order.
std::vector<SeedResult> run_seeds(std::span<const std::uint64_t> seeds, std::size_t parallel,
                                  const std::function<SeedResult(std::uint64_t)>& fn);

/// One seed of object classification on g's split.
SeedResult object_classification_seed(const graph::Graph& g, const TaskConfig& cfg, std::uint64_t seed);

RunResult run_object_classification(const graph::Graph& g, const std::string& dataset, const TaskConfig& cfg,
                                    std::span<const std::uint64_t> seeds, std::size_t parallel = 1);

/// Line graph over every record with its link labels and no split.
graph::Graph build_link_graph(std::size_t num_nodes, std::span<const graph::WeightedEdge> records,
                              const LinkSpec& spec);

/// Labeled line-nodes shuffled with `seed`, then split train/val/rest.
/// Throws graph::DataError when there are not enough labeled links.
graph::Split sample_link_split(const graph::Graph& line, const LinkSpec& spec, std::uint64_t seed);

RunResult run_link_classification(std::size_t num_nodes, std::span<const graph::WeightedEdge> records,
                                  const std::string& dataset, const TaskConfig& cfg,
                                  std::span<const std::uint64_t> seeds, std::size_t parallel = 1);

/// Neighbor-prediction problem: K = num_nodes, every node's target is the
/// uniform distribution over its neighbors (itself when isolated), nothing
/// is labeled or evaluable.
template <typename T>
em::Problem<T> make_neighbor_problem(const graph::Graph& g);

/// Trains an affine softmax classifier on the train rows of frozen
/// representations; returns accuracy on the test split.
template <typename T>
double linear_probe(const ad::Matrix<T>& reps, const graph::Graph& g, const ProbeConfig& cfg, std::uint64_t seed);

SeedResult unsupervised_seed(const graph::Graph& g, const TaskConfig& cfg, std::uint64_t seed);

RunResult run_unsupervised(const graph::Graph& g, const std::string& dataset, const TaskConfig& cfg,
                           std::span<const std::uint64_t> seeds, std::size_t parallel = 1);

/// Applies the feature transforms selected in cfg.
graph::Graph prepare_graph(const graph::Graph& g, const TaskConfig& cfg);

}  // namespace gmnn::tasks
