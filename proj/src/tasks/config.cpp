#include "gmnn/tasks/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

// JSON bindings live next to the types they serialize so lookup finds them.

namespace gmnn::ad {
void to_json(nlohmann::json& j, OptimizerKind k) { j = to_string(k); }
void from_json(const nlohmann::json& j, OptimizerKind& k) { k = optimizer_kind_from_string(j.get<std::string>()); }
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OptimizerConfig, kind, lr, weight_decay, rho, beta1, beta2, eps)
}  // namespace gmnn::ad

namespace gmnn::models {
void to_json(nlohmann::json& j, ArchKind k) { j = to_string(k); }
void from_json(const nlohmann::json& j, ArchKind& k) { k = arch_kind_from_string(j.get<std::string>()); }
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ArchConfig, kind, layers, hidden, linear_head)
}  // namespace gmnn::models

namespace gmnn::em {
void to_json(nlohmann::json& j, StrategyKind k) { j = to_string(k); }
void from_json(const nlohmann::json& j, StrategyKind& k) { k = strategy_kind_from_string(j.get<std::string>()); }
void to_json(nlohmann::json& j, Expectation e) { j = to_string(e); }
void from_json(const nlohmann::json& j, Expectation& e) { e = expectation_from_string(j.get<std::string>()); }
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Strategy, kind, samples, tau)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FixedPointConfig, max_iterations, damping, tolerance, expectation, samples,
                                   max_combinations, seed)
}  // namespace gmnn::em

namespace gmnn::tasks {
void to_json(nlohmann::json& j, Metric m) { j = to_string(m); }
void from_json(const nlohmann::json& j, Metric& m) { m = metric_from_string(j.get<std::string>()); }
}  // namespace gmnn::tasks

namespace gmnn::em {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EMConfig, strategy, epochs_pretrain, epochs_p, epochs_q, max_iterations, patience,
                                   use_attrs_in_p, exclude_self_label, selection, seed, q_arch, p_arch, q_dropout,
                                   p_dropout, optimizer, metric)
}  // namespace gmnn::em

namespace gmnn::baselines {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LPConfig, alpha, iterations)
}  // namespace gmnn::baselines

namespace gmnn::tasks {

void to_json(nlohmann::json& j, Task t) { j = to_string(t); }
void from_json(const nlohmann::json& j, Task& t) { t = task_from_string(j.get<std::string>()); }
void to_json(nlohmann::json& j, Method m) { j = to_string(m); }
void from_json(const nlohmann::json& j, Method& m) { m = method_from_string(j.get<std::string>()); }
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LinkSpec, positive_threshold, negative_threshold, train, val)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ProbeConfig, epochs, lr, weight_decay)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TaskConfig, task, method, em, fixed_point, lp, link, probe, binarize_features,
                                   row_normalize_features)

std::string to_string(Task t) {
  switch (t) {
    case Task::Object: return "object";
    case Task::Link: return "link";
    case Task::Unsupervised: return "unsup";
  }
  return "?";
}

Task task_from_string(const std::string& name) {
  if (name == "object") return Task::Object;
  if (name == "link") return Task::Link;
  if (name == "unsup") return Task::Unsupervised;
  throw std::invalid_argument("unknown task '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Gmnn: return "gmnn";
    case Method::Gcn: return "gcn";
    case Method::LabelPropagation: return "lp";
    case Method::SelfTraining: return "self-train";
    case Method::GmnnNonAmortized: return "gmnn-nonamortized";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::Gmnn, Method::Gcn, Method::LabelPropagation, Method::SelfTraining,
                 Method::GmnnNonAmortized}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

void check_supported(Task t, Method m) {
  if (t == Task::Unsupervised && m != Method::Gmnn && m != Method::Gcn) {
    throw std::invalid_argument("method " + to_string(m) + " is not available for the unsup task");
  }
}

TaskConfig default_config(Task task, Method method, const std::string& dataset) {
  check_supported(task, method);
  TaskConfig cfg;
  cfg.task = task;
  cfg.method = method;
  auto& em = cfg.em;
  std::string lower = dataset;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  const bool pubmed = lower.find("pubmed") != std::string::npos;

  switch (task) {
    case Task::Object:
      break;
    case Task::Link:
      em.optimizer = {ad::OptimizerKind::Adam, 0.01, 0.0};
      em.q_arch.hidden = em.p_arch.hidden = 128;
      em.q_dropout = em.p_dropout = 0.0;
      em.epochs_p = em.epochs_q = 5;
      em.metric = Metric::F1;
      cfg.binarize_features = false;
      break;
    case Task::Unsupervised:
      em.optimizer = {ad::OptimizerKind::Adam, 0.1, 5e-4};
      em.q_arch = em.p_arch = {models::ArchKind::GraphConv, 2, pubmed ? 256u : 512u, true};
      em.epochs_pretrain = 200;
      em.max_iterations = 2;
      em.patience = 0;
      em.selection = false;
      em.strategy.kind = em::StrategyKind::MeanPool;
      break;
  }
  if (method == Method::Gcn) em.max_iterations = 0;
  if (method == Method::GmnnNonAmortized) em.exclude_self_label = true;
  return cfg;
}

nlohmann::json config_to_json(const TaskConfig& cfg) { return cfg; }

TaskConfig config_from_json(const nlohmann::json& doc) {
  try {
    return doc.get<TaskConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
}

namespace {

template <typename N>
N parse_number(const std::string& path, const std::string& text) {
  std::istringstream in(text);
  N v{};
  in >> v;
  if (!in || !in.eof() || (std::is_unsigned_v<N> && text.find('-') != std::string::npos)) {
    throw std::invalid_argument("option " + path + ": cannot parse '" + text + "'");
  }
  return v;
}

}  // namespace

void apply_override(TaskConfig& cfg, const std::string& path, const std::string& value) {
  nlohmann::json doc = cfg;
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw std::invalid_argument("unknown option '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  switch (node->type()) {
    case nlohmann::json::value_t::boolean:
      if (value != "true" && value != "false") {
        throw std::invalid_argument("option " + path + ": expected true or false, got '" + value + "'");
      }
      *node = value == "true";
      break;
    case nlohmann::json::value_t::number_unsigned:
      *node = parse_number<std::uint64_t>(path, value);
      break;
    case nlohmann::json::value_t::number_integer:
      *node = parse_number<std::int64_t>(path, value);
      break;
    case nlohmann::json::value_t::number_float:
      *node = parse_number<double>(path, value);
      break;
    case nlohmann::json::value_t::string:
      *node = value;
      break;
    default:
      throw std::invalid_argument("option " + path + " is a group, not a value");
  }
  TaskConfig updated = config_from_json(doc);
  check_supported(updated.task, updated.method);
  cfg = std::move(updated);
}

}  // namespace gmnn::tasks
