#include "gmnn/tasks/tasks.hpp"

#include "gmnn/graph/line_graph.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace gmnn::tasks {

using em::kMissing;
using T = Scalar;

std::vector<double> RunResult::per_seed() const {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.test);
  return out;
}

Aggregate RunResult::summary() const {
  const auto v = per_seed();
  return aggregate(v);
}

nlohmann::json RunResult::to_json() const {
  nlohmann::json seeds = nlohmann::json::array();
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    seeds.push_back(r.seed);
    nlohmann::json by_iteration = nlohmann::json::array();
    for (const auto& s : r.history.iterations) by_iteration.push_back(s.val_q);
    runs_json.push_back({{"seed", r.seed},
                         {"test", r.test},
                         {"val", r.val},
                         {"best_iteration", r.best_iteration},
                         {"val_by_iteration", by_iteration}});
  }
  const auto agg = summary();
  return {{"task", to_string(config.task)},
          {"method", to_string(config.method)},
          {"dataset", dataset},
          {"metric", to_string(config.em.metric)},
          {"config", config_to_json(config)},
          {"seeds", seeds},
          {"per_seed", per_seed()},
          {"mean", agg.mean},
          {"std", agg.std},
          {"runs", runs_json}};
}

std::string RunResult::histories_csv() const {
  std::ostringstream out;
  out << "seed,iteration,phase,epoch,loss,val_acc_q,val_acc_p,test_acc_q,test_acc_p\n";
  for (const auto& r : runs) {
    std::istringstream in(r.history.to_csv());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) out << r.seed << ',' << line << '\n';
  }
  return out.str();
}

std::vector<SeedResult> run_seeds(std::span<const std::uint64_t> seeds, std::size_t parallel,
                                  const std::function<SeedResult(std::uint64_t)>& fn) {
  if (seeds.empty()) throw std::invalid_argument("no seeds to run");
  std::vector<SeedResult> out(seeds.size());
  const std::size_t workers = std::clamp<std::size_t>(parallel, 1, seeds.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = fn(seeds[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < seeds.size();) {
        try {
          out[i] = fn(seeds[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

graph::Graph prepare_graph(const graph::Graph& g, const TaskConfig& cfg) {
  graph::Graph out = cfg.binarize_features ? graph::binarize_features(g) : g;
  if (cfg.row_normalize_features) out = graph::row_normalize_features(out);
  return out;
}

namespace {

SeedResult from_gmnn(std::uint64_t seed, em::GMNNResult<T> r) {
  return {seed, r.test_score, r.val_score, r.history.best_iteration, std::move(r.history)};
}

SeedResult classify(const graph::Graph& g, const em::Problem<T>& problem, const TaskConfig& cfg, std::uint64_t seed) {
  em::EMConfig em = cfg.em;
  em.seed = seed;
  em.metric = problem.metric;
  switch (cfg.method) {
    case Method::Gcn:
      em.max_iterations = 0;
      return from_gmnn(seed, em::train_gmnn(problem, em));
    case Method::Gmnn:
      return from_gmnn(seed, em::train_gmnn(problem, em));
    case Method::SelfTraining:
      return from_gmnn(seed, baselines::self_training(problem, em));
    case Method::GmnnNonAmortized: {
      em::FixedPointConfig fp = cfg.fixed_point;
      fp.seed = seed;
      auto r = em::train_nonamortized(problem, em, fp);
      return {seed, r.test_score, r.val_score, r.history.best_iteration, std::move(r.history)};
    }
    case Method::LabelPropagation: {
      const auto pred = baselines::label_propagation(g, cfg.lp);
      SeedResult r;
      r.seed = seed;
      r.val = problem.val.empty() ? kMissing : evaluate(problem.metric, pred, g.labels, problem.val);
      r.test = evaluate(problem.metric, pred, g.labels, problem.test);
      return r;
    }
  }
  throw std::logic_error("unhandled method");
}

}  // namespace

SeedResult object_classification_seed(const graph::Graph& g, const TaskConfig& cfg, std::uint64_t seed) {
  check_supported(cfg.task, cfg.method);
  const graph::Graph prepared = prepare_graph(g, cfg);
  return classify(prepared, em::make_problem<T>(prepared, cfg.em.metric), cfg, seed);
}

RunResult run_object_classification(const graph::Graph& g, const std::string& dataset, const TaskConfig& cfg,
                                    std::span<const std::uint64_t> seeds, std::size_t parallel) {
  check_supported(cfg.task, cfg.method);
  const graph::Graph prepared = prepare_graph(g, cfg);
  const auto problem = em::make_problem<T>(prepared, cfg.em.metric);
  RunResult out{cfg, dataset, {}};
  out.runs = run_seeds(seeds, parallel, [&](std::uint64_t s) { return classify(prepared, problem, cfg, s); });
  return out;
}

graph::Graph build_link_graph(std::size_t num_nodes, std::span<const graph::WeightedEdge> records,
                              const LinkSpec& spec) {
  if (!(spec.negative_threshold < spec.positive_threshold)) {
    throw std::invalid_argument("negative threshold must be below the positive threshold");
  }
  std::vector<graph::Edge> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) pairs.emplace_back(r.source, r.target);
  graph::Graph line = graph::build_line_graph(num_nodes, pairs);
  line.num_classes = 2;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].weight > spec.positive_threshold) line.labels[i] = 1;
    else if (records[i].weight < spec.negative_threshold) line.labels[i] = 0;
  }
  return line;
}

graph::Split sample_link_split(const graph::Graph& line, const LinkSpec& spec, std::uint64_t seed) {
  std::vector<graph::NodeId> labeled;
  for (graph::NodeId n = 0; n < line.num_nodes; ++n) {
    if (line.labels[n]) labeled.push_back(n);
  }
  if (labeled.size() <= spec.train + spec.val) {
    throw graph::DataError("link task needs more than " + std::to_string(spec.train + spec.val) +
                           " labeled links, found " + std::to_string(labeled.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  graph::Split split;
  const auto train_end = labeled.begin() + static_cast<std::ptrdiff_t>(spec.train);
  const auto val_end = train_end + static_cast<std::ptrdiff_t>(spec.val);
  split.train.assign(labeled.begin(), train_end);
  split.val.assign(train_end, val_end);
  split.test.assign(val_end, labeled.end());
  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

RunResult run_link_classification(std::size_t num_nodes, std::span<const graph::WeightedEdge> records,
                                  const std::string& dataset, const TaskConfig& cfg,
                                  std::span<const std::uint64_t> seeds, std::size_t parallel) {
  check_supported(cfg.task, cfg.method);
  const graph::Graph line = prepare_graph(build_link_graph(num_nodes, records, cfg.link), cfg);
  // Splits are checked up front so a short edge list fails before any training.
  for (auto s : seeds) sample_link_split(line, cfg.link, s);
  const auto base = em::make_problem<T>(line, cfg.em.metric);
  RunResult out{cfg, dataset, {}};
  out.runs = run_seeds(seeds, parallel, [&](std::uint64_t s) {
    graph::Graph g = line;
    g.split = sample_link_split(line, cfg.link, s);
    em::Problem<T> problem = base;
    problem.labeled = g.split.train;
    problem.unlabeled = graph::unlabeled_nodes(g);
    problem.observed.setZero();
    for (auto n : problem.labeled) problem.observed(static_cast<Eigen::Index>(n), *g.labels[n]) = T(1);
    problem.pretrain_targets = problem.observed;
    problem.pretrain_mask = problem.labeled;
    problem.val = g.split.val;
    problem.test = g.split.test;
    return classify(g, problem, cfg, s);
  });
  return out;
}

}  // namespace gmnn::tasks
