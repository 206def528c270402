#include "gmnn/tasks/tasks.hpp"

#include <numeric>

namespace gmnn::tasks {

template <typename U>
em::Problem<U> make_neighbor_problem(const graph::Graph& g) {
  em::Problem<U> p;
  p.num_nodes = g.num_nodes;
  p.num_classes = g.num_nodes;
  p.prop = models::make_propagation<U>(g);
  p.features = g.features.cast<U>();
  p.all.resize(g.num_nodes);
  std::iota(p.all.begin(), p.all.end(), graph::NodeId{0});
  p.unlabeled = p.all;
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  p.observed = ad::Matrix<U>::Zero(n, n);
  p.truth.assign(g.num_nodes, std::nullopt);
  p.pretrain_targets = ad::Matrix<U>::Zero(n, n);
  const auto neighbors = graph::neighbor_lists(g.num_nodes, g.edges);
  for (graph::NodeId v = 0; v < g.num_nodes; ++v) {
    const auto r = static_cast<Eigen::Index>(v);
    if (neighbors[v].empty()) {
      p.pretrain_targets(r, r) = U(1);
      continue;
    }
    const U w = U(1) / static_cast<U>(neighbors[v].size());
    for (auto u : neighbors[v]) p.pretrain_targets(r, static_cast<Eigen::Index>(u)) = w;
  }
  p.pretrain_mask = p.all;
  return p;
}

namespace {

template <typename U>
std::pair<double, double> probe(const ad::Matrix<U>& reps, const graph::Graph& g, const ProbeConfig& cfg,
                                std::uint64_t seed) {
  if (static_cast<std::size_t>(reps.rows()) != g.num_nodes) {
    throw ad::ShapeError("representations " + ad::shape_str(reps) + " for " + std::to_string(g.num_nodes) + " nodes");
  }
  if (g.split.train.empty() || g.split.test.empty()) throw std::invalid_argument("linear probe needs train and test nodes");
  Rng rng(seed);
  models::Network<U> net({{models::LayerKind::Linear, static_cast<std::size_t>(reps.cols()), g.num_classes,
                           models::Activation::None}},
                         0.0, rng);
  ad::Optimizer<U> opt({ad::OptimizerKind::Adam, cfg.lr, cfg.weight_decay});
  const auto eye = ad::SparseMatrix<U>::identity(g.num_nodes);
  ad::Matrix<U> targets = ad::Matrix<U>::Zero(reps.rows(), static_cast<Eigen::Index>(g.num_classes));
  for (auto v : g.split.train) targets(static_cast<Eigen::Index>(v), *g.labels[v]) = U(1);
  const models::NetworkInput<U> input{&reps, nullptr};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    ad::Tape<U> tape;
    const auto logits = net.forward(tape, eye, eye, input, true, rng);
    const auto loss = ad::masked_cross_entropy(tape, logits, targets, g.split.train);
    ad::Optimizer<U>::zero_grad(net.params());
    tape.backward(loss);
    opt.step(net.params());
  }
  const auto pred = models::predict(net.infer(eye, eye, input));
  const double val = g.split.val.empty() ? em::kMissing : accuracy(pred, g.labels, g.split.val);
  return {val, accuracy(pred, g.labels, g.split.test)};
}

}  // namespace

template <typename U>
double linear_probe(const ad::Matrix<U>& reps, const graph::Graph& g, const ProbeConfig& cfg, std::uint64_t seed) {
  return probe(reps, g, cfg, seed).second;
}

namespace {

SeedResult unsup_on(const graph::Graph& g, const em::Problem<Scalar>& problem, const TaskConfig& cfg,
                    std::uint64_t seed) {
  em::EMConfig em = cfg.em;
  em.seed = seed;
  if (cfg.method == Method::Gcn) em.max_iterations = 0;
  auto r = em::train_gmnn(problem, em);
  const auto reps = models::extract_representations(r.q.net, problem.prop, problem.features);
  const auto [val, test] = probe(reps, g, cfg.probe, seed);
  return {seed, test, val, r.history.best_iteration, std::move(r.history)};
}

}  // namespace

SeedResult unsupervised_seed(const graph::Graph& g, const TaskConfig& cfg, std::uint64_t seed) {
  check_supported(cfg.task, cfg.method);
  const graph::Graph prepared = prepare_graph(g, cfg);
  return unsup_on(prepared, make_neighbor_problem<Scalar>(prepared), cfg, seed);
}

RunResult run_unsupervised(const graph::Graph& g, const std::string& dataset, const TaskConfig& cfg,
                           std::span<const std::uint64_t> seeds, std::size_t parallel) {
  check_supported(cfg.task, cfg.method);
  const graph::Graph prepared = prepare_graph(g, cfg);
  const auto problem = make_neighbor_problem<Scalar>(prepared);
  RunResult out{cfg, dataset, {}};
  out.runs = run_seeds(seeds, parallel, [&](std::uint64_t s) { return unsup_on(prepared, problem, cfg, s); });
  return out;
}

template em::Problem<float> make_neighbor_problem<float>(const graph::Graph&);
template em::Problem<double> make_neighbor_problem<double>(const graph::Graph&);
template double linear_probe<float>(const ad::Matrix<float>&, const graph::Graph&, const ProbeConfig&, std::uint64_t);
template double linear_probe<double>(const ad::Matrix<double>&, const graph::Graph&, const ProbeConfig&,
                                      std::uint64_t);

}  // namespace gmnn::tasks
