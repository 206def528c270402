#include "gmnn/em/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gmnn::em {

using ad::Var;

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::SingleSample: return "single";
    case StrategyKind::MultiSample: return "multi";
    case StrategyKind::Annealing: return "annealing";
    case StrategyKind::MaxPool: return "max";
    case StrategyKind::MeanPool: return "mean";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  if (name == "single") return StrategyKind::SingleSample;
  if (name == "multi") return StrategyKind::MultiSample;
  if (name == "annealing") return StrategyKind::Annealing;
  if (name == "max") return StrategyKind::MaxPool;
  if (name == "mean") return StrategyKind::MeanPool;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

void validate(const EMConfig& cfg) {
  if (!(cfg.strategy.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (cfg.strategy.samples == 0) throw std::invalid_argument("sample count must be at least 1");
  if (cfg.epochs_pretrain == 0 || cfg.epochs_p == 0 || cfg.epochs_q == 0) {
    throw std::invalid_argument("epoch counts must be at least 1");
  }
  ad::check_dropout_rate(cfg.q_dropout);
  ad::check_dropout_rate(cfg.p_dropout);
  if (!(cfg.optimizer.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.optimizer.weight_decay < 0.0) throw std::invalid_argument("weight decay must be nonnegative");
}

namespace {

Rng stream(std::uint64_t seed, std::uint32_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), k};
  return Rng(seq);
}

}  // namespace

RngStreams::RngStreams(std::uint64_t seed)
    : init_q(stream(seed, 1)), init_p(stream(seed, 2)), dropout(stream(seed, 3)), sampling(stream(seed, 4)) {}

namespace {

void put(std::ostringstream& out, double v) {
  out << ',';
  if (std::isnan(v)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out << buf;
}

}  // namespace

std::string EMHistory::to_csv() const {
  std::ostringstream out;
  out << "iteration,phase,epoch,loss,val_acc_q,val_acc_p,test_acc_q,test_acc_p\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.phase << ',' << r.epoch;
    put(out, r.loss);
    put(out, r.val_acc_q);
    put(out, r.val_acc_p);
    put(out, r.test_acc_q);
    put(out, r.test_acc_p);
    out << '\n';
  }
  return out.str();
}

template <typename T>
Problem<T> make_problem(const graph::Graph& g, tasks::Metric metric) {
  Problem<T> p;
  p.num_nodes = g.num_nodes;
  p.num_classes = g.num_classes;
  p.prop = models::make_propagation<T>(g);
  p.features = g.features.cast<T>();
  p.labeled = g.split.train;
  std::sort(p.labeled.begin(), p.labeled.end());
  p.unlabeled = graph::unlabeled_nodes(g);
  p.all.resize(g.num_nodes);
  for (NodeId n = 0; n < g.num_nodes; ++n) p.all[n] = n;
  p.observed = Matrix<T>::Zero(static_cast<Eigen::Index>(g.num_nodes), static_cast<Eigen::Index>(g.num_classes));
  for (NodeId n : p.labeled) p.observed(static_cast<Eigen::Index>(n), *g.labels[n]) = T(1);
  p.truth = g.labels;
  p.pretrain_targets = p.observed;
  p.pretrain_mask = p.labeled;
  p.val = g.split.val;
  p.test = g.split.test;
  p.metric = metric;
  return p;
}

template <typename T>
Snapshot<T> take_snapshot(const models::Network<T>& net, const ad::Optimizer<T>& opt) {
  Snapshot<T> s{{}, opt};
  for (const auto& p : net.params()) s.values.push_back(p.value);
  return s;
}

template <typename T>
void restore_snapshot(models::Network<T>& net, ad::Optimizer<T>& opt, const Snapshot<T>& s) {
  auto& params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = s.values[i];
  opt = s.optimizer;
}

template <typename T>
QTrainer<T> make_q_trainer(const Problem<T>& problem, const EMConfig& cfg, Rng& init_rng) {
  return {models::make_qnet<T>(cfg.q_arch, problem.features.cols(), problem.num_classes, cfg.q_dropout, init_rng),
          ad::Optimizer<T>(cfg.optimizer)};
}

template <typename T>
PTrainer<T> make_p_trainer(const Problem<T>& problem, const EMConfig& cfg, Rng& init_rng) {
  return {models::make_pnet<T>(cfg.p_arch, problem.num_classes, problem.features.cols(), cfg.use_attrs_in_p,
                               cfg.exclude_self_label, cfg.p_dropout, init_rng),
          ad::Optimizer<T>(cfg.optimizer)};
}

namespace {

template <typename T>
std::pair<double, double> score(const Problem<T>& problem, const Matrix<T>& logits) {
  if (!problem.evaluable()) return {kMissing, kMissing};
  const auto pred = models::predict(logits);
  const double val = tasks::evaluate(problem.metric, pred, problem.truth, problem.val);
  const double test = problem.test.empty() ? kMissing : tasks::evaluate(problem.metric, pred, problem.truth, problem.test);
  return {val, test};
}

template <typename T>
const ad::SparseMatrix<T>* p_attrs(const Problem<T>& problem, const models::PNet<T>& p) {
  return p.use_attrs ? &problem.features : nullptr;
}

template <typename T>
std::vector<Matrix<T>> label_matrices(const Problem<T>& problem,
                                      std::span<const std::vector<graph::LabelState>> samples) {
  if (samples.empty()) throw std::invalid_argument("no label samples");
  std::vector<Matrix<T>> out;
  for (const auto& states : samples) {
    if (states.size() != problem.num_nodes) throw std::invalid_argument("label sample size does not match graph");
    for (NodeId n = 0; n < states.size(); ++n) {
      if (graph::is_unset(states[n])) throw std::invalid_argument("node " + std::to_string(n) + " has no label state");
    }
    out.push_back(graph::make_label_features<T>(states, problem.num_classes));
  }
  return out;
}

}  // namespace

template <typename T>
std::pair<double, double> evaluate_q(const Problem<T>& problem, const models::QNet<T>& q) {
  if (!problem.evaluable()) return {kMissing, kMissing};
  return score(problem, q.infer(problem.prop, problem.features));
}

template <typename T>
double fit_q(const Problem<T>& problem, QTrainer<T>& q, std::span<const Objective<T>> terms, std::size_t epochs,
             bool selection, Rng& dropout_rng, EMHistory& history, std::size_t iteration, const std::string& phase) {
  bool any = false;
  for (const auto& t : terms) any = any || !t.mask.empty();
  if (!any) throw std::invalid_argument("q objective has no supervised nodes");
  double best = -std::numeric_limits<double>::infinity();
  double last = kMissing;
  std::optional<Snapshot<T>> best_state;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    ad::Tape<T> tape;
    const Var logits = q.net.forward(tape, problem.prop, problem.features, true, dropout_rng);
    std::optional<Var> loss;
    for (const auto& t : terms) {
      if (t.mask.empty()) continue;
      const Var term = ad::masked_cross_entropy(tape, logits, *t.targets, t.mask);
      loss = loss ? ad::add(tape, *loss, term) : term;
    }
    ad::Optimizer<T>::zero_grad(q.net.net.params());
    tape.backward(*loss);
    q.opt.step(q.net.net.params());

    HistoryRow row{iteration, phase, epoch, static_cast<double>(tape.value(*loss)(0, 0))};
    if (problem.evaluable()) {
      std::tie(row.val_acc_q, row.test_acc_q) = evaluate_q(problem, q.net);
      last = row.val_acc_q;
      if (selection && row.val_acc_q > best) {
        best = row.val_acc_q;
        best_state = take_snapshot(q.net.net, q.opt);
      }
    }
    history.rows.push_back(std::move(row));
  }
  if (selection && best_state) {
    restore_snapshot(q.net.net, q.opt, *best_state);
    return best;
  }
  return last;
}

template <typename T>
double pretrain_q(const Problem<T>& problem, QTrainer<T>& q, const EMConfig& cfg, Rng& dropout_rng,
                  EMHistory& history) {
  if (problem.pretrain_mask.empty()) throw std::invalid_argument("pre-training needs labeled nodes");
  const Objective<T> terms[] = {{&problem.pretrain_targets, problem.pretrain_mask}};
  return fit_q<T>(problem, q, terms, cfg.epochs_pretrain, cfg.selection, dropout_rng, history, 0, "pretrain");
}

template <typename T>
std::vector<std::vector<graph::LabelState>> sample_labels(const Matrix<T>& q_logits, const Problem<T>& problem,
                                                          const Strategy& strategy, Rng& rng) {
  if (static_cast<std::size_t>(q_logits.rows()) != problem.num_nodes ||
      static_cast<std::size_t>(q_logits.cols()) != problem.num_classes) {
    throw ad::ShapeError("sample_labels: logits " + ad::shape_str(q_logits) + " for " +
                         std::to_string(problem.num_nodes) + " nodes and " + std::to_string(problem.num_classes) +
                         " classes");
  }
  const T temperature = strategy.kind == StrategyKind::Annealing ? static_cast<T>(strategy.tau) : T(1);
  const Matrix<T> probs = ad::softmax_rows<T>(q_logits, temperature);
  std::vector<bool> pinned(problem.num_nodes, false);
  for (NodeId n : problem.labeled) pinned[n] = true;
  const auto k = static_cast<std::size_t>(probs.cols());

  std::vector<std::vector<graph::LabelState>> out(strategy.draws());
  for (auto& states : out) {
    states.resize(problem.num_nodes);
    for (NodeId n = 0; n < problem.num_nodes; ++n) {
      const auto r = static_cast<Eigen::Index>(n);
      if (pinned[n]) {
        states[n] = graph::Observed{*problem.truth[n]};
        continue;
      }
      switch (strategy.kind) {
        case StrategyKind::MaxPool:
          states[n] = graph::Sampled{static_cast<int>(ad::argmax_row(q_logits.row(r)))};
          break;
        case StrategyKind::MeanPool: {
          std::vector<double> row(k);
          for (std::size_t c = 0; c < k; ++c) row[c] = static_cast<double>(probs(r, static_cast<Eigen::Index>(c)));
          states[n] = graph::Soft{std::move(row)};
          break;
        }
        default: {
          std::discrete_distribution<int> draw(probs.row(r).data(), probs.row(r).data() + k);
          states[n] = graph::Sampled{draw(rng)};
        }
      }
    }
  }
  return out;
}

template <typename T>
double m_step_objective(const Problem<T>& problem, const models::PNet<T>& p,
                        std::span<const std::vector<graph::LabelState>> samples) {
  const auto labels = label_matrices(problem, samples);
  double total = 0;
  for (const auto& l : labels) {
    ad::Tape<T> tape;
    const Var logits = tape.constant(p.infer(problem.prop, l, p_attrs(problem, p)));
    total += static_cast<double>(tape.value(ad::masked_cross_entropy(tape, logits, l, problem.all))(0, 0));
  }
  return total / static_cast<double>(labels.size());
}

template <typename T>
void m_step(const Problem<T>& problem, PTrainer<T>& p, std::span<const std::vector<graph::LabelState>> samples,
            const EMConfig& cfg, Rng& dropout_rng, EMHistory& history, std::size_t iteration) {
  const auto labels = label_matrices(problem, samples);
  const T inv = T(1) / static_cast<T>(labels.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs_p; ++epoch) {
    ad::Tape<T> tape;
    std::optional<Var> total;
    for (const auto& l : labels) {
      const Var logits = p.net.forward(tape, problem.prop, l, p_attrs(problem, p.net), true, dropout_rng);
      const Var term = ad::masked_cross_entropy(tape, logits, l, problem.all);
      total = total ? ad::add(tape, *total, term) : term;
    }
    const Var loss = labels.size() == 1 ? *total : ad::scale(tape, *total, inv);
    ad::Optimizer<T>::zero_grad(p.net.net.params());
    tape.backward(loss);
    p.opt.step(p.net.net.params());

    HistoryRow row{iteration, "m", epoch, static_cast<double>(tape.value(loss)(0, 0))};
    if (problem.evaluable()) {
      std::tie(row.val_acc_p, row.test_acc_p) =
          score(problem, p.net.infer(problem.prop, labels.front(), p_attrs(problem, p.net)));
    }
    history.rows.push_back(std::move(row));
  }
}

template <typename T>
Matrix<T> e_step_targets(const Problem<T>& problem, const models::PNet<T>& p,
                         std::span<const std::vector<graph::LabelState>> samples) {
  const auto labels = label_matrices(problem, samples);
  Matrix<T> targets = Matrix<T>::Zero(static_cast<Eigen::Index>(problem.num_nodes),
                                      static_cast<Eigen::Index>(problem.num_classes));
  for (const auto& l : labels) targets += ad::softmax_rows<T>(p.infer(problem.prop, l, p_attrs(problem, p)));
  if (labels.size() > 1) targets /= static_cast<T>(labels.size());
  for (NodeId n : problem.labeled) targets.row(static_cast<Eigen::Index>(n)) = problem.observed.row(static_cast<Eigen::Index>(n));
  return targets;
}

template <typename T>
double e_step(const Problem<T>& problem, QTrainer<T>& q, const models::PNet<T>& p,
              std::span<const std::vector<graph::LabelState>> samples, const EMConfig& cfg, Rng& dropout_rng,
              EMHistory& history, std::size_t iteration) {
  const Matrix<T> targets = e_step_targets(problem, p, samples);
  const Objective<T> terms[] = {{&targets, problem.unlabeled}, {&targets, problem.labeled}};
  return fit_q<T>(problem, q, terms, cfg.epochs_q, cfg.selection, dropout_rng, history, iteration, "e");
}

template <typename T>
GMNNResult<T> finish_result(const Problem<T>& problem, QTrainer<T> q, EMHistory history) {
  GMNNResult<T> r{std::move(q), std::nullopt, std::move(history), {}, {}, kMissing, kMissing};
  r.logits = r.q.net.infer(problem.prop, problem.features);
  r.predictions = models::predict(r.logits);
  std::tie(r.val_score, r.test_score) = score(problem, r.logits);
  return r;
}

template <typename T>
GMNNResult<T> run_outer_loop(const Problem<T>& problem, const EMConfig& cfg, QTrainer<T> q, RngStreams& rngs,
                             const IterationFn<T>& iterate) {
  EMHistory history;
  pretrain_q(problem, q, cfg, rngs.dropout, history);
  auto [best_val, test] = evaluate_q(problem, q.net);
  history.iterations.push_back({0, best_val, test});
  Snapshot<T> best = take_snapshot(q.net.net, q.opt);
  std::size_t stale = 0;
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    iterate(q, it, history);
    IterationSummary summary{it};
    std::tie(summary.val_q, summary.test_q) = evaluate_q(problem, q.net);
    for (auto r = history.rows.rbegin(); r != history.rows.rend() && r->iteration == it; ++r) {
      if (r->phase == "m") {
        summary.val_p = r->val_acc_p;
        summary.test_p = r->test_acc_p;
        break;
      }
    }
    history.iterations.push_back(summary);
    if (!problem.evaluable()) continue;
    if (summary.val_q > best_val) {
      best_val = summary.val_q;
      best = take_snapshot(q.net.net, q.opt);
      history.best_iteration = it;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  if (cfg.selection && problem.evaluable()) restore_snapshot(q.net.net, q.opt, best);
  return finish_result(problem, std::move(q), std::move(history));
}

template <typename T>
GMNNResult<T> train_gmnn(const Problem<T>& problem, const EMConfig& cfg) {
  validate(cfg);
  RngStreams rngs(cfg.seed);
  QTrainer<T> q = make_q_trainer(problem, cfg, rngs.init_q);
  std::optional<PTrainer<T>> p;
  const IterationFn<T> iterate = [&](QTrainer<T>& qt, std::size_t it, EMHistory& history) {
    if (!p) p = make_p_trainer(problem, cfg, rngs.init_p);
    const auto samples =
        sample_labels(qt.net.infer(problem.prop, problem.features), problem, cfg.strategy, rngs.sampling);
    m_step(problem, *p, samples, cfg, rngs.dropout, history, it);
    return e_step(problem, qt, p->net, samples, cfg, rngs.dropout, history, it);
  };
  GMNNResult<T> result = run_outer_loop(problem, cfg, std::move(q), rngs, iterate);
  result.p = std::move(p);
  return result;
}

#define GMNN_EM_INSTANTIATE(T)                                                                                    \
  template Problem<T> make_problem<T>(const graph::Graph&, tasks::Metric);                                       \
  template Snapshot<T> take_snapshot<T>(const models::Network<T>&, const ad::Optimizer<T>&);                     \
  template void restore_snapshot<T>(models::Network<T>&, ad::Optimizer<T>&, const Snapshot<T>&);                 \
  template QTrainer<T> make_q_trainer<T>(const Problem<T>&, const EMConfig&, Rng&);                              \
  template PTrainer<T> make_p_trainer<T>(const Problem<T>&, const EMConfig&, Rng&);                              \
  template std::pair<double, double> evaluate_q<T>(const Problem<T>&, const models::QNet<T>&);                   \
  template double fit_q<T>(const Problem<T>&, QTrainer<T>&, std::span<const Objective<T>>, std::size_t, bool,    \
                           Rng&, EMHistory&, std::size_t, const std::string&);                                   \
  template double pretrain_q<T>(const Problem<T>&, QTrainer<T>&, const EMConfig&, Rng&, EMHistory&);             \
  template std::vector<std::vector<graph::LabelState>> sample_labels<T>(const Matrix<T>&, const Problem<T>&,     \
                                                                        const Strategy&, Rng&);                  \
  template double m_step_objective<T>(const Problem<T>&, const models::PNet<T>&,                                 \
                                      std::span<const std::vector<graph::LabelState>>);                          \
  template void m_step<T>(const Problem<T>&, PTrainer<T>&, std::span<const std::vector<graph::LabelState>>,      \
                          const EMConfig&, Rng&, EMHistory&, std::size_t);                                       \
  template Matrix<T> e_step_targets<T>(const Problem<T>&, const models::PNet<T>&,                                \
                                       std::span<const std::vector<graph::LabelState>>);                         \
  template double e_step<T>(const Problem<T>&, QTrainer<T>&, const models::PNet<T>&,                             \
                            std::span<const std::vector<graph::LabelState>>, const EMConfig&, Rng&, EMHistory&,  \
                            std::size_t);                                                                        \
  template GMNNResult<T> finish_result<T>(const Problem<T>&, QTrainer<T>, EMHistory);                           \
  template GMNNResult<T> run_outer_loop<T>(const Problem<T>&, const EMConfig&, QTrainer<T>, RngStreams&,         \
                                           const IterationFn<T>&);                                               \
  template GMNNResult<T> train_gmnn<T>(const Problem<T>&, const EMConfig&);

GMNN_EM_INSTANTIATE(float)
GMNN_EM_INSTANTIATE(double)

}  // namespace gmnn::em
