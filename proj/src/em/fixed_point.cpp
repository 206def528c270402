#include "gmnn/em/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <tuple>

namespace gmnn::em {

std::string to_string(Expectation e) { return e == Expectation::Exact ? "exact" : "sampled"; }

Expectation expectation_from_string(const std::string& name) {
  if (name == "exact") return Expectation::Exact;
  if (name == "sampled") return Expectation::Sampled;
  throw std::invalid_argument("unknown expectation '" + name + "'");
}

void validate(const FixedPointConfig& cfg) {
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw std::invalid_argument("damping must be in (0, 1]");
  if (cfg.samples == 0) throw std::invalid_argument("fixed-point sample count must be at least 1");
  if (cfg.max_iterations == 0) throw std::invalid_argument("fixed-point iterations must be at least 1");
}

namespace {

template <typename T>
ad::RowVector<T> log_softmax_row(const ad::RowVector<T>& z) {
  const T m = z.maxCoeff();
  const T lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

/// Label features the conditional sees: one-hots on L, scratch rows for U.
/// Rows of the current node and its receptive field are overwritten in place
/// and restored by the caller.
template <typename T>
struct Workspace {
  Matrix<T> labels;
  std::vector<bool> pinned;
};

template <typename T>
Workspace<T> make_workspace(const Problem<T>& problem) {
  Workspace<T> w{problem.observed, std::vector<bool>(problem.num_nodes, false)};
  for (NodeId n : problem.labeled) w.pinned[n] = true;
  return w;
}

template <typename T>
ad::RowVector<T> target(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table, NodeId node,
                        const FixedPointConfig& cfg, Rng& rng, Workspace<T>& ws) {
  const auto k = static_cast<Eigen::Index>(problem.num_classes);
  const auto* attrs = p.use_attrs ? &problem.features : nullptr;
  const auto field = p.net.receptive_field(p.first_adj(problem.prop), problem.prop.with_self_loops, node);
  std::vector<NodeId> free;
  for (NodeId m : field) {
    if (m != node && !ws.pinned[m]) free.push_back(m);
  }
  const ad::RowVector<T> saved = ws.labels.row(static_cast<Eigen::Index>(node));
  ws.labels.row(static_cast<Eigen::Index>(node)).setZero();

  auto set = [&](NodeId m, Eigen::Index c) {
    ws.labels.row(static_cast<Eigen::Index>(m)).setZero();
    ws.labels(static_cast<Eigen::Index>(m), c) = T(1);
  };
  auto conditional = [&] {
    return log_softmax_row<T>(p.local_logits(problem.prop, ws.labels, attrs, node));
  };

  ad::RowVector<T> acc = ad::RowVector<T>::Zero(k);
  double combos = 1;
  for (std::size_t i = 0; i < free.size() && combos <= static_cast<double>(cfg.max_combinations); ++i) combos *= static_cast<double>(k);
  if (cfg.expectation == Expectation::Exact && combos <= static_cast<double>(cfg.max_combinations)) {
    std::vector<Eigen::Index> y(free.size(), 0);
    for (;;) {
      T weight = 1;
      for (std::size_t i = 0; i < free.size(); ++i) {
        set(free[i], y[i]);
        weight *= table(static_cast<Eigen::Index>(free[i]), y[i]);
      }
      if (weight > T(0)) acc += weight * conditional();
      std::size_t i = 0;
      while (i < y.size() && ++y[i] == k) y[i++] = 0;
      if (i == y.size()) break;
    }
  } else {
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      for (NodeId m : free) {
        const auto r = static_cast<Eigen::Index>(m);
        std::discrete_distribution<Eigen::Index> draw(table.row(r).data(), table.row(r).data() + k);
        set(m, draw(rng));
      }
      acc += conditional();
    }
    acc /= static_cast<T>(cfg.samples);
  }

  for (NodeId m : free) ws.labels.row(static_cast<Eigen::Index>(m)).setZero();
  ws.labels.row(static_cast<Eigen::Index>(node)) = saved;
  return log_softmax_row<T>(acc);
}

template <typename T>
void check_table(const Problem<T>& problem, const Matrix<T>& table) {
  if (static_cast<std::size_t>(table.rows()) != problem.num_nodes ||
      static_cast<std::size_t>(table.cols()) != problem.num_classes) {
    throw ad::ShapeError("fixed-point table " + ad::shape_str(table) + " for " + std::to_string(problem.num_nodes) +
                         " nodes and " + std::to_string(problem.num_classes) + " classes");
  }
}

template <typename T>
double residual_of(const Matrix<T>& table, const Matrix<T>& log_targets, std::span<const NodeId> nodes) {
  double r = 0;
  for (NodeId n : nodes) {
    const auto row = static_cast<Eigen::Index>(n);
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double d = std::log(static_cast<double>(table(row, c))) - static_cast<double>(log_targets(row, c));
      r = std::max(r, std::abs(d));
    }
  }
  return r;
}

template <typename T>
Matrix<T> all_targets(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table,
                      const FixedPointConfig& cfg, Rng& rng, Workspace<T>& ws) {
  Matrix<T> out = Matrix<T>::Zero(table.rows(), table.cols());
  for (NodeId n : problem.unlabeled) out.row(static_cast<Eigen::Index>(n)) = target(problem, p, table, n, cfg, rng, ws);
  return out;
}

template <typename T>
std::pair<double, double> score_table(const Problem<T>& problem, const Matrix<T>& table) {
  if (!problem.evaluable()) return {kMissing, kMissing};
  const auto pred = models::predict(table);
  return {tasks::evaluate(problem.metric, pred, problem.truth, problem.val),
          problem.test.empty() ? kMissing : tasks::evaluate(problem.metric, pred, problem.truth, problem.test)};
}

}  // namespace

template <typename T>
ad::RowVector<T> mean_field_target(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table,
                                   NodeId node, const FixedPointConfig& cfg, Rng& rng) {
  check_table(problem, table);
  if (node >= problem.num_nodes) throw std::out_of_range("node " + std::to_string(node) + " out of range");
  auto ws = make_workspace(problem);
  return target(problem, p, table, node, cfg, rng, ws);
}

template <typename T>
double fixed_point_residual(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table,
                            const FixedPointConfig& cfg) {
  check_table(problem, table);
  Rng rng(cfg.seed);
  auto ws = make_workspace(problem);
  return residual_of(table, all_targets(problem, p, table, cfg, rng, ws), problem.unlabeled);
}

template <typename T>
FixedPointResult<T> fixed_point_inference(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& init,
                                          const FixedPointConfig& cfg) {
  validate(cfg);
  check_table(problem, init);
  FixedPointResult<T> out{init, 0, 0, false};
  for (NodeId n : problem.labeled) out.q.row(static_cast<Eigen::Index>(n)) = problem.observed.row(static_cast<Eigen::Index>(n));
  Rng rng(cfg.seed);
  auto ws = make_workspace(problem);
  const T d = static_cast<T>(cfg.damping);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const Matrix<T> log_targets = all_targets(problem, p, out.q, cfg, rng, ws);
    out.residual = residual_of(out.q, log_targets, problem.unlabeled);
    out.iterations = it + 1;
    for (NodeId n : problem.unlabeled) {
      const auto r = static_cast<Eigen::Index>(n);
      out.q.row(r) = d * log_targets.row(r).array().exp().matrix() + (T(1) - d) * out.q.row(r);
    }
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

template <typename T>
NonAmortizedResult<T> train_nonamortized(const Problem<T>& problem, const EMConfig& cfg, const FixedPointConfig& fp) {
  validate(cfg);
  validate(fp);
  RngStreams rngs(cfg.seed);
  NonAmortizedResult<T> result;
  result.table = Matrix<T>::Constant(static_cast<Eigen::Index>(problem.num_nodes),
                                     static_cast<Eigen::Index>(problem.num_classes),
                                     T(1) / static_cast<T>(problem.num_classes));
  for (NodeId n : problem.labeled) {
    result.table.row(static_cast<Eigen::Index>(n)) = problem.observed.row(static_cast<Eigen::Index>(n));
  }
  auto& history = result.history;
  auto [best_val, best_test] = score_table(problem, result.table);
  history.iterations.push_back({0, best_val, best_test});
  Matrix<T> best = result.table;
  result.p = make_p_trainer(problem, cfg, rngs.init_p);
  std::size_t stale = 0;
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    const Matrix<T> log_table = result.table.array().max(std::numeric_limits<T>::min()).log().matrix();
    const auto samples = sample_labels(log_table, problem, cfg.strategy, rngs.sampling);
    m_step(problem, *result.p, samples, cfg, rngs.dropout, history, it);

    FixedPointConfig step = fp;
    step.seed = rngs.sampling();
    auto inferred = fixed_point_inference(problem, result.p->net, result.table, step);
    result.table = std::move(inferred.q);

    IterationSummary summary{it};
    std::tie(summary.val_q, summary.test_q) = score_table(problem, result.table);
    HistoryRow row{it, "fixed-point", inferred.iterations - 1, inferred.residual, summary.val_q, kMissing,
                   summary.test_q, kMissing};
    history.rows.push_back(row);
    history.iterations.push_back(summary);
    if (!problem.evaluable()) continue;
    if (summary.val_q > best_val) {
      best_val = summary.val_q;
      best = result.table;
      history.best_iteration = it;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  if (cfg.selection && problem.evaluable()) result.table = best;
  result.predictions = models::predict(result.table);
  std::tie(result.val_score, result.test_score) = score_table(problem, result.table);
  return result;
}

#define GMNN_FP_INSTANTIATE(T)                                                                                    \
  template ad::RowVector<T> mean_field_target<T>(const Problem<T>&, const models::PNet<T>&, const Matrix<T>&,    \
                                                 NodeId, const FixedPointConfig&, Rng&);                         \
  template double fixed_point_residual<T>(const Problem<T>&, const models::PNet<T>&, const Matrix<T>&,           \
                                          const FixedPointConfig&);                                              \
  template FixedPointResult<T> fixed_point_inference<T>(const Problem<T>&, const models::PNet<T>&,               \
                                                        const Matrix<T>&, const FixedPointConfig&);              \
  template NonAmortizedResult<T> train_nonamortized<T>(const Problem<T>&, const EMConfig&, const FixedPointConfig&);

GMNN_FP_INSTANTIATE(float)
GMNN_FP_INSTANTIATE(double)

}  // namespace gmnn::em
