#pragma once

#include "gmnn/autodiff/optimizer.hpp"
#include "gmnn/graph/label_state.hpp"
#include "gmnn/models/models.hpp"
#include "gmnn/tasks/metrics.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gmnn::em {

using graph::NodeId;
using models::Matrix;

enum class StrategyKind { SingleSample, MultiSample, Annealing, MaxPool, MeanPool };

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

/// How q's predictions become the label inputs of p.
struct Strategy {
  StrategyKind kind = StrategyKind::Annealing;
  /// Draws per M-step for MultiSample.
  std::size_t samples = 10;
  /// Sampling temperature for Annealing: draws come from softmax(logits / tau).
  double tau = 0.1;

  std::size_t draws() const { return kind == StrategyKind::MultiSample ? samples : 1; }
};

struct EMConfig {
  Strategy strategy;
  std::size_t epochs_pretrain = 100;
  std::size_t epochs_p = 100;
  std::size_t epochs_q = 100;
  std::size_t max_iterations = 10;
  /// EM iterations without a new best validation score before stopping; 0 never stops early.
  std::size_t patience = 1;
  bool use_attrs_in_p = false;
  bool exclude_self_label = false;
  /// Restore the best-validation q at the end of every phase and of the run.
  bool selection = true;
  std::uint64_t seed = 0;
  models::ArchConfig q_arch;
  models::ArchConfig p_arch;
  double q_dropout = 0.5;
  double p_dropout = 0.5;
  ad::OptimizerConfig optimizer;
  tasks::Metric metric = tasks::Metric::Accuracy;
};

/// Throws std::invalid_argument for a non-positive tau, zero counts or bad dropout.
void validate(const EMConfig& cfg);

/// Everything the trainer needs about one graph, converted to precision T.
template <typename T>
struct Problem {
  std::size_t num_nodes = 0;
  std::size_t num_classes = 0;
  models::Propagation<T> prop;
  ad::SparseMatrix<T> features;
  /// Ground truth known during training (L); empty in the unsupervised setting.
  std::vector<NodeId> labeled;
  /// V \ L, ascending.
  std::vector<NodeId> unlabeled;
  std::vector<NodeId> all;
  /// n x K; one-hot rows for L, zero elsewhere.
  Matrix<T> observed;
  /// Labels for evaluation and for pinning L (only entries in L are used for pinning).
  std::vector<std::optional<int>> truth;
  /// Supervised pre-training targets and rows.
  Matrix<T> pretrain_targets;
  std::vector<NodeId> pretrain_mask;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
  tasks::Metric metric = tasks::Metric::Accuracy;

  bool evaluable() const { return !val.empty(); }
};

/// Classification problem over g's train split, with val/test evaluation.
template <typename T>
Problem<T> make_problem(const graph::Graph& g, tasks::Metric metric = tasks::Metric::Accuracy);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct HistoryRow {
  std::size_t iteration = 0;
  /// "pretrain", "m", "e", "self-train" or "fixed-point".
  std::string phase;
  std::size_t epoch = 0;
  double loss = kMissing;
  double val_acc_q = kMissing;
  double val_acc_p = kMissing;
  double test_acc_q = kMissing;
  double test_acc_p = kMissing;
};

struct IterationSummary {
  std::size_t iteration = 0;
  double val_q = kMissing;
  double test_q = kMissing;
  double val_p = kMissing;
  double test_p = kMissing;
};

struct EMHistory {
  std::vector<HistoryRow> rows;
  /// Iteration 0 is pre-training.
  std::vector<IterationSummary> iterations;
  std::size_t best_iteration = 0;

  /// Columns: iteration,phase,epoch,loss,val_acc_q,val_acc_p,test_acc_q,test_acc_p.
  /// Missing values are empty fields.
  std::string to_csv() const;
};

/// Parameter values plus optimizer state, enough to resume exactly.
template <typename T>
struct Snapshot {
  std::vector<Matrix<T>> values;
  ad::Optimizer<T> optimizer;
};

template <typename T>
Snapshot<T> take_snapshot(const models::Network<T>& net, const ad::Optimizer<T>& opt);
template <typename T>
void restore_snapshot(models::Network<T>& net, ad::Optimizer<T>& opt, const Snapshot<T>& s);

/// Independent generators derived from one seed.
struct RngStreams {
  Rng init_q;
  Rng init_p;
  Rng dropout;
  Rng sampling;

  explicit RngStreams(std::uint64_t seed);
};

template <typename T>
struct QTrainer {
  models::QNet<T> net;
  ad::Optimizer<T> opt;
};

template <typename T>
struct PTrainer {
  models::PNet<T> net;
  ad::Optimizer<T> opt;
};

template <typename T>
QTrainer<T> make_q_trainer(const Problem<T>& problem, const EMConfig& cfg, Rng& init_rng);
template <typename T>
PTrainer<T> make_p_trainer(const Problem<T>& problem, const EMConfig& cfg, Rng& init_rng);

/// Metric of q's current predictions on val and test (NaN when not evaluable).
template <typename T>
std::pair<double, double> evaluate_q(const Problem<T>& problem, const models::QNet<T>& q);

/// One masked cross-entropy term; `targets` must outlive the training call.
template <typename T>
struct Objective {
  const Matrix<T>* targets;
  std::span<const NodeId> mask;
};

/// Trains q for `epochs` on the sum of the terms. With selection the
/// best-validation epoch is restored. Returns the best (or final) validation
/// score, NaN when the problem has no validation nodes.
template <typename T>
double fit_q(const Problem<T>& problem, QTrainer<T>& q, std::span<const Objective<T>> terms, std::size_t epochs,
             bool selection, Rng& dropout_rng, EMHistory& history, std::size_t iteration, const std::string& phase);

/// Supervised pre-training on the problem's pretrain targets.
template <typename T>
double pretrain_q(const Problem<T>& problem, QTrainer<T>& q, const EMConfig& cfg, Rng& dropout_rng,
                  EMHistory& history);

/// Turns q's logits into label states: L keeps its ground truth as Observed,
/// every other node gets Sampled/Soft per the strategy. MultiSample returns
/// `samples` independent arrays, every other strategy one.
template <typename T>
std::vector<std::vector<graph::LabelState>> sample_labels(const Matrix<T>& q_logits, const Problem<T>& problem,
                                                          const Strategy& strategy, Rng& rng);

/// Mean over samples of the p objective over all nodes, evaluated without dropout.
template <typename T>
double m_step_objective(const Problem<T>& problem, const models::PNet<T>& p,
                        std::span<const std::vector<graph::LabelState>> samples);

/// Trains p on all nodes: inputs are the label features (plus attributes when
/// enabled), targets the same rows. Throws if any state is Unset.
template <typename T>
void m_step(const Problem<T>& problem, PTrainer<T>& p, std::span<const std::vector<graph::LabelState>> samples,
            const EMConfig& cfg, Rng& dropout_rng, EMHistory& history, std::size_t iteration);

/// q's E-step targets: p's predictive distribution (averaged over samples) for
/// unlabeled rows, ground-truth one-hots for labeled rows.
template <typename T>
Matrix<T> e_step_targets(const Problem<T>& problem, const models::PNet<T>& p,
                         std::span<const std::vector<graph::LabelState>> samples);

/// Trains q on CE over unlabeled nodes against e_step_targets plus CE over labeled nodes.
template <typename T>
double e_step(const Problem<T>& problem, QTrainer<T>& q, const models::PNet<T>& p,
              std::span<const std::vector<graph::LabelState>> samples, const EMConfig& cfg, Rng& dropout_rng,
              EMHistory& history, std::size_t iteration);

template <typename T>
struct GMNNResult {
  QTrainer<T> q;
  std::optional<PTrainer<T>> p;
  EMHistory history;
  /// q's logits at the selected checkpoint.
  Matrix<T> logits;
  std::vector<int> predictions;
  double val_score = kMissing;
  double test_score = kMissing;
};

/// Pre-train q, then alternate M- and E-steps. max_iterations = 0 is plain q training.
template <typename T>
GMNNResult<T> train_gmnn(const Problem<T>& problem, const EMConfig& cfg);

/// Shared outer loop for EM-like procedures: after pre-training, `iterate`
/// runs one iteration and returns its best validation score; the loop keeps
/// the best q across iterations and stops after `patience` stale iterations.
template <typename T>
using IterationFn = std::function<double(QTrainer<T>& q, std::size_t iteration, EMHistory& history)>;

template <typename T>
GMNNResult<T> run_outer_loop(const Problem<T>& problem, const EMConfig& cfg, QTrainer<T> q, RngStreams& rngs,
                             const IterationFn<T>& iterate);

template <typename T>
GMNNResult<T> finish_result(const Problem<T>& problem, QTrainer<T> q, EMHistory history);

}  // namespace gmnn::em
