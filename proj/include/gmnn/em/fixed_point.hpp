#pragma once

#include "gmnn/em/em.hpp"

#include <cstdint>
#include <string>

namespace gmnn::em {

/// How E over the other unlabeled nodes' labels is computed.
///   Exact: enumerate every joint assignment of the unlabeled nodes in the
///     receptive field, falling back to Sampled past `max_combinations`.
///   Sampled: average over `samples` draws from the current table.
enum class Expectation { Exact, Sampled };

std::string to_string(Expectation e);
Expectation expectation_from_string(const std::string& name);

struct FixedPointConfig {
  std::size_t max_iterations = 20;
  /// q <- damping * q* + (1 - damping) * q; 1 is the undamped parallel update.
  double damping = 0.5;
  double tolerance = 1e-4;
  Expectation expectation = Expectation::Sampled;
  std::size_t samples = 1;
  std::size_t max_combinations = 4096;
  std::uint64_t seed = 0;
};

void validate(const FixedPointConfig& cfg);

template <typename T>
struct FixedPointResult {
  /// n x K, row-stochastic; labeled rows are one-hots.
  Matrix<T> q;
  std::size_t iterations = 0;
  /// Max over unlabeled nodes and classes of |log q - log q*| before the last update.
  double residual = 0;
  bool converged = false;
};

/// Normalized log q*(y_node): E over the other nodes' labels, drawn from
/// `table`, of log p(y_node | labels), with the node's own label row zeroed.
template <typename T>
ad::RowVector<T> mean_field_target(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table,
                                   NodeId node, const FixedPointConfig& cfg, Rng& rng);

/// Parallel damped updates of an explicit categorical table for the
/// unlabeled nodes, starting from `init` (labeled rows are overwritten).
template <typename T>
FixedPointResult<T> fixed_point_inference(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& init,
                                          const FixedPointConfig& cfg);

/// The residual of `table` against its own fixed-point targets.
template <typename T>
double fixed_point_residual(const Problem<T>& problem, const models::PNet<T>& p, const Matrix<T>& table,
                            const FixedPointConfig& cfg);

template <typename T>
struct NonAmortizedResult {
  Matrix<T> table;
  std::optional<PTrainer<T>> p;
  EMHistory history;
  std::vector<int> predictions;
  double val_score = kMissing;
  double test_score = kMissing;
};

/// EM without an inference network: the table starts uniform on U, each
/// iteration trains p on labels drawn from it, then runs fixed-point inference.
template <typename T>
NonAmortizedResult<T> train_nonamortized(const Problem<T>& problem, const EMConfig& cfg,
                                         const FixedPointConfig& fp);

}  // namespace gmnn::em
