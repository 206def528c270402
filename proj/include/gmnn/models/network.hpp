#pragma once

#include "gmnn/autodiff/ops.hpp"
#include "gmnn/autodiff/optimizer.hpp"
#include "gmnn/graph/graph.hpp"
#include "gmnn/models/layers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmnn::models {

using ad::Matrix;
using ad::SparseMatrix;
using ad::Var;

/// Normalized adjacency in the two forms the networks consume.
template <typename T>
struct Propagation {
  SparseMatrix<T> with_self_loops;
  SparseMatrix<T> without_self_loops;
};

/// Network input: an optional dense block followed column-wise by an optional
/// sparse block. Both are borrowed and must outlive any tape they feed.
template <typename T>
struct NetworkInput {
  const Matrix<T>* dense = nullptr;
  const SparseMatrix<T>* sparse = nullptr;

  std::size_t dense_width() const { return dense ? static_cast<std::size_t>(dense->cols()) : 0; }
  std::size_t sparse_width() const { return sparse ? sparse->cols() : 0; }
  std::size_t width() const { return dense_width() + sparse_width(); }
  std::size_t rows() const {
    return dense ? static_cast<std::size_t>(dense->rows()) : (sparse ? sparse->rows() : 0);
  }
};

/// A stack of GC / mean-pool / linear layers with input dropout. The first
/// layer propagates over `first_adj`, later layers over `adj`.
template <typename T>
class Network {
 public:
  Network() = default;

  Network(std::vector<LayerSpec> layers, double input_dropout, Rng& init_rng)
      : layers_(std::move(layers)), input_dropout_(input_dropout) {
    validate_layers(layers_);
    ad::check_dropout_rate(input_dropout_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& s = layers_[l];
      if (!has_weights(s.kind)) continue;
      const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
      std::uniform_real_distribution<double> dist(-limit, limit);
      Matrix<T> w(static_cast<Eigen::Index>(s.in_dim), static_cast<Eigen::Index>(s.out_dim));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(init_rng));
      weight_index_.push_back(params_.size());
      params_.emplace_back("layer" + std::to_string(l) + ".weight", std::move(w));
      params_.emplace_back("layer" + std::to_string(l) + ".bias",
                           Matrix<T>::Zero(1, static_cast<Eigen::Index>(s.out_dim)));
    }
    build_weight_slots();
  }

  /// Rebuilds from stored specs and parameter values (checkpoint restore).
  Network(std::vector<LayerSpec> layers, double input_dropout, ad::ParameterSet<T> params)
      : layers_(std::move(layers)), input_dropout_(input_dropout), params_(std::move(params)) {
    validate_layers(layers_);
    ad::check_dropout_rate(input_dropout_);
    std::size_t expected = 0;
    for (const auto& s : layers_) expected += has_weights(s.kind) ? 2 : 0;
    if (params_.size() != expected) throw std::invalid_argument("parameter count does not match layers");
    for (std::size_t i = 0; i < params_.size(); i += 2) weight_index_.push_back(i);
    build_weight_slots();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (slot_[l] < 0) continue;
      const auto& w = params_[static_cast<std::size_t>(slot_[l])].value;
      const auto& b = params_[static_cast<std::size_t>(slot_[l]) + 1].value;
      if (w.rows() != static_cast<Eigen::Index>(layers_[l].in_dim) ||
          w.cols() != static_cast<Eigen::Index>(layers_[l].out_dim) || b.rows() != 1 ||
          b.cols() != w.cols()) {
        throw std::invalid_argument("parameter shapes do not match layer " + std::to_string(l));
      }
    }
  }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  double input_dropout() const { return input_dropout_; }
  std::size_t input_width() const { return layers_.front().in_dim; }
  std::size_t output_width() const { return layers_.back().out_dim; }
  ad::ParameterSet<T>& params() { return params_; }
  const ad::ParameterSet<T>& params() const { return params_; }

  /// Differentiable forward pass returning logits; parameters are bound to the tape.
  Var forward(ad::Tape<T>& tape, const SparseMatrix<T>& first_adj, const SparseMatrix<T>& adj,
                 const NetworkInput<T>& input, bool training, Rng& rng) {
    check_input(input, first_adj, adj);
    // The tape keeps a dropped-out copy alive; the caller's input outlives the tape anyway.
    std::shared_ptr<const SparseMatrix<T>> sparse;
    if (input.sparse) {
      if (training && input_dropout_ > 0.0) {
        sparse = std::make_shared<const SparseMatrix<T>>(ad::dropout_values(*input.sparse, input_dropout_, training, rng));
      } else {
        sparse = std::shared_ptr<const SparseMatrix<T>>(input.sparse, [](const SparseMatrix<T>*) {});
      }
    }
    std::optional<Var> dense;
    if (input.dense) dense = ad::dropout(tape, tape.constant(*input.dense), input_dropout_, training, rng);

    Var x{};
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& s = layers_[l];
      const SparseMatrix<T>& a = l == 0 ? first_adj : adj;
      if (s.kind == LayerKind::MeanPool) {
        const Var in = l == 0 ? densify(tape, dense, sparse.get()) : x;
        x = ad::spmm(tape, a, in);
        continue;
      }
      const Var w = tape.parameter(params_[static_cast<std::size_t>(slot_[l])]);
      const Var b = tape.parameter(params_[static_cast<std::size_t>(slot_[l]) + 1]);
      Var z = l == 0 ? first_product(tape, w, dense, sparse) : ad::matmul(tape, x, w);
      if (s.kind == LayerKind::GraphConv) z = ad::spmm(tape, a, z);
      x = ad::add_bias(tape, z, b);
      if (s.activation == Activation::Relu) x = ad::relu(tape, x);
    }
    return x;
  }

  /// Deterministic evaluation without a tape. Returns logits, and the hidden
  /// activation entering the final layer when `hidden` is non-null.
  Matrix<T> infer(const SparseMatrix<T>& first_adj, const SparseMatrix<T>& adj,
                  const NetworkInput<T>& input, Matrix<T>* hidden = nullptr) const {
    check_input(input, first_adj, adj);
    Matrix<T> x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& s = layers_[l];
      const SparseMatrix<T>& a = l == 0 ? first_adj : adj;
      if (l == 0 && (s.kind == LayerKind::MeanPool || (hidden && layers_.size() == 1))) {
        x = dense_input(input);
      }
      if (hidden && l + 1 == layers_.size()) *hidden = x;
      if (s.kind == LayerKind::MeanPool) {
        x = ad::multiply(a, x);
        continue;
      }
      const auto& w = params_[static_cast<std::size_t>(slot_[l])].value;
      const auto& b = params_[static_cast<std::size_t>(slot_[l]) + 1].value;
      Matrix<T> z;
      if (l == 0) {
        z = Matrix<T>::Zero(static_cast<Eigen::Index>(input.rows()), w.cols());
        if (input.dense) z.noalias() += *input.dense * w.topRows(input.dense->cols());
        if (input.sparse) {
          const Matrix<T> ws = w.bottomRows(static_cast<Eigen::Index>(input.sparse->cols()));
          z += ad::multiply(*input.sparse, ws);
        }
      } else {
        z = x * w;
      }
      if (s.kind == LayerKind::GraphConv) z = ad::multiply(a, z);
      z.rowwise() += b.row(0);
      if (s.activation == Activation::Relu) z = z.cwiseMax(T(0));
      x = std::move(z);
    }
    return x;
  }

  /// Input rows that can influence the output row of `node`, ascending.
  std::vector<graph::NodeId> receptive_field(const SparseMatrix<T>& first_adj,
                                             const SparseMatrix<T>& adj, graph::NodeId node) const {
    return layer_sets(first_adj, adj, node).front();
  }

  /// Output row of `node` computed from its receptive field only. Equals
  /// row `node` of infer() for the same input.
  ad::RowVector<T> local_logits(const SparseMatrix<T>& first_adj, const SparseMatrix<T>& adj,
                                const NetworkInput<T>& input, graph::NodeId node) const {
    const auto sets = layer_sets(first_adj, adj, node);
    const auto& rows0 = sets.front();
    Matrix<T> h = Matrix<T>::Zero(static_cast<Eigen::Index>(rows0.size()),
                                  static_cast<Eigen::Index>(input.width()));
    const auto dw = static_cast<Eigen::Index>(input.dense_width());
    for (std::size_t i = 0; i < rows0.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (input.dense) h.row(r).head(dw) = input.dense->row(static_cast<Eigen::Index>(rows0[i]));
      if (input.sparse) {
        const auto idx = input.sparse->row_indices(rows0[i]);
        const auto val = input.sparse->row_values(rows0[i]);
        for (std::size_t k = 0; k < idx.size(); ++k) h(r, dw + static_cast<Eigen::Index>(idx[k])) = val[k];
      }
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& s = layers_[l];
      const SparseMatrix<T>& a = l == 0 ? first_adj : adj;
      const auto& in_rows = sets[l];
      const auto& out_rows = sets[l + 1];
      Matrix<T> z = h;
      if (has_weights(s.kind)) z = h * params_[static_cast<std::size_t>(slot_[l])].value;
      Matrix<T> out;
      if (propagates(s.kind)) {
        out = Matrix<T>::Zero(static_cast<Eigen::Index>(out_rows.size()), z.cols());
        for (std::size_t i = 0; i < out_rows.size(); ++i) {
          const auto idx = a.row_indices(out_rows[i]);
          const auto val = a.row_values(out_rows[i]);
          for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto pos = position(in_rows, idx[k]);
            out.row(static_cast<Eigen::Index>(i)) += val[k] * z.row(pos);
          }
        }
      } else {
        out.resize(static_cast<Eigen::Index>(out_rows.size()), z.cols());
        for (std::size_t i = 0; i < out_rows.size(); ++i) {
          out.row(static_cast<Eigen::Index>(i)) = z.row(position(in_rows, out_rows[i]));
        }
      }
      if (has_weights(s.kind)) out.rowwise() += params_[static_cast<std::size_t>(slot_[l]) + 1].value.row(0);
      if (s.activation == Activation::Relu) out = out.cwiseMax(T(0));
      h = std::move(out);
    }
    return h.row(0);
  }

 private:
  void build_weight_slots() {
    slot_.assign(layers_.size(), -1);
    std::size_t next = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (has_weights(layers_[l].kind)) slot_[l] = static_cast<long>(weight_index_[next++]);
    }
  }

  void check_input(const NetworkInput<T>& input, const SparseMatrix<T>& first_adj,
                   const SparseMatrix<T>& adj) const {
    if (input.width() != input_width()) {
      throw ad::ShapeError("network expects input width " + std::to_string(input_width()) +
                           ", got " + std::to_string(input.width()));
    }
    if (input.dense && input.sparse && input.sparse->rows() != static_cast<std::size_t>(input.dense->rows())) {
      throw ad::ShapeError("dense and sparse input blocks differ in row count");
    }
    const std::size_t n = input.rows();
    if (first_adj.rows() != n || first_adj.cols() != n || adj.rows() != n || adj.cols() != n) {
      throw ad::ShapeError("adjacency does not match " + std::to_string(n) + " input rows");
    }
  }

  Matrix<T> dense_input(const NetworkInput<T>& input) const {
    Matrix<T> x(static_cast<Eigen::Index>(input.rows()), static_cast<Eigen::Index>(input.width()));
    if (input.dense) x.leftCols(input.dense->cols()) = *input.dense;
    if (input.sparse) x.rightCols(static_cast<Eigen::Index>(input.sparse->cols())) = input.sparse->to_dense();
    return x;
  }

  Var densify(ad::Tape<T>& tape, const std::optional<Var>& dense, const SparseMatrix<T>* sparse) const {
    if (!sparse) return *dense;
    const Var s = tape.constant(sparse->to_dense());
    return dense ? ad::concat_cols(tape, *dense, s) : s;
  }

  Var first_product(ad::Tape<T>& tape, Var w, const std::optional<Var>& dense,
                    const std::shared_ptr<const SparseMatrix<T>>& sparse) const {
    std::optional<Var> z;
    const Eigen::Index dense_cols = dense ? tape.value(*dense).cols() : 0;
    if (dense) {
      const Var w_top = sparse ? ad::row_block(tape, w, 0, dense_cols) : w;
      z = ad::matmul(tape, *dense, w_top);
    }
    if (sparse) {
      const Var w_bottom =
          dense ? ad::row_block(tape, w, dense_cols, static_cast<Eigen::Index>(sparse->cols())) : w;
      const Var zs = ad::spmm(tape, sparse, w_bottom);
      z = z ? ad::add(tape, *z, zs) : zs;
    }
    return *z;
  }

  std::vector<std::vector<graph::NodeId>> layer_sets(const SparseMatrix<T>& first_adj,
                                                     const SparseMatrix<T>& adj,
                                                     graph::NodeId node) const {
    std::vector<std::vector<graph::NodeId>> sets(layers_.size() + 1);
    sets.back() = {node};
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const SparseMatrix<T>& a = l == 0 ? first_adj : adj;
      if (!propagates(layers_[l].kind)) {
        sets[l] = sets[l + 1];
        continue;
      }
      std::vector<graph::NodeId> rows;
      for (graph::NodeId r : sets[l + 1]) {
        const auto idx = a.row_indices(r);
        rows.insert(rows.end(), idx.begin(), idx.end());
      }
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      sets[l] = std::move(rows);
    }
    return sets;
  }

  static Eigen::Index position(const std::vector<graph::NodeId>& sorted, graph::NodeId n) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), n);
    return static_cast<Eigen::Index>(it - sorted.begin());
  }

  std::vector<LayerSpec> layers_;
  double input_dropout_ = 0.0;
  ad::ParameterSet<T> params_;
  std::vector<std::size_t> weight_index_;
  std::vector<long> slot_;
};

}  // namespace gmnn::models
