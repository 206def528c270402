#pragma once

#include "gmnn/autodiff/matrix.hpp"
#include "gmnn/autodiff/sparse_matrix.hpp"
#include "gmnn/autodiff/tape.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace gmnn::ad {

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

}  // namespace detail

/// out = a * x, differentiable in x. `a` must outlive the tape.
template <typename T>
Var spmm(Tape<T>& tape, const SparseMatrix<T>& a, Var x) {
  Matrix<T> out = multiply(a, tape.value(x));
  const SparseMatrix<T>* ap = &a;
  return tape.record(
      std::move(out),
      [ap, x](Tape<T>& t, const Matrix<T>& g) { t.accumulate(x, multiply_transposed(*ap, g)); },
      {x});
}

/// As above, with the tape sharing ownership of `a`.
template <typename T>
Var spmm(Tape<T>& tape, std::shared_ptr<const SparseMatrix<T>> a, Var x) {
  Matrix<T> out = multiply(*a, tape.value(x));
  return tape.record(
      std::move(out),
      [a = std::move(a), x](Tape<T>& t, const Matrix<T>& g) { t.accumulate(x, multiply_transposed(*a, g)); },
      {x});
}

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const Matrix<T>& av = tape.value(a);
  const Matrix<T>& bv = tape.value(b);
  detail::require(av.cols() == bv.rows(), "matmul: " + shape_str(av) + " x " + shape_str(bv));
  Matrix<T> out = av * bv;
  return tape.record(
      std::move(out),
      [a, b](Tape<T>& t, const Matrix<T>& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
        if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
      },
      {a, b});
}

/// out = x + b with the 1xk row `b` broadcast over rows.
template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var b) {
  const Matrix<T>& xv = tape.value(x);
  const Matrix<T>& bv = tape.value(b);
  detail::require(bv.rows() == 1 && bv.cols() == xv.cols(),
                  "add_bias: " + shape_str(xv) + " + " + shape_str(bv));
  Matrix<T> out = xv.rowwise() + bv.row(0);
  return tape.record(
      std::move(out),
      [x, b](Tape<T>& t, const Matrix<T>& g) {
        t.accumulate(x, g);
        if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
      },
      {x, b});
}

/// out = x w + b.
template <typename T>
Var affine(Tape<T>& tape, Var x, Var w, Var b) {
  const Matrix<T>& xv = tape.value(x);
  const Matrix<T>& wv = tape.value(w);
  const Matrix<T>& bv = tape.value(b);
  detail::require(xv.cols() == wv.rows() && bv.rows() == 1 && bv.cols() == wv.cols(),
                  "affine: " + shape_str(xv) + " x " + shape_str(wv) + " + " + shape_str(bv));
  Matrix<T> out = xv * wv;
  out.rowwise() += bv.row(0);
  return tape.record(
      std::move(out),
      [x, w, b](Tape<T>& t, const Matrix<T>& g) {
        if (t.requires_grad(x)) t.accumulate(x, g * t.value(w).transpose());
        if (t.requires_grad(w)) t.accumulate(w, t.value(x).transpose() * g);
        if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
      },
      {x, w, b});
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Matrix<T>& av = tape.value(a);
  const Matrix<T>& bv = tape.value(b);
  detail::require(av.rows() == bv.rows() && av.cols() == bv.cols(),
                  "add: " + shape_str(av) + " + " + shape_str(bv));
  return tape.record(
      av + bv,
      [a, b](Tape<T>& t, const Matrix<T>& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      },
      {a, b});
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  return tape.record(
      tape.value(x) * factor,
      [x, factor](Tape<T>& t, const Matrix<T>& g) { t.accumulate(x, g * factor); }, {x});
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  Matrix<T> out(1, 1);
  out(0, 0) = tape.value(x).sum();
  return tape.record(
      std::move(out),
      [x](Tape<T>& t, const Matrix<T>& g) {
        const Matrix<T>& xv = t.value(x);
        t.accumulate(x, Matrix<T>::Constant(xv.rows(), xv.cols(), g(0, 0)));
      },
      {x});
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Matrix<T> out = tape.value(x).cwiseMax(T(0));
  return tape.record(
      std::move(out),
      [x](Tape<T>& t, const Matrix<T>& g) {
        const Matrix<T>& xv = t.value(x);
        t.accumulate(x, (xv.array() > T(0)).select(g, T(0)).matrix());
      },
      {x});
}

/// Rows [begin, begin + count) of x.
template <typename T>
Var row_block(Tape<T>& tape, Var x, Eigen::Index begin, Eigen::Index count) {
  const Matrix<T>& xv = tape.value(x);
  detail::require(begin >= 0 && count >= 0 && begin + count <= xv.rows(), "row_block out of range");
  Matrix<T> out = xv.middleRows(begin, count);
  return tape.record(
      std::move(out),
      [x, begin, count](Tape<T>& t, const Matrix<T>& g) {
        const Matrix<T>& xv = t.value(x);
        Matrix<T> full = Matrix<T>::Zero(xv.rows(), xv.cols());
        full.middleRows(begin, count) = g;
        t.accumulate(x, full);
      },
      {x});
}

/// Column-wise concatenation [a | b].
template <typename T>
Var concat_cols(Tape<T>& tape, Var a, Var b) {
  const Matrix<T>& av = tape.value(a);
  const Matrix<T>& bv = tape.value(b);
  detail::require(av.rows() == bv.rows(), "concat_cols: " + shape_str(av) + " | " + shape_str(bv));
  Matrix<T> out(av.rows(), av.cols() + bv.cols());
  out << av, bv;
  const Eigen::Index split = av.cols();
  return tape.record(
      std::move(out),
      [a, b, split](Tape<T>& t, const Matrix<T>& g) {
        t.accumulate(a, g.leftCols(split));
        t.accumulate(b, g.rightCols(g.cols() - split));
      },
      {a, b});
}

inline void check_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
}

/// Inverted dropout; identity when not training or p == 0.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double p, bool training, Rng& rng) {
  check_dropout_rate(p);
  if (!training || p == 0.0) return x;
  const Matrix<T>& xv = tape.value(x);
  Matrix<T> mask(xv.rows(), xv.cols());
  std::bernoulli_distribution keep(1.0 - p);
  const T survivor_scale = T(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? survivor_scale : T(0);
  Matrix<T> out = xv.cwiseProduct(mask);
  return tape.record(
      std::move(out),
      [x, mask = std::move(mask)](Tape<T>& t, const Matrix<T>& g) {
        t.accumulate(x, g.cwiseProduct(mask));
      },
      {x});
}

/// Inverted dropout over the stored entries of a constant sparse input.
template <typename T>
SparseMatrix<T> dropout_values(const SparseMatrix<T>& x, double p, bool training, Rng& rng) {
  check_dropout_rate(p);
  if (!training || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const T survivor_scale = T(1.0 / (1.0 - p));
  std::vector<T> values(x.values().begin(), x.values().end());
  for (T& v : values) v = keep(rng) ? v * survivor_scale : T(0);
  return x.with_values(std::move(values));
}

template <typename T>
inline constexpr T kStochasticTolerance = std::is_same_v<T, double> ? T(1e-6) : T(1e-4);

/// Mean over `mask` rows of the cross-entropy between `target` rows and
/// softmax(logits) rows. Targets in the mask must be row-stochastic and must
/// outlive the tape.
template <typename T>
Var masked_cross_entropy(Tape<T>& tape, Var logits, const Matrix<T>& target,
                         std::span<const std::size_t> mask) {
  const Matrix<T>& lv = tape.value(logits);
  detail::require(target.rows() == lv.rows() && target.cols() == lv.cols(),
                  "masked_cross_entropy: logits " + shape_str(lv) + " target " + shape_str(target));
  if (mask.empty()) throw std::invalid_argument("masked_cross_entropy: empty mask");
  std::vector<std::size_t> rows(mask.begin(), mask.end());
  const Eigen::Index k = lv.cols();
  Matrix<T> log_probs(static_cast<Eigen::Index>(rows.size()), k);
  T total = 0;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto r = static_cast<Eigen::Index>(rows[m]);
    detail::require(r < lv.rows(), "masked_cross_entropy: mask index out of range");
    const T target_mass = target.row(r).sum();
    if (std::abs(target_mass - T(1)) > kStochasticTolerance<T>) {
      throw std::invalid_argument("masked_cross_entropy: target row " + std::to_string(rows[m]) +
                                  " sums to " + std::to_string(static_cast<double>(target_mass)));
    }
    const T row_max = lv.row(r).maxCoeff();
    T z = 0;
    for (Eigen::Index c = 0; c < k; ++c) z += std::exp(lv(r, c) - row_max);
    const T log_z = row_max + std::log(z);
    for (Eigen::Index c = 0; c < k; ++c) {
      log_probs(static_cast<Eigen::Index>(m), c) = lv(r, c) - log_z;
      total -= target(r, c) * log_probs(static_cast<Eigen::Index>(m), c);
    }
  }
  const T inv_count = T(1) / static_cast<T>(rows.size());
  Matrix<T> out(1, 1);
  out(0, 0) = total * inv_count;
  const Matrix<T>* tp = &target;
  return tape.record(
      std::move(out),
      [logits, tp, rows = std::move(rows), log_probs = std::move(log_probs), inv_count](
          Tape<T>& t, const Matrix<T>& g) {
        const Matrix<T>& lv = t.value(logits);
        Matrix<T> grad = Matrix<T>::Zero(lv.rows(), lv.cols());
        const T coeff = g(0, 0) * inv_count;
        for (std::size_t m = 0; m < rows.size(); ++m) {
          const auto r = static_cast<Eigen::Index>(rows[m]);
          const T mass = tp->row(r).sum();
          for (Eigen::Index c = 0; c < lv.cols(); ++c) {
            grad(r, c) += coeff * (mass * std::exp(log_probs(static_cast<Eigen::Index>(m), c)) -
                                   (*tp)(r, c));
          }
        }
        t.accumulate(logits, grad);
      },
      {logits});
}

}  // namespace gmnn::ad
