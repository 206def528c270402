#pragma once

#include "gmnn/autodiff/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmnn::ad {

template <typename T>
struct Triplet {
  std::size_t row;
  std::size_t col;
  T value;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing within
/// each row; the structure is immutable after construction.
template <typename T>
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_(1, 0) {}

  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<T> values)
      : rows_(rows),
        cols_(cols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  /// Builds from unordered triplets; duplicate coordinates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet<T>> triplets) {
    for (const auto& t : triplets) {
      if (t.row >= rows || t.col >= cols) {
        throw ShapeError("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                         ") outside " + shape_str(static_cast<std::ptrdiff_t>(rows),
                                                  static_cast<std::ptrdiff_t>(cols)));
      }
    }
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::size_t> indices;
    std::vector<T> values;
    indices.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
        values.back() += t.value;
        continue;
      }
      indices.push_back(t.col);
      values.push_back(t.value);
      ++offsets[t.row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
    return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<std::size_t> offsets(n + 1);
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    return SparseMatrix(n, n, std::move(offsets), std::move(indices), std::vector<T>(n, T(1)));
  }

  static SparseMatrix from_dense(const Matrix<T>& dense) {
    std::vector<Triplet<T>> triplets;
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
      for (Eigen::Index j = 0; j < dense.cols(); ++j) {
        if (dense(i, j) != T(0)) {
          triplets.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), dense(i, j)});
        }
      }
    }
    return from_triplets(static_cast<std::size_t>(dense.rows()),
                         static_cast<std::size_t>(dense.cols()), std::move(triplets));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const T> values() const { return values_; }

  std::span<const std::size_t> row_indices(std::size_t r) const {
    return std::span<const std::size_t>(col_indices_).subspan(row_offsets_[r], row_nnz(r));
  }
  std::span<const T> row_values(std::size_t r) const {
    return std::span<const T>(values_).subspan(row_offsets_[r], row_nnz(r));
  }
  std::size_t row_nnz(std::size_t r) const { return row_offsets_[r + 1] - row_offsets_[r]; }

  /// Entry lookup by binary search; absent entries read as zero.
  T at(std::size_t r, std::size_t c) const {
    const auto idx = row_indices(r);
    const auto it = std::lower_bound(idx.begin(), idx.end(), c);
    if (it == idx.end() || *it != c) return T(0);
    return values_[row_offsets_[r] + static_cast<std::size_t>(it - idx.begin())];
  }

  Matrix<T> to_dense() const {
    Matrix<T> out = Matrix<T>::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col_indices_[k])) = values_[k];
      }
    }
    return out;
  }

  SparseMatrix transpose() const {
    std::vector<Triplet<T>> triplets;
    triplets.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        triplets.push_back({col_indices_[k], r, values_[k]});
      }
    }
    return from_triplets(cols_, rows_, std::move(triplets));
  }

  template <typename U>
  SparseMatrix<U> cast() const {
    std::vector<U> values(values_.begin(), values_.end());
    return SparseMatrix<U>(rows_, cols_, row_offsets_, col_indices_, std::move(values));
  }

  /// Same sparsity pattern with new values (length must equal nnz()).
  SparseMatrix with_values(std::vector<T> values) const {
    return SparseMatrix(rows_, cols_, row_offsets_, col_indices_, std::move(values));
  }

  bool is_symmetric(T tolerance) const {
    if (rows_ != cols_) return false;
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        if (std::abs(values_[k] - at(col_indices_[k], r)) > tolerance) return false;
      }
    }
    return true;
  }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  void validate() const {
    if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
      throw ShapeError("inconsistent compressed-row layout");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      if (row_offsets_[r] > row_offsets_[r + 1]) throw ShapeError("row offsets decrease");
      for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        if (col_indices_[k] >= cols_) throw ShapeError("column index out of bounds");
        if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
          throw ShapeError("column indices not strictly increasing in row " + std::to_string(r));
        }
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<T> values_;
};

/// out = a * x for a constant sparse `a`.
template <typename T>
Matrix<T> multiply(const SparseMatrix<T>& a, const Matrix<T>& x) {
  if (a.cols() != static_cast<std::size_t>(x.rows())) {
    throw ShapeError("spmm: sparse " + shape_str(static_cast<std::ptrdiff_t>(a.rows()),
                                                 static_cast<std::ptrdiff_t>(a.cols())) +
                     " times dense " + shape_str(x));
  }
  Matrix<T> out = Matrix<T>::Zero(static_cast<Eigen::Index>(a.rows()), x.cols());
  const auto offsets = a.row_offsets();
  const auto indices = a.col_indices();
  const auto values = a.values();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto out_row = out.row(static_cast<Eigen::Index>(r));
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      out_row.noalias() += values[k] * x.row(static_cast<Eigen::Index>(indices[k]));
    }
  }
  return out;
}

/// out = a^T * g without materializing the transpose.
template <typename T>
Matrix<T> multiply_transposed(const SparseMatrix<T>& a, const Matrix<T>& g) {
  if (a.rows() != static_cast<std::size_t>(g.rows())) {
    throw ShapeError("spmm^T: sparse rows " + std::to_string(a.rows()) + " vs dense " + shape_str(g));
  }
  Matrix<T> out = Matrix<T>::Zero(static_cast<Eigen::Index>(a.cols()), g.cols());
  const auto offsets = a.row_offsets();
  const auto indices = a.col_indices();
  const auto values = a.values();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto g_row = g.row(static_cast<Eigen::Index>(r));
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      out.row(static_cast<Eigen::Index>(indices[k])).noalias() += values[k] * g_row;
    }
  }
  return out;
}

/// Horizontal concatenation [left | right] of two sparse matrices with equal row counts.
template <typename T>
SparseMatrix<T> hstack(const SparseMatrix<T>& left, const SparseMatrix<T>& right) {
  if (left.rows() != right.rows()) throw ShapeError("hstack: row counts differ");
  std::vector<std::size_t> offsets(left.rows() + 1, 0);
  std::vector<std::size_t> indices;
  std::vector<T> values;
  indices.reserve(left.nnz() + right.nnz());
  values.reserve(left.nnz() + right.nnz());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    for (std::size_t k = 0; k < left.row_nnz(r); ++k) {
      indices.push_back(left.row_indices(r)[k]);
      values.push_back(left.row_values(r)[k]);
    }
    for (std::size_t k = 0; k < right.row_nnz(r); ++k) {
      indices.push_back(left.cols() + right.row_indices(r)[k]);
      values.push_back(right.row_values(r)[k]);
    }
    offsets[r + 1] = indices.size();
  }
  return SparseMatrix<T>(left.rows(), left.cols() + right.cols(), std::move(offsets),
                         std::move(indices), std::move(values));
}

}  // namespace gmnn::ad
