#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gmnn {

/// Training precision. Gradient checks instantiate the same templates at double.
using Scalar = float;

using Rng = std::mt19937_64;

namespace ad {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_str(std::ptrdiff_t rows, std::ptrdiff_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename T>
std::string shape_str(const Matrix<T>& m) {
  return shape_str(m.rows(), m.cols());
}

/// Row-wise log-softmax of `logits / temperature` with max subtraction.
template <typename T>
Matrix<T> log_softmax_rows(const Matrix<T>& logits, T temperature = T(1)) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T row_max = logits.row(i).maxCoeff();
    T total = 0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      out(i, k) = (logits(i, k) - row_max) / temperature;
      total += std::exp(out(i, k));
    }
    const T log_total = std::log(total);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) out(i, k) -= log_total;
  }
  return out;
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits, T temperature = T(1)) {
  return log_softmax_rows(logits, temperature).array().exp().matrix();
}

/// Index of the row maximum; ties resolve to the lowest index.
template <typename Derived>
Eigen::Index argmax_row(const Eigen::MatrixBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) > row(best)) best = k;
  }
  return best;
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return m.allFinite();
}

}  // namespace ad
}  // namespace gmnn
