#pragma once

#include "gmnn/autodiff/matrix.hpp"

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmnn::ad {

/// A trainable weight living outside any tape. Backward passes accumulate
/// into `grad`; optimizers read and clear it.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<T>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename T>
using ParameterSet = std::vector<Parameter<T>>;

/// Handle to a value recorded on a tape.
struct Var {
  std::size_t index = 0;
};

/// Records executed operations in execution order, which is a valid
/// topological order of the computation. Not shareable across threads.
template <typename T>
class Tape {
 public:
  /// Receives the gradient flowing into the op output and routes it to inputs.
  using BackwardFn = std::function<void(Tape&, const Matrix<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Matrix<T> value) { return push(std::move(value), false, nullptr, {}); }

  /// Leaf whose gradient stays on the tape (read with grad()).
  Var leaf(Matrix<T> value) { return push(std::move(value), true, nullptr, {}); }

  /// Leaf bound to an external parameter; backward adds into `p.grad`.
  /// The parameter must outlive the tape.
  Var parameter(Parameter<T>& p) { return push(p.value, true, &p, {}); }

  /// Records an op output. `fn` runs only when some input requires a gradient.
  Var record(Matrix<T> value, BackwardFn fn, std::initializer_list<Var> inputs) {
    bool needs = false;
    for (const Var v : inputs) needs = needs || nodes_[v.index].requires_grad;
    if (!value.allFinite()) throw std::domain_error("non-finite value produced by tape op");
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  const Matrix<T>& value(Var v) const { return nodes_.at(v.index).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of the last backward() loss; zero for values off the loss path.
  Matrix<T> grad(Var v) const {
    const Node& n = nodes_.at(v.index);
    if (n.grad.size() == 0) return Matrix<T>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// Adds `g` into the gradient slot of `v`; a no-op for constants.
  void accumulate(Var v, const Matrix<T>& g) {
    Node& n = nodes_[v.index];
    if (!n.requires_grad) return;
    if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
      throw ShapeError("gradient " + shape_str(g) + " for value " + shape_str(n.value));
    }
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  void backward(Var loss) {
    if (loss.index >= nodes_.size()) throw std::out_of_range("loss not recorded on this tape");
    const Matrix<T>& lv = nodes_[loss.index].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ShapeError("backward needs a scalar loss, got " + shape_str(lv));
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.index].grad = Matrix<T>::Ones(1, 1);
    for (std::size_t i = loss.index + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0) continue;
      if (n.backward) {
        // The closure may append to other nodes' grads but never to its own.
        const Matrix<T> g = n.grad;
        n.backward(*this, g);
      }
      if (n.param != nullptr) n.param->grad += n.grad;
    }
  }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  Var push(Matrix<T> value, bool requires_grad, Parameter<T>* param, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Matrix<T>(), requires_grad, param, std::move(fn)});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace gmnn::ad
