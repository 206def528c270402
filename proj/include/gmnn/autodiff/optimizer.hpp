#pragma once

#include "gmnn/autodiff/matrix.hpp"
#include "gmnn/autodiff/tape.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmnn::ad {

enum class OptimizerKind { RmsProp, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::RmsProp;
  double lr = 0.05;
  double weight_decay = 5e-4;
  double rho = 0.99;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

/// Per-parameter optimizer state. Holds no references to the parameters, so
/// it copies cleanly alongside a parameter snapshot for checkpointing.
///
/// Weight decay is an L2 term added to the gradient before the update.
/// RMSProp: acc = rho*acc + (1-rho)*g^2, p -= lr*g/(sqrt(acc)+eps).
/// Adam: bias-corrected first/second moments.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  std::size_t steps() const { return steps_; }
  const std::vector<Matrix<T>>& second_moments() const { return second_; }
  const std::vector<Matrix<T>>& first_moments() const { return first_; }

  void step(ParameterSet<T>& params) {
    if (second_.empty()) {
      for (const auto& p : params) {
        second_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
        if (config_.kind == OptimizerKind::Adam) {
          first_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
        }
      }
    }
    if (second_.size() != params.size()) {
      throw std::invalid_argument("optimizer bound to " + std::to_string(second_.size()) +
                                  " parameters, got " + std::to_string(params.size()));
    }
    ++steps_;
    const T lr = static_cast<T>(config_.lr);
    const T wd = static_cast<T>(config_.weight_decay);
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter<T>& p = params[i];
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
        throw ShapeError("optimizer: gradient " + shape_str(p.grad) + " for parameter " + p.name +
                         " " + shape_str(p.value));
      }
      Matrix<T> g = p.grad;
      if (wd != T(0)) g += wd * p.value;
      if (config_.kind == OptimizerKind::RmsProp) {
        const T rho = static_cast<T>(config_.rho);
        second_[i] = rho * second_[i] + (T(1) - rho) * g.cwiseAbs2();
        p.value.array() -= lr * g.array() / (second_[i].array().sqrt() + eps);
      } else {
        const T b1 = static_cast<T>(config_.beta1);
        const T b2 = static_cast<T>(config_.beta2);
        first_[i] = b1 * first_[i] + (T(1) - b1) * g;
        second_[i] = b2 * second_[i] + (T(1) - b2) * g.cwiseAbs2();
        const T c1 = T(1) - static_cast<T>(std::pow(config_.beta1, static_cast<double>(steps_)));
        const T c2 = T(1) - static_cast<T>(std::pow(config_.beta2, static_cast<double>(steps_)));
        p.value.array() -=
            lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps);
      }
    }
  }

  static void zero_grad(ParameterSet<T>& params) {
    for (auto& p : params) p.zero_grad();
  }

 private:
  OptimizerConfig config_;
  std::vector<Matrix<T>> first_;
  std::vector<Matrix<T>> second_;
  std::size_t steps_ = 0;
};

}  // namespace gmnn::ad
