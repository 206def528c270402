#pragma once

#include "gmnn/autodiff/matrix.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace gmnn::graph {

struct Unset {
  friend bool operator==(const Unset&, const Unset&) = default;
};
/// Ground truth of a labeled node.
struct Observed {
  int cls;
  friend bool operator==(const Observed&, const Observed&) = default;
};
/// A hard label drawn for an unlabeled node.
struct Sampled {
  int cls;
  friend bool operator==(const Sampled&, const Sampled&) = default;
};
/// A full probability row standing in for an unlabeled node's label.
struct Soft {
  std::vector<double> probs;
  friend bool operator==(const Soft&, const Soft&) = default;
};

using LabelState = std::variant<Unset, Observed, Sampled, Soft>;

inline bool is_unset(const LabelState& s) { return std::holds_alternative<Unset>(s); }

/// One row per node: one-hot for Observed/Sampled, the probability row for
/// Soft, zeros for Unset.
template <typename T>
ad::Matrix<T> make_label_features(std::span<const LabelState> states, std::size_t num_classes) {
  const auto k = static_cast<Eigen::Index>(num_classes);
  ad::Matrix<T> out = ad::Matrix<T>::Zero(static_cast<Eigen::Index>(states.size()), k);
  for (std::size_t n = 0; n < states.size(); ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Observed> || std::is_same_v<S, Sampled>) {
            if (s.cls < 0 || s.cls >= k) {
              throw std::out_of_range("label " + std::to_string(s.cls) + " outside " +
                                      std::to_string(num_classes) + " classes");
            }
            out(row, s.cls) = T(1);
          } else if constexpr (std::is_same_v<S, Soft>) {
            if (s.probs.size() != num_classes) {
              throw std::invalid_argument("soft label width " + std::to_string(s.probs.size()) +
                                          " != " + std::to_string(num_classes));
            }
            for (Eigen::Index c = 0; c < k; ++c) out(row, c) = static_cast<T>(s.probs[c]);
          }
        },
        states[n]);
  }
  return out;
}

}  // namespace gmnn::graph
