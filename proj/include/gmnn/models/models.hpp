#pragma once

#include "gmnn/graph/adjacency.hpp"
#include "gmnn/models/network.hpp"

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <vector>

namespace gmnn::models {

template <typename T>
Propagation<T> make_propagation(const graph::Graph& g) {
  return {graph::normalize_adjacency(g, true).cast<T>(), graph::normalize_adjacency(g, false).cast<T>()};
}

/// Inference network: attributes in, class logits out.
template <typename T>
struct QNet {
  Network<T> net;

  Var forward(ad::Tape<T>& tape, const Propagation<T>& prop, const SparseMatrix<T>& x, bool training,
              Rng& rng) {
    return net.forward(tape, prop.with_self_loops, prop.with_self_loops, {nullptr, &x}, training, rng);
  }

  Matrix<T> infer(const Propagation<T>& prop, const SparseMatrix<T>& x, Matrix<T>* hidden = nullptr) const {
    return net.infer(prop.with_self_loops, prop.with_self_loops, {nullptr, &x}, hidden);
  }
};

/// Learning network: label features, optionally followed by attributes.
template <typename T>
struct PNet {
  Network<T> net;
  bool use_attrs = false;
  /// Drops self-loops from the first propagation so a node never sees its own label.
  bool exclude_self_label = false;

  const SparseMatrix<T>& first_adj(const Propagation<T>& prop) const {
    return exclude_self_label ? prop.without_self_loops : prop.with_self_loops;
  }

  NetworkInput<T> input(const Matrix<T>& label_feats, const SparseMatrix<T>* attrs) const {
    if (use_attrs && attrs == nullptr) throw std::invalid_argument("p-network configured with attributes but none given");
    return {&label_feats, use_attrs ? attrs : nullptr};
  }

  Var forward(ad::Tape<T>& tape, const Propagation<T>& prop, const Matrix<T>& label_feats,
              const SparseMatrix<T>* attrs, bool training, Rng& rng) {
    return net.forward(tape, first_adj(prop), prop.with_self_loops, input(label_feats, attrs), training, rng);
  }

  Matrix<T> infer(const Propagation<T>& prop, const Matrix<T>& label_feats, const SparseMatrix<T>* attrs) const {
    return net.infer(first_adj(prop), prop.with_self_loops, input(label_feats, attrs));
  }

  ad::RowVector<T> local_logits(const Propagation<T>& prop, const Matrix<T>& label_feats,
                                const SparseMatrix<T>* attrs, graph::NodeId node) const {
    return net.local_logits(first_adj(prop), prop.with_self_loops, input(label_feats, attrs), node);
  }
};

template <typename T>
QNet<T> make_qnet(const ArchConfig& arch, std::size_t num_features, std::size_t num_outputs,
                  double input_dropout, Rng& init_rng) {
  return {Network<T>(build_layers(arch, num_features, num_outputs), input_dropout, init_rng)};
}

template <typename T>
PNet<T> make_pnet(const ArchConfig& arch, std::size_t num_classes, std::size_t num_features, bool use_attrs,
                  bool exclude_self_label, double input_dropout, Rng& init_rng) {
  const std::size_t width = num_classes + (use_attrs ? num_features : 0);
  return {Network<T>(build_layers(arch, width, num_classes), input_dropout, init_rng), use_attrs,
          exclude_self_label};
}

/// Row-wise argmax, ties to the lowest class.
template <typename T>
std::vector<int> predict(const Matrix<T>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) out[static_cast<std::size_t>(r)] = static_cast<int>(ad::argmax_row(logits.row(r)));
  return out;
}

/// Activation entering the final layer, evaluated without dropout.
template <typename T>
Matrix<T> extract_representations(const QNet<T>& q, const Propagation<T>& prop, const SparseMatrix<T>& x) {
  Matrix<T> hidden;
  q.infer(prop, x, &hidden);
  return hidden;
}

// Checkpoints: {"format":"gmnn-network","precision":"float32"|"float64","input_dropout":p,
// "layers":[{"kind","in_dim","out_dim","activation"}],
// "params":[{"name","rows","cols","data":<base64 of little-endian row-major values>}]}

std::string encode_base64(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> decode_base64(const std::string& text);

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

template <typename T>
nlohmann::json network_to_json(const Network<T>& net) {
  nlohmann::json doc;
  doc["format"] = "gmnn-network";
  doc["precision"] = precision_name<T>();
  doc["input_dropout"] = net.input_dropout();
  doc["layers"] = nlohmann::json::array();
  for (const auto& s : net.layers()) {
    doc["layers"].push_back({{"kind", to_string(s.kind)},
                             {"in_dim", s.in_dim},
                             {"out_dim", s.out_dim},
                             {"activation", to_string(s.activation)}});
  }
  doc["params"] = nlohmann::json::array();
  for (const auto& p : net.params()) {
    const auto* raw = reinterpret_cast<const unsigned char*>(p.value.data());
    std::vector<unsigned char> bytes(raw, raw + sizeof(T) * static_cast<std::size_t>(p.value.size()));
    doc["params"].push_back(
        {{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", encode_base64(bytes)}});
  }
  return doc;
}

template <typename T>
Network<T> network_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "gmnn-network") throw std::invalid_argument("not a network checkpoint");
  if (doc.at("precision").get<std::string>() != precision_name<T>()) {
    throw std::invalid_argument("checkpoint precision " + doc.at("precision").get<std::string>() + " does not match " +
                                precision_name<T>());
  }
  std::vector<LayerSpec> layers;
  for (const auto& l : doc.at("layers")) {
    layers.push_back({layer_kind_from_string(l.at("kind").get<std::string>()), l.at("in_dim").get<std::size_t>(),
                      l.at("out_dim").get<std::size_t>(),
                      activation_from_string(l.at("activation").get<std::string>())});
  }
  ad::ParameterSet<T> params;
  for (const auto& p : doc.at("params")) {
    const auto rows = p.at("rows").get<Eigen::Index>();
    const auto cols = p.at("cols").get<Eigen::Index>();
    const auto bytes = decode_base64(p.at("data").get<std::string>());
    if (bytes.size() != sizeof(T) * static_cast<std::size_t>(rows * cols)) {
      throw std::invalid_argument("parameter " + p.at("name").get<std::string>() + " has " +
                                  std::to_string(bytes.size()) + " bytes for shape " + ad::shape_str(rows, cols));
    }
    Matrix<T> value(rows, cols);
    std::memcpy(value.data(), bytes.data(), bytes.size());
    params.emplace_back(p.at("name").get<std::string>(), std::move(value));
  }
  return Network<T>(std::move(layers), doc.at("input_dropout").get<double>(), std::move(params));
}

template <typename T>
void save_network(const Network<T>& net, const std::filesystem::path& path);
template <typename T>
Network<T> load_network(const std::filesystem::path& path);

}  // namespace gmnn::models
