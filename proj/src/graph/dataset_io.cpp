#include "gmnn/graph/dataset_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace gmnn::graph {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump() << '\n';
}

void require_keys(const json& doc, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  if (!doc.is_object()) throw DataError(where + " must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!allowed.count(key)) throw DataError(where + ": unknown field '" + key + "'");
  }
  for (const auto& key : required) {
    if (!doc.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  }
}

std::size_t as_index(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw DataError(what + " must be an integer");
  const auto x = v.get<long long>();
  if (x < 0) throw DataError(what + " is negative (" + std::to_string(x) + ")");
  return static_cast<std::size_t>(x);
}

const json& as_array(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_array()) throw DataError("field '" + key + "' must be an array");
  return v;
}

std::vector<NodeId> parse_node_list(const json& arr, std::size_t num_nodes, const std::string& name) {
  if (!arr.is_array()) throw DataError("split '" + name + "' must be an array");
  std::vector<NodeId> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    const auto n = as_index(v, name + " split entry");
    if (n >= num_nodes) {
      throw DataError(name + " split entry " + std::to_string(n) + " >= num_nodes=" +
                      std::to_string(num_nodes));
    }
    out.push_back(n);
  }
  return out;
}

}  // namespace

Graph parse_dataset(const json& doc) {
  const std::set<std::string> keys = {"num_nodes", "num_features", "num_classes", "edges",
                                      "features", "labels", "splits"};
  require_keys(doc, keys, keys, "dataset");
  const auto num_nodes = as_index(doc.at("num_nodes"), "num_nodes");
  const auto num_features = as_index(doc.at("num_features"), "num_features");
  const auto num_classes = as_index(doc.at("num_classes"), "num_classes");

  std::vector<Edge> edges;
  for (const auto& e : as_array(doc, "edges")) {
    if (!e.is_array() || e.size() != 2) throw DataError("edge entries must be [u, v] pairs");
    edges.emplace_back(as_index(e[0], "edge endpoint"), as_index(e[1], "edge endpoint"));
  }

  std::vector<ad::Triplet<double>> triplets;
  for (const auto& f : as_array(doc, "features")) {
    if (!f.is_array() || f.size() != 3 || !f[2].is_number()) {
      throw DataError("feature entries must be [node, feature_index, value] triples");
    }
    const auto node = as_index(f[0], "feature node");
    const auto col = as_index(f[1], "feature index");
    if (node >= num_nodes) throw DataError("feature entry for node " + std::to_string(node) + " >= num_nodes");
    if (col >= num_features) {
      throw DataError("feature index " + std::to_string(col) + " >= num_features=" +
                      std::to_string(num_features));
    }
    triplets.push_back({node, col, f[2].get<double>()});
  }
  auto features = ad::SparseMatrix<double>::from_triplets(num_nodes, num_features, std::move(triplets));

  std::vector<std::optional<int>> labels(num_nodes);
  for (const auto& l : as_array(doc, "labels")) {
    if (!l.is_array() || l.size() != 2) throw DataError("label entries must be [node, class] pairs");
    const auto node = as_index(l[0], "label node");
    const auto cls = as_index(l[1], "label class");
    if (node >= num_nodes) throw DataError("label for node " + std::to_string(node) + " >= num_nodes");
    if (cls >= num_classes) {
      throw DataError("node " + std::to_string(node) + " has class " + std::to_string(cls) +
                      " >= num_classes=" + std::to_string(num_classes));
    }
    if (labels[node] && *labels[node] != static_cast<int>(cls)) {
      throw DataError("node " + std::to_string(node) + " has conflicting labels");
    }
    labels[node] = static_cast<int>(cls);
  }

  const json& splits = doc.at("splits");
  const std::set<std::string> split_keys = {"train", "val", "test"};
  require_keys(splits, split_keys, split_keys, "splits");
  Split split{parse_node_list(splits.at("train"), num_nodes, "train"),
              parse_node_list(splits.at("val"), num_nodes, "val"),
              parse_node_list(splits.at("test"), num_nodes, "test")};

  return make_graph(num_nodes, edges, std::move(features), std::move(labels), num_classes,
                    std::move(split));
}

Graph load_dataset(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    return parse_dataset(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json dataset_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& [u, v] : g.edges) edges.push_back({u, v});
  json features = json::array();
  for (std::size_t r = 0; r < g.features.rows(); ++r) {
    const auto idx = g.features.row_indices(r);
    const auto val = g.features.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) features.push_back({r, idx[k], val[k]});
  }
  json labels = json::array();
  for (std::size_t n = 0; n < g.num_nodes; ++n) {
    if (g.labels[n]) labels.push_back({n, *g.labels[n]});
  }
  return json{{"num_nodes", g.num_nodes},
              {"num_features", g.num_features()},
              {"num_classes", g.num_classes},
              {"edges", std::move(edges)},
              {"features", std::move(features)},
              {"labels", std::move(labels)},
              {"splits", {{"train", g.split.train}, {"val", g.split.val}, {"test", g.split.test}}}};
}

void save_dataset(const Graph& g, const std::filesystem::path& path) {
  write_json(dataset_to_json(g), path);
}

std::vector<WeightedEdge> parse_weighted_edges(const json& doc, std::size_t expected_num_nodes) {
  const std::set<std::string> keys = {"num_nodes", "edges"};
  require_keys(doc, keys, keys, "edge sidecar");
  const auto num_nodes = as_index(doc.at("num_nodes"), "num_nodes");
  if (num_nodes != expected_num_nodes) {
    throw DataError("edge sidecar declares " + std::to_string(num_nodes) + " nodes, dataset has " +
                    std::to_string(expected_num_nodes));
  }
  std::vector<WeightedEdge> out;
  const json& edges = as_array(doc, "edges");
  out.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const json& e = edges[i];
    if (!e.is_array() || e.size() != 3 || !e[2].is_number()) {
      throw DataError("edge sidecar entry " + std::to_string(i) + " must be [source, target, weight]");
    }
    WeightedEdge w{as_index(e[0], "source"), as_index(e[1], "target"), e[2].get<double>()};
    if (w.source >= num_nodes || w.target >= num_nodes) {
      throw DataError("edge sidecar entry " + std::to_string(i) + " references a node >= num_nodes");
    }
    out.push_back(w);
  }
  return out;
}

std::vector<WeightedEdge> load_weighted_edges(const std::filesystem::path& path,
                                              std::size_t expected_num_nodes) {
  const json doc = read_json(path);
  try {
    return parse_weighted_edges(doc, expected_num_nodes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json weighted_edges_to_json(std::size_t num_nodes, const std::vector<WeightedEdge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) arr.push_back({e.source, e.target, e.weight});
  return json{{"num_nodes", num_nodes}, {"edges", std::move(arr)}};
}

}  // namespace gmnn::graph
