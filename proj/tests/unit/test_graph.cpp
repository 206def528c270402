#include "gmnn/graph/adjacency.hpp"
#include "gmnn/graph/dataset_io.hpp"
#include "gmnn/graph/label_state.hpp"
#include "gmnn/graph/line_graph.hpp"
#include "gmnn/graph/synthetic.hpp"

#include "../support/gradcheck.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

namespace gmnn::graph {
namespace {

using nlohmann::json;
const std::filesystem::path kData = GMNN_TEST_DATA_DIR;

json mini_doc() {
  std::ifstream in(kData / "mini_dataset.json");
  return json::parse(in);
}

Graph tiny(std::size_t n, std::vector<Edge> edges) {
  return make_graph(n, edges, ad::SparseMatrix<double>(n, 1, std::vector<std::size_t>(n + 1, 0), {}, {}),
                    std::vector<std::optional<int>>(n), 1, {});
}

TEST(LoadDataset, MiniFixture) {
  const Graph g = load_dataset(kData / "mini_dataset.json");
  EXPECT_EQ(g.num_nodes, 24u);
  EXPECT_EQ(g.num_features(), 12u);
  EXPECT_EQ(g.num_classes, 3u);
  EXPECT_EQ(g.raw_edge_count, mini_doc()["edges"].size());
  // One reversed duplicate and one self-loop collapse away.
  EXPECT_EQ(g.edges.size(), g.raw_edge_count - 2);
  EXPECT_EQ(g.split.train.size(), 6u);
  EXPECT_EQ(g.split.val.size(), 6u);
  EXPECT_EQ(g.split.test.size(), 12u);
  for (const auto& [u, v] : g.edges) EXPECT_LT(u, v);
  EXPECT_TRUE(std::is_sorted(g.edges.begin(), g.edges.end()));
}

TEST(LoadDataset, Deterministic) {
  EXPECT_EQ(load_dataset(kData / "mini_dataset.json"), load_dataset(kData / "mini_dataset.json"));
}

TEST(LoadDataset, OverlapNamesNode) {
  json doc = mini_doc();
  const int node = doc["splits"]["test"][0];
  doc["splits"]["train"].push_back(node);
  try {
    parse_dataset(doc);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("node " + std::to_string(node)), std::string::npos) << msg;
    EXPECT_NE(msg.find("train"), std::string::npos) << msg;
    EXPECT_NE(msg.find("test"), std::string::npos) << msg;
  }
}

TEST(LoadDataset, RejectsMalformedContent) {
  auto expect_error = [](json doc) { EXPECT_THROW(parse_dataset(doc), DataError) << doc.dump().substr(0, 80); };
  json doc = mini_doc();
  doc["extra"] = 1;
  expect_error(doc);
  doc = mini_doc();
  doc.erase("labels");
  expect_error(doc);
  doc = mini_doc();
  doc["edges"].push_back({0, 24});
  expect_error(doc);
  doc = mini_doc();
  doc["features"].push_back({0, 12, 1.0});
  expect_error(doc);
  doc = mini_doc();
  doc["labels"].push_back({0, 3});
  expect_error(doc);
  doc = mini_doc();
  doc["splits"]["train"].push_back(-1);
  expect_error(doc);
  doc = mini_doc();
  doc["splits"]["extra"] = json::array();
  expect_error(doc);
  doc = mini_doc();
  doc["num_nodes"] = "24";
  expect_error(doc);
}

TEST(LoadDataset, UnlabeledTrainNodeRejected) {
  json doc = mini_doc();
  const int node = doc["splits"]["train"][0];
  json labels = json::array();
  for (const auto& l : doc["labels"])
    if (l[0] != node) labels.push_back(l);
  doc["labels"] = labels;
  EXPECT_THROW(parse_dataset(doc), DataError);
}

TEST(LoadDataset, MissingFileAndBadJson) {
  EXPECT_THROW(load_dataset(kData / "does_not_exist.json"), DataError);
  const auto path = std::filesystem::temp_directory_path() / "gmnn_bad.json";
  std::ofstream(path) << "{not json";
  EXPECT_THROW(load_dataset(path), DataError);
}

TEST(SaveDataset, StructuralRoundTrip) {
  const Graph g = load_dataset(kData / "mini_dataset.json");
  const auto path = std::filesystem::temp_directory_path() / "gmnn_roundtrip.json";
  save_dataset(g, path);
  const Graph h = load_dataset(path);
  EXPECT_EQ(h.edges, g.edges);
  EXPECT_EQ(h.features, g.features);
  EXPECT_EQ(h.labels, g.labels);
  EXPECT_EQ(h.split, g.split);
  EXPECT_EQ(h.num_classes, g.num_classes);
  EXPECT_EQ(h.raw_edge_count, g.edges.size());
  // A canonical graph re-reads to exactly itself.
  save_dataset(h, path);
  EXPECT_EQ(load_dataset(path), h);
}

TEST(WeightedEdges, SidecarLoads) {
  const auto edges = load_weighted_edges(kData / "mini_edges.json", 24);
  ASSERT_FALSE(edges.empty());
  std::ifstream in(kData / "mini_edges.json");
  const json doc = json::parse(in);
  EXPECT_EQ(edges.size(), doc["edges"].size());
  EXPECT_EQ(edges.front().source, doc["edges"][0][0].get<std::size_t>());
  EXPECT_DOUBLE_EQ(edges.front().weight, doc["edges"][0][2].get<double>());
  EXPECT_THROW(load_weighted_edges(kData / "mini_edges.json", 25), DataError);
}

TEST(WeightedEdges, RoundTripAndErrors) {
  const std::vector<WeightedEdge> edges{{0, 1, 4.0}, {1, 0, -5.0}, {2, 1, 1.5}};
  EXPECT_EQ(parse_weighted_edges(weighted_edges_to_json(3, edges), 3), edges);
  json bad = weighted_edges_to_json(3, edges);
  bad["edges"].push_back({0, 3, 1.0});
  EXPECT_THROW(parse_weighted_edges(bad, 3), DataError);
  bad = weighted_edges_to_json(3, edges);
  bad["weights"] = 1;
  EXPECT_THROW(parse_weighted_edges(bad, 3), DataError);
  bad = weighted_edges_to_json(3, edges);
  bad["edges"].push_back({0, 1});
  EXPECT_THROW(parse_weighted_edges(bad, 3), DataError);
}

TEST(Binarize, Rule) {
  auto features = ad::SparseMatrix<double>::from_triplets(3, 3, {{0, 0, 0.37}, {0, 1, 0.0}, {0, 2, -2.0}, {1, 1, 5.0}});
  const Graph g = make_graph(3, {}, features, std::vector<std::optional<int>>(3), 1, {});
  const Graph b = binarize_features(g);
  EXPECT_DOUBLE_EQ(b.features.at(0, 0), 1.0);
  EXPECT_EQ(b.features.row_nnz(0), 1u);
  EXPECT_DOUBLE_EQ(b.features.at(1, 1), 1.0);
  EXPECT_EQ(b.features.row_nnz(2), 0u);
}

TEST(RowNormalize, UnitSums) {
  const Graph g = row_normalize_features(load_dataset(kData / "mini_dataset.json"));
  for (std::size_t r = 0; r < g.num_nodes; ++r) {
    double total = 0;
    for (double v : g.features.row_values(r)) total += v;
    if (g.features.row_nnz(r) > 0) {
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(NormalizeAdjacency, IsolatedNodeSelfLoop) {
  const auto a = normalize_adjacency(tiny(3, {{0, 1}}), true);
  EXPECT_DOUBLE_EQ(a.at(2, 2), 1.0);
  EXPECT_EQ(a.row_nnz(2), 1u);
}

TEST(NormalizeAdjacency, SingleEdgeHalves) {
  const auto a = normalize_adjacency(tiny(2, {{0, 1}}), true);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a.at(i, j), 0.5);
}

TEST(NormalizeAdjacency, WithoutSelfLoops) {
  const auto a = normalize_adjacency(tiny(4, {{0, 1}, {1, 2}}), false);
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 1.0 / std::sqrt(2.0));
  EXPECT_EQ(a.row_nnz(3), 0u);
}

TEST(NormalizeAdjacency, SymmetricAndSpectralRadiusBounded) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + trial % 8;
    const Graph g = tiny(n, testing::random_edges(n, n, rng));
    for (bool loops : {true, false}) {
      const auto a = normalize_adjacency(g, loops);
      EXPECT_TRUE(a.is_symmetric(1e-12));
      const Eigen::MatrixXd dense = a.to_dense();
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
      const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
      EXPECT_LE(radius, 1.0 + 1e-12);
      // Power iteration agrees with the dense eigensolve.
      Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
      double estimate = 0;
      for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd w = dense * (dense * v);
        estimate = std::sqrt(w.norm() / v.norm());
        v = w / w.norm();
      }
      EXPECT_NEAR(estimate, radius, 1e-6);
    }
  }
}

TEST(LineGraph, Path) {
  const Graph l = build_line_graph(tiny(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(l.num_nodes, 2u);
  EXPECT_EQ(l.edges, (std::vector<Edge>{{0, 1}}));
  EXPECT_EQ(l.num_features(), 3u);
  EXPECT_DOUBLE_EQ(l.features.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(l.features.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(l.features.at(0, 2), 0.0);
}

TEST(LineGraph, TriangleIsTriangle) {
  const Graph l = build_line_graph(tiny(3, {{0, 1}, {1, 2}, {0, 2}}));
  EXPECT_EQ(l.num_nodes, 3u);
  EXPECT_EQ(l.edges, (std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(LineGraph, EmptyThrows) { EXPECT_THROW(build_line_graph(tiny(3, {})), DataError); }

TEST(LineGraph, EdgeCountMatchesDegreeFormula) {
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + trial % 9;
    const Graph g = tiny(n, testing::random_edges(n, 2 * n, rng));
    const Graph l = build_line_graph(g);
    std::size_t expected = 0;
    for (auto d : degrees(g)) expected += d * (d - (d ? 1 : 0)) / 2;
    std::size_t brute = 0;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      for (std::size_t j = i + 1; j < g.edges.size(); ++j) {
        const auto& [a, b] = g.edges[i];
        const auto& [c, d] = g.edges[j];
        brute += (a == c || a == d || b == c || b == d);
      }
    EXPECT_EQ(l.edges.size(), expected);
    EXPECT_EQ(l.edges.size(), brute);
    EXPECT_EQ(l.num_features(), n);
    for (std::size_t e = 0; e < l.num_nodes; ++e) EXPECT_EQ(l.features.row_nnz(e), 2u);
  }
}

TEST(LineGraph, DirectedRecordsKeepOneNodeEach) {
  const std::vector<Edge> records{{0, 1}, {1, 0}, {1, 2}};
  const Graph l = build_line_graph(3, records);
  EXPECT_EQ(l.num_nodes, 3u);
  EXPECT_EQ(l.edges.size(), 3u);
}

TEST(LabelFeatures, Encodings) {
  const std::vector<LabelState> states{Observed{2}, Soft{{0.2, 0.8, 0.0, 0.0}}, Unset{}, Sampled{0}};
  const auto m = make_label_features<double>(states, 4);
  EXPECT_EQ(m.row(0), (ad::RowVector<double>(4) << 0, 0, 1, 0).finished());
  EXPECT_EQ(m.row(1), (ad::RowVector<double>(4) << 0.2, 0.8, 0, 0).finished());
  EXPECT_EQ(m.row(2), ad::RowVector<double>::Zero(4));
  EXPECT_EQ(m.row(3), (ad::RowVector<double>(4) << 1, 0, 0, 0).finished());
  const std::vector<LabelState> two{Soft{{0.2, 0.8}}};
  EXPECT_EQ(make_label_features<double>(two, 2).row(0), (ad::RowVector<double>(2) << 0.2, 0.8).finished());
}

TEST(LabelFeatures, RowsStochastic) {
  Rng rng(3);
  std::vector<LabelState> states;
  std::uniform_int_distribution<int> cls(0, 4);
  for (int i = 0; i < 50; ++i) {
    if (i % 3 == 0) states.push_back(Observed{cls(rng)});
    if (i % 3 == 1) states.push_back(Sampled{cls(rng)});
    if (i % 3 == 2) {
      const auto p = testing::random_stochastic<double>(1, 5, rng);
      states.push_back(Soft{{p.data(), p.data() + 5}});
    }
  }
  const auto m = make_label_features<double>(states, 5);
  for (Eigen::Index r = 0; r < m.rows(); ++r) EXPECT_NEAR(m.row(r).sum(), 1.0, 1e-6);
}

TEST(LabelFeatures, RejectsBadClassAndWidth) {
  const std::vector<LabelState> bad_class{Observed{4}};
  EXPECT_THROW(make_label_features<double>(bad_class, 4), std::out_of_range);
  const std::vector<LabelState> bad_width{Soft{{0.5, 0.5}}};
  EXPECT_THROW(make_label_features<double>(bad_width, 3), std::invalid_argument);
}

TEST(Synthetic, PlantedPartitionShape) {
  PlantedPartitionConfig cfg;
  const Graph g = make_planted_partition(cfg);
  EXPECT_EQ(g.num_nodes, cfg.num_nodes);
  EXPECT_EQ(g.split.train.size(), cfg.train_per_class * cfg.num_classes);
  EXPECT_EQ(g.split.val.size(), cfg.val_size);
  EXPECT_EQ(g.split.test.size(), cfg.test_size);
  std::size_t same = 0;
  for (const auto& [u, v] : g.edges) same += *g.labels[u] == *g.labels[v];
  EXPECT_GT(static_cast<double>(same) / static_cast<double>(g.edges.size()), 0.65);
  EXPECT_EQ(make_planted_partition(cfg), g);
}

TEST(GraphHelpers, NeighborsAndUnlabeled) {
  const Graph g = load_dataset(kData / "mini_dataset.json");
  const auto nbrs = neighbor_lists(g.num_nodes, g.edges);
  std::size_t total = 0;
  for (const auto& l : nbrs) total += l.size();
  EXPECT_EQ(total, 2 * g.edges.size());
  const auto u = unlabeled_nodes(g);
  EXPECT_EQ(u.size(), g.num_nodes - g.split.train.size());
  const std::set<NodeId> train(g.split.train.begin(), g.split.train.end());
  for (NodeId n : u) EXPECT_FALSE(train.count(n));
}

}  // namespace
}  // namespace gmnn::graph
