#include "gmnn/cli/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gmnn::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kData = GMNN_TEST_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "gmnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gmnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<std::string> quick_run(const std::string& name) const {
    return {"run", "--task", "object", "--dataset", (kData / "mini_dataset.json").string(), "--out", dir_.string(),
            "--name", name, "--em.epochs_pretrain", "10", "--em.epochs_p=5", "--em.epochs_q", "5"};
  }

  fs::path dir_;
};

TEST_F(Cli, RunWritesReportAndHistory) {
  auto args = quick_run("r");
  args.insert(args.end(), {"--seeds", "2"});
  const auto r = invoke(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(dir_ / "r.json"));
  EXPECT_EQ(report["seeds"], nlohmann::json::array({0, 1}));
  EXPECT_EQ(report["per_seed"].size(), 2u);
  EXPECT_TRUE(report.contains("mean"));
  EXPECT_TRUE(report.contains("std"));
  EXPECT_EQ(report["config"]["em"]["epochs_p"], 5);
  EXPECT_EQ(slurp(dir_ / "r.history.csv").rfind("seed,iteration,phase", 0), 0u);
  EXPECT_NE(r.out.find("object gmnn mini_dataset"), std::string::npos);
}

TEST_F(Cli, IdenticalSeedsGiveIdenticalBytes) {
  for (const char* name : {"a", "b"}) {
    auto args = quick_run(name);
    args.insert(args.end(), {"--seeds", "1", "--seed-list", "7"});
    ASSERT_EQ(invoke(args).code, 0);
  }
  const auto a = slurp(dir_ / "a.json");
  EXPECT_EQ(a, slurp(dir_ / "b.json"));
  EXPECT_EQ(nlohmann::json::parse(a)["seeds"], nlohmann::json::array({7}));
}

TEST_F(Cli, ReportReplaysThroughConfig) {
  auto args = quick_run("first");
  args.insert(args.end(), {"--seed-list", "3", "--em.strategy.tau", "0.3"});
  ASSERT_EQ(invoke(args).code, 0);
  const auto replay = invoke({"run", "--task", "object", "--dataset", (kData / "mini_dataset.json").string(), "--out",
                              dir_.string(), "--name", "second", "--seed-list", "3", "--config",
                              (dir_ / "first.json").string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(slurp(dir_ / "first.json"), slurp(dir_ / "second.json"));
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  ::setenv("GMNN_OUTPUT_DIR", dir_.c_str(), 1);
  const auto r = invoke({"run", "--task", "object", "--method", "lp", "--dataset",
                         (kData / "mini_dataset.json").string(), "--seeds", "1"});
  ::unsetenv("GMNN_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "object_lp_mini_dataset.json"));
}

TEST_F(Cli, UsageErrors) {
  auto r = invoke({"run", "--task", "object", "--method", "gat", "--dataset", "x.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown method"), std::string::npos);
  EXPECT_EQ(invoke({"run", "--task", "graph", "--dataset", "x.json"}).code, 1);
  EXPECT_EQ(invoke({"run", "--task", "object", "--dataset", "x.json", "--frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"run", "--task", "object", "--dataset", "x.json", "--em.nothing", "1"}).code, 1);
  EXPECT_EQ(invoke({"run", "--task", "unsup", "--method", "lp", "--dataset", "x.json"}).code, 1);
  EXPECT_EQ(invoke({"run", "--task", "link", "--dataset", "x.json"}).code, 1);
  EXPECT_EQ(invoke({"run", "--dataset", "x.json"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
}

TEST_F(Cli, DataErrors) {
  auto r = invoke({"run", "--task", "object", "--dataset", (dir_ / "missing.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
  // The fixture has too few labeled links for the default 100/500 split.
  r = invoke({"run", "--task", "link", "--edges", (kData / "mini_edges.json").string(), "--out", dir_.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("labeled links"), std::string::npos);
}

TEST_F(Cli, LinkRunWithDatasetNodeCount) {
  const auto r = invoke({"run", "--task", "link", "--method", "gcn", "--dataset", (kData / "mini_dataset.json").string(),
                         "--edges", (kData / "mini_edges.json").string(), "--out", dir_.string(), "--name", "link",
                         "--link.train", "3", "--link.val", "3", "--seeds", "1", "--em.epochs_pretrain", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "link.json"))["metric"], "f1");
}

nlohmann::json report(const std::string& method, const std::string& dataset, double mean) {
  return {{"method", method}, {"dataset", dataset}, {"mean", mean}};
}

TEST(Table, SingleReportSingleRow) {
  EXPECT_EQ(format_table({report("gmnn", "cora", 0.834)}),
            "method   cora\n"
            "gmnn     83.4\n");
}

TEST(Table, MissingCellsAreBlank) {
  const auto t = format_table({report("gmnn", "cora", 0.834), report("gcn", "citeseer", 0.703),
                               report("gcn", "cora", 0.815)});
  EXPECT_EQ(t,
            "method   cora  citeseer\n"
            "gmnn     83.4\n"
            "gcn      81.5      70.3\n");
  EXPECT_THROW(format_table({}), std::invalid_argument);
}

TEST_F(Cli, TableCommand) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "x.json") << report("lp", "pubmed", 0.6304).dump();
  const auto r = invoke({"table", (dir_ / "x.json").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "method  pubmed\nlp        63.0\n");
  std::ofstream(dir_ / "bad.json") << "{";
  EXPECT_EQ(invoke({"table", (dir_ / "bad.json").string()}).code, 2);
}

}  // namespace
}  // namespace gmnn::cli
