#include "gmnn/cli/cli.hpp"

#include "gmnn/tasks/tasks.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace gmnn::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw graph::DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw graph::DataError(path.string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw graph::DataError("cannot write " + path.string());
}

/// "--a.b v" and "--a.b=v" pairs left over after the fixed flags.
std::vector<std::pair<std::string, std::string>> dotted_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos) throw UsageError("unknown argument '" + a + "'");
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(a.substr(2), extras[++i]);
    } else {
      throw UsageError("option " + a + " needs a value");
    }
  }
  return out;
}

std::size_t sidecar_nodes(const fs::path& path) {
  const auto doc = read_json(path);
  if (!doc.is_object() || !doc.contains("num_nodes") || !doc["num_nodes"].is_number_unsigned()) {
    throw graph::DataError(path.string() + ": missing field 'num_nodes'");
  }
  return doc["num_nodes"].get<std::size_t>();
}

struct RunArgs {
  std::string task;
  std::string method = "gmnn";
  std::string dataset;
  std::string edges;
  std::size_t seeds = 10;
  std::vector<std::uint64_t> seed_list;
  std::size_t parallel = 1;
  std::string out_dir;
  std::string name;
  std::string config;
};

int do_run(const RunArgs& a, const std::vector<std::string>& extras, std::ostream& out) {
  tasks::TaskConfig cfg;
  try {
    const auto task = tasks::task_from_string(a.task);
    const auto method = tasks::method_from_string(a.method);
    const std::string stem = fs::path(a.dataset.empty() ? a.edges : a.dataset).stem().string();
    cfg = tasks::default_config(task, method, stem);
    if (!a.config.empty()) {
      const auto doc = read_json(a.config);
      cfg = tasks::config_from_json(doc.contains("config") ? doc["config"] : doc);
      cfg.task = task;
      cfg.method = method;
      tasks::check_supported(task, method);
    }
    for (const auto& [key, value] : dotted_overrides(extras)) tasks::apply_override(cfg, key, value);
  } catch (const graph::DataError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (cfg.task == tasks::Task::Link ? a.edges.empty() : a.dataset.empty()) {
    throw UsageError(cfg.task == tasks::Task::Link ? "--edges is required for the link task"
                                                   : "--dataset is required");
  }
  std::vector<std::uint64_t> seeds = a.seed_list;
  if (seeds.empty()) {
    if (a.seeds == 0) throw UsageError("--seeds must be at least 1");
    for (std::uint64_t s = 0; s < a.seeds; ++s) seeds.push_back(s);
  }

  const std::string label = fs::path(a.dataset.empty() ? a.edges : a.dataset).stem().string();
  tasks::RunResult result;
  switch (cfg.task) {
    case tasks::Task::Object:
      result = tasks::run_object_classification(graph::load_dataset(a.dataset), label, cfg, seeds, a.parallel);
      break;
    case tasks::Task::Unsupervised:
      result = tasks::run_unsupervised(graph::load_dataset(a.dataset), label, cfg, seeds, a.parallel);
      break;
    case tasks::Task::Link: {
      const std::size_t n = a.dataset.empty() ? sidecar_nodes(a.edges) : graph::load_dataset(a.dataset).num_nodes;
      const auto records = graph::load_weighted_edges(a.edges, n);
      result = tasks::run_link_classification(n, records, label, cfg, seeds, a.parallel);
      break;
    }
  }

  fs::path dir = a.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("GMNN_OUTPUT_DIR");
    dir = env && *env ? fs::path(env) : fs::current_path();
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw graph::DataError("cannot create " + dir.string() + ": " + ec.message());
  const std::string name =
      a.name.empty() ? tasks::to_string(cfg.task) + "_" + tasks::to_string(cfg.method) + "_" + label : a.name;
  write_file(dir / (name + ".json"), result.to_json().dump(2) + "\n");
  write_file(dir / (name + ".history.csv"), result.histories_csv());
  out << tasks::to_string(cfg.task) << ' ' << tasks::to_string(cfg.method) << ' ' << label << ": "
      << tasks::format_mean_std(result.summary()) << " (" << seeds.size() << " seeds, "
      << tasks::to_string(cfg.em.metric) << ") -> " << (dir / (name + ".json")).string() << '\n';
  return kOk;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
  return buf;
}

}  // namespace

std::string format_table(const std::vector<nlohmann::json>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to tabulate");
  std::vector<std::string> methods, datasets;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& r : reports) {
    const auto method = r.at("method").get<std::string>();
    const auto dataset = r.at("dataset").get<std::string>();
    remember(methods, method);
    remember(datasets, dataset);
    cells[{method, dataset}] = r.at("mean").is_number() ? percent(r.at("mean").get<double>()) : "";
  }
  std::size_t first = std::string("method").size();
  for (const auto& m : methods) first = std::max(first, m.size());
  std::vector<std::size_t> widths;
  for (const auto& d : datasets) widths.push_back(std::max<std::size_t>(d.size(), 5));

  std::string out;
  auto pad_right = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w - s.size(), ' ') + s; };
  out += pad_right("method", first);
  for (std::size_t i = 0; i < datasets.size(); ++i) out += "  " + pad_left(datasets[i], widths[i]);
  out += '\n';
  for (const auto& m : methods) {
    std::string line = pad_right(m, first);
    for (std::size_t i = 0; i < datasets.size(); ++i) {
      const auto it = cells.find({m, datasets[i]});
      line += "  " + pad_left(it == cells.end() ? "" : it->second, widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph Markov neural networks: training, baselines and benchmark reports"};
  app.require_subcommand(1);

  RunArgs a;
  auto* run_cmd = app.add_subcommand("run", "train and evaluate one method on one dataset");
  run_cmd->allow_extras();
  run_cmd->add_option("--task", a.task, "object, link or unsup")->required();
  run_cmd->add_option("--method", a.method, "gmnn, gcn, lp, self-train or gmnn-nonamortized");
  run_cmd->add_option("--dataset", a.dataset, "portable dataset JSON");
  run_cmd->add_option("--edges", a.edges, "weighted edge sidecar JSON (link task)");
  run_cmd->add_option("--seeds", a.seeds, "number of seeds, 0..N-1");
  run_cmd->add_option("--seed-list", a.seed_list, "explicit seeds (overrides --seeds)");
  run_cmd->add_option("--parallel", a.parallel, "worker threads across seeds");
  run_cmd->add_option("--out", a.out_dir, "output directory");
  run_cmd->add_option("--name", a.name, "report file stem");
  run_cmd->add_option("--config", a.config, "config or report JSON to start from");

  std::vector<std::string> report_paths;
  auto* table_cmd = app.add_subcommand("table", "compare reports");
  table_cmd->add_option("reports", report_paths, "report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "gmnn: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*run_cmd) return do_run(a, run_cmd->remaining(), out);
    std::vector<nlohmann::json> reports;
    for (const auto& p : report_paths) reports.push_back(read_json(p));
    out << format_table(reports);
    return kOk;
  } catch (const UsageError& e) {
    err << "gmnn: " << e.what() << '\n';
    return kUsage;
  } catch (const graph::DataError& e) {
    err << "gmnn: " << e.what() << '\n';
    return kData;
  } catch (const nlohmann::json::exception& e) {
    err << "gmnn: malformed report: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "gmnn: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace gmnn::cli
