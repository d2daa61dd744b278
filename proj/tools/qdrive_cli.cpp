#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdrive/commands.hpp"
#include "qdrive/config.hpp"

using namespace qdrive;

namespace {

struct Common {
  std::string config_path;
  std::string output;
  std::vector<std::string> overrides;
  std::optional<int> q, states, batch, workers;
  std::optional<long long> seed, shots;
  std::optional<std::string> tier;
  bool force = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "JSON run configuration");
  app->add_option("-o,--output", c.output, "run directory (default: $QDRIVE_OUTPUT_ROOT/<output_dir>)");
  app->add_option("--set", c.overrides, "override a config key, e.g. --set model.x0=7.5");
  app->add_option("--q", c.q, "qubit count");
  app->add_option("--N", c.states, "eigenstates per parity");
  app->add_option("--B", c.batch, "runs per batch");
  app->add_option("--tier", c.tier, "statevector, shots or noisy");
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--shots", c.shots, "shots per circuit");
  app->add_option("--workers", c.workers, "worker threads");
  app->add_flag("--force", c.force, "replace existing artifacts");
}

RunConfig resolve(const Common& c, std::string* source = nullptr) {
  nlohmann::json doc = nlohmann::json::object();
  std::string text;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("cannot read config file " + c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(c.config_path + ": " + e.what());
    }
  }
  if (c.q) doc["q"] = *c.q;
  if (c.states) doc["N"] = *c.states;
  if (c.batch) doc["B"] = *c.batch;
  if (c.tier) doc["tier"] = *c.tier;
  if (c.seed) doc["seed"] = *c.seed;
  if (c.shots) doc["shots"] = *c.shots;
  if (c.workers) doc["workers"] = *c.workers;
  for (const auto& o : c.overrides) apply_override(doc, o);
  if (source) *source = text;
  return parse_config(doc, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdrive: resonance states of CAP-augmented Hamiltonians via chained VQD and pseudovariance minimization"};
  app.require_subcommand(1);

  Common diag_opts, run_opts, sweep_opts, dag_opts, task_opts;
  auto* diag = app.add_subcommand("diag", "exact spectrum per parity (JSON + CSV)");
  add_common(diag, diag_opts);
  auto* run = app.add_subcommand("run", "execute one batch and write the resonance table");
  add_common(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "noisy pipeline over a gate-noise-reduction x longevity grid");
  add_common(sweep, sweep_opts);
  auto* dag = app.add_subcommand("export-dag", "write an HTCondor DAGMan description of the batch");
  add_common(dag, dag_opts);
  auto* task = app.add_subcommand("task", "run a single DAG node from its input artifacts");
  add_common(task, task_opts);
  std::string task_id;
  task->add_option("--task", task_id, "task id, e.g. h-even-r0-i1")->required();

  auto* zne = app.add_subcommand("zne-demo", "print the ZNE branch table");
  std::optional<double> x1, x3, x5;
  std::size_t zshots = 100000;
  std::string zmode = "expectation";
  zne->add_option("--x1", x1, "estimate at noise scale 1");
  zne->add_option("--x3", x3, "estimate at noise scale 3");
  zne->add_option("--x5", x5, "estimate at noise scale 5");
  zne->add_option("--shots", zshots, "shots per point");
  zne->add_option("--mode", zmode, "expectation or probability")->check(CLI::IsMember({"expectation", "probability"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (zne->parsed()) {
      std::vector<ZnePoints> pts;
      if (x1 || x3 || x5) {
        if (!(x1 && x3 && x5)) throw ConfigError("zne-demo needs all of --x1, --x3 and --x5");
        pts.push_back({*x1, *x3, *x5, zshots, zmode == "expectation" ? ZneMode::expectation : ZneMode::probability});
      }
      return cmd_zne_demo(pts, std::cout);
    }

    auto dispatch = [&](const Common& c, auto&& fn) {
      const RunConfig config = resolve(c);
      CommandOptions opts;
      opts.output = run_directory(config, c.output);
      opts.force = c.force;
      return fn(config, opts);
    };
    if (diag->parsed())
      return dispatch(diag_opts, [](const RunConfig& c, const CommandOptions& o) { return cmd_diag(c, o, std::cout); });
    if (run->parsed())
      return dispatch(run_opts, [](const RunConfig& c, const CommandOptions& o) { return cmd_run(c, o, std::cout); });
    if (sweep->parsed())
      return dispatch(sweep_opts, [](const RunConfig& c, const CommandOptions& o) { return cmd_sweep(c, o, std::cout); });
    if (dag->parsed())
      return dispatch(dag_opts, [](const RunConfig& c, const CommandOptions& o) { return cmd_export_dag(c, o, std::cout); });
    if (task->parsed()) {
      if (task_opts.output.empty() && !task_opts.config_path.empty())
        task_opts.output = std::filesystem::path(task_opts.config_path).parent_path().string();
      return dispatch(task_opts, [&](const RunConfig& c, const CommandOptions& o) {
        return cmd_task(c, task_id, o, std::cout);
      });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
