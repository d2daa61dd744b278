#pragma once

// Command implementations behind the qdrive executable. Each returns a
// process exit code (0 ok, 2 config error, 3 partial failure).

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "qdrive/config.hpp"
#include "qdrive/mitigation.hpp"
#include "qdrive/orchestrator.hpp"
#include "qdrive/pipeline.hpp"

namespace qdrive {

/// Task bodies of one batch. Tasks talk only through JSON artifacts.
class BatchRunner {
 public:
  explicit BatchRunner(RunPlan plan);

  const RunPlan& plan() const { return plan_; }
  const Channel& channel(Parity p) const { return *channels_.at(p); }
  std::map<Parity, const Channel*> channels() const;

  void run_node(const TaskNode& node, bool degraded);
  EstimatorTelemetry telemetry() const;

 private:
  RunPlan plan_;
  std::map<Parity, std::unique_ptr<Channel>> channels_;
  mutable std::mutex mu_;
  EstimatorTelemetry telemetry_;
};

struct BatchResult {
  TaskDag dag;
  ExecutionTrace trace;
  std::vector<ResonanceRecord> winners;
  std::vector<std::pair<Parity, int>> absent;
  EnergyTable table;
  EstimatorTelemetry telemetry;
  bool partial = false;
};

/// build_dag + execute + collect the sort artifacts. `body` replaces the
/// runner's task bodies when set (used for fault injection).
BatchResult run_batch(BatchRunner& runner, const std::filesystem::path& artifact_root, int workers,
                      const TaskBody& body = {});

nlohmann::json telemetry_json(const EstimatorTelemetry& t);

struct CommandOptions {
  std::filesystem::path output;  // resolved run directory
  bool force = false;            // replace existing artifacts
};

/// Run directory: `explicit_dir` if given, else output_root() / output_dir.
std::filesystem::path run_directory(const RunConfig& config, const std::string& explicit_dir = {});

int cmd_diag(const RunConfig& config, const CommandOptions& opts, std::ostream& out);
int cmd_run(const RunConfig& config, const CommandOptions& opts, std::ostream& out);
int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& out);
int cmd_export_dag(const RunConfig& config, const CommandOptions& opts, std::ostream& out);
/// Runs one node of the batch described by the frozen config in `opts.output`.
int cmd_task(const RunConfig& config, const std::string& task, const CommandOptions& opts, std::ostream& out);
/// Branch table for one triple, or for the builtin worked triples when
/// `points` is empty.
int cmd_zne_demo(const std::vector<ZnePoints>& points, std::ostream& out);

}  // namespace qdrive
