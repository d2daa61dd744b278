#pragma once

// Task graph of one batch, a scavenging thread-pool executor, a simulated-clock
// executor for scheduling tests, and HTCondor DAGMan export.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdrive/model.hpp"
#include "qdrive/pipeline.hpp"

namespace qdrive {

enum class TaskKind { hermitian, nonhermitian, pool, sort };
enum class TaskStatus { pending, ready, running, done, failed, skipped };

std::string_view to_string(TaskKind k);
std::string_view to_string(TaskStatus s);

struct TaskNode {
  std::string id;
  TaskKind kind = TaskKind::hermitian;
  Parity parity = Parity::even;
  int run = 0;    // B for sort nodes
  int index = 0;  // state index; N + 1 for pool, 0 for sort
  std::vector<std::string> inputs;
  std::string output;
  TaskStatus status = TaskStatus::pending;
};

class TaskDag {
 public:
  std::size_t add(TaskNode node);
  void connect(std::size_t parent, std::size_t child);

  const std::vector<TaskNode>& nodes() const { return nodes_; }
  std::vector<TaskNode>& nodes() { return nodes_; }
  const std::vector<std::size_t>& parents(std::size_t n) const { return parents_[n]; }
  const std::vector<std::size_t>& children(std::size_t n) const { return children_[n]; }
  std::vector<std::pair<std::string, std::string>> edges() const;
  std::optional<std::size_t> find(const std::string& id) const;
  /// Throws std::logic_error on a cycle.
  std::vector<std::size_t> topological_order() const;
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<TaskNode> nodes_;
  std::vector<std::vector<std::size_t>> parents_, children_;
  std::map<std::string, std::size_t> index_;
};

std::string task_id(TaskKind kind, Parity parity, int run, int index);

/// Per parity and run: hermitian(1) -> ... -> hermitian(N), hermitian(i) ->
/// nonhermitian(i), nonhermitian(i) -> pool(run); every pool -> sort(parity).
/// Artifacts live under root/<batch>/<parity>/<run>/<task-id>.json.
TaskDag build_dag(const RunPlan& plan, const std::filesystem::path& artifact_root);

struct TraceEvent {
  std::string id;
  int worker = -1;
  double start = 0.0;
  double finish = 0.0;
  TaskStatus status = TaskStatus::pending;
  bool degraded = false;
  std::string error;
};

struct ExecutionTrace {
  std::vector<TraceEvent> events;  // in start order; skipped nodes last
  double makespan = 0.0;
  std::size_t failed() const;
  std::size_t skipped() const;
  std::string to_jsonl() const;
};

/// Task body. `degraded` is true for a pool or sort node some of whose
/// parents did not complete. Exceptions mark the node failed.
using TaskBody = std::function<void(const TaskNode& node, bool degraded)>;

/// Thread-pool executor. Any idle worker claims the first ready node in
/// (run, index) order; descendants of a failed node are skipped, except that
/// pool and sort nodes still run once all their parents are settled.
ExecutionTrace execute(TaskDag& dag, int workers, const TaskBody& body);

/// Discrete-event version with declared durations; `fails` names nodes that
/// fail on completion.
ExecutionTrace execute_simulated(TaskDag& dag, int workers,
                                 const std::function<double(const TaskNode&)>& duration,
                                 const std::function<bool(const TaskNode&)>& fails = {});

struct DagmanFiles {
  std::string dag;
  std::map<std::string, std::string> submit;  // file name -> contents
};

/// "JOB <id> <id>.sub" per node, "PARENT <id> CHILD <ids...>" per node with
/// children, plus submit stubs running `qdrive task`.
DagmanFiles export_dagman(const TaskDag& dag, const std::string& executable, const std::string& config_path);

struct ParsedDagman {
  std::vector<std::string> jobs;
  std::vector<std::pair<std::string, std::string>> edges;
};

/// Throws std::invalid_argument with the line number on malformed input.
ParsedDagman parse_dagman(const std::string& text);

}  // namespace qdrive
