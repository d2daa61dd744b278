#include "qdrive/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace qdrive {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::hermitian: return "hermitian";
    case TaskKind::nonhermitian: return "nonhermitian";
    case TaskKind::pool: return "pool";
    case TaskKind::sort: return "sort";
  }
  return "unknown";
}

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::ready: return "ready";
    case TaskStatus::running: return "running";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
    case TaskStatus::skipped: return "skipped";
  }
  return "unknown";
}

std::size_t TaskDag::add(TaskNode node) {
  if (index_.count(node.id)) throw std::logic_error("duplicate task id " + node.id);
  const std::size_t n = nodes_.size();
  index_[node.id] = n;
  nodes_.push_back(std::move(node));
  parents_.emplace_back();
  children_.emplace_back();
  return n;
}

void TaskDag::connect(std::size_t parent, std::size_t child) {
  children_.at(parent).push_back(child);
  parents_.at(child).push_back(parent);
}

std::vector<std::pair<std::string, std::string>> TaskDag::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t p = 0; p < nodes_.size(); ++p)
    for (std::size_t c : children_[p]) out.emplace_back(nodes_[p].id, nodes_[c].id);
  return out;
}

std::optional<std::size_t> TaskDag::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> TaskDag::topological_order() const {
  std::vector<std::size_t> indegree(nodes_.size());
  for (std::size_t n = 0; n < nodes_.size(); ++n) indegree[n] = parents_[n].size();
  std::queue<std::size_t> q;
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    if (indegree[n] == 0) q.push(n);
  std::vector<std::size_t> order;
  while (!q.empty()) {
    const std::size_t n = q.front();
    q.pop();
    order.push_back(n);
    for (std::size_t c : children_[n])
      if (--indegree[c] == 0) q.push(c);
  }
  if (order.size() != nodes_.size()) throw std::logic_error("task graph has a cycle");
  return order;
}

std::string task_id(TaskKind kind, Parity parity, int run, int index) {
  const std::string p(to_string(parity));
  switch (kind) {
    case TaskKind::hermitian: return "h-" + p + "-r" + std::to_string(run) + "-i" + std::to_string(index);
    case TaskKind::nonhermitian: return "n-" + p + "-r" + std::to_string(run) + "-i" + std::to_string(index);
    case TaskKind::pool: return "pool-" + p + "-r" + std::to_string(run);
    case TaskKind::sort: return "sort-" + p;
  }
  return "unknown";
}

TaskDag build_dag(const RunPlan& plan, const std::filesystem::path& artifact_root) {
  TaskDag dag;
  const std::filesystem::path batch_dir = artifact_root / std::to_string(plan.batch_id);
  for (Parity parity : plan.parities) {
    const std::filesystem::path parity_dir = batch_dir / std::string(to_string(parity));
    auto artifact = [&](const std::string& id, const std::string& run_dir) {
      return (parity_dir / run_dir / (id + ".json")).string();
    };
    std::vector<std::size_t> pools;
    for (int run = 0; run < plan.batch; ++run) {
      const std::string run_dir = std::to_string(run);
      std::vector<std::size_t> herm, nonherm;
      for (int i = 1; i <= plan.states; ++i) {
        TaskNode h{task_id(TaskKind::hermitian, parity, run, i), TaskKind::hermitian, parity, run, i, {}, {}, {}};
        h.output = artifact(h.id, run_dir);
        if (i > 1) h.inputs.push_back(dag.nodes()[herm.back()].output);
        herm.push_back(dag.add(std::move(h)));
        if (i > 1) dag.connect(herm[herm.size() - 2], herm.back());

        TaskNode n{task_id(TaskKind::nonhermitian, parity, run, i), TaskKind::nonhermitian, parity, run, i, {}, {}, {}};
        n.output = artifact(n.id, run_dir);
        n.inputs.push_back(dag.nodes()[herm.back()].output);
        nonherm.push_back(dag.add(std::move(n)));
        dag.connect(herm.back(), nonherm.back());
      }
      TaskNode pool{task_id(TaskKind::pool, parity, run, 0), TaskKind::pool, parity, run, plan.states + 1, {}, {}, {}};
      pool.output = artifact(pool.id, run_dir);
      for (std::size_t n : nonherm) pool.inputs.push_back(dag.nodes()[n].output);
      pools.push_back(dag.add(std::move(pool)));
      for (std::size_t n : nonherm) dag.connect(n, pools.back());
    }
    TaskNode sort{task_id(TaskKind::sort, parity, 0, 0), TaskKind::sort, parity, plan.batch, 0, {}, {}, {}};
    sort.output = (parity_dir / (sort.id + ".json")).string();
    for (std::size_t p : pools) sort.inputs.push_back(dag.nodes()[p].output);
    const std::size_t s = dag.add(std::move(sort));
    for (std::size_t p : pools) dag.connect(p, s);
  }
  return dag;
}

std::size_t ExecutionTrace::failed() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                [](const TraceEvent& e) { return e.status == TaskStatus::failed; }));
}

std::size_t ExecutionTrace::skipped() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                [](const TraceEvent& e) { return e.status == TaskStatus::skipped; }));
}

std::string ExecutionTrace::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    nlohmann::json j{{"id", e.id},         {"worker", e.worker},
                     {"start", e.start},   {"finish", e.finish},
                     {"status", to_string(e.status)}, {"degraded", e.degraded}};
    if (!e.error.empty()) j["error"] = e.error;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

bool is_collector(TaskKind k) { return k == TaskKind::pool || k == TaskKind::sort; }

// Readiness bookkeeping shared by both executors. Not thread safe by itself.
class Scheduler {
 public:
  explicit Scheduler(TaskDag& dag) : dag_(dag), unsettled_(dag.size()), bad_parent_(dag.size(), false) {
    dag.topological_order();
    for (std::size_t n = 0; n < dag.size(); ++n) {
      unsettled_[n] = dag.parents(n).size();
      dag.nodes()[n].status = TaskStatus::pending;
      if (unsettled_[n] == 0) make_ready(n);
    }
  }

  bool has_ready() const { return !ready_.empty(); }
  bool finished() const { return settled_ == dag_.size(); }

  std::size_t pop() {
    const auto it = ready_.begin();
    const std::size_t n = std::get<4>(*it);
    ready_.erase(it);
    dag_.nodes()[n].status = TaskStatus::running;
    return n;
  }

  bool degraded(std::size_t n) const { return bad_parent_[n]; }

  /// Marks n settled; returns nodes skipped as a consequence.
  std::vector<std::size_t> settle(std::size_t n, TaskStatus status) {
    std::vector<std::size_t> skipped;
    std::vector<std::pair<std::size_t, TaskStatus>> stack{{n, status}};
    while (!stack.empty()) {
      const auto [cur, st] = stack.back();
      stack.pop_back();
      dag_.nodes()[cur].status = st;
      ++settled_;
      if (st == TaskStatus::skipped) skipped.push_back(cur);
      for (std::size_t c : dag_.children(cur)) {
        if (st != TaskStatus::done) bad_parent_[c] = true;
        if (--unsettled_[c] > 0) continue;
        if (bad_parent_[c] && !is_collector(dag_.nodes()[c].kind)) stack.emplace_back(c, TaskStatus::skipped);
        else make_ready(c);
      }
    }
    return skipped;
  }

 private:
  void make_ready(std::size_t n) {
    const TaskNode& t = dag_.nodes()[n];
    dag_.nodes()[n].status = TaskStatus::ready;
    ready_.emplace(t.run, t.index, static_cast<int>(t.kind), static_cast<int>(t.parity), n);
  }

  TaskDag& dag_;
  std::vector<std::size_t> unsettled_;
  std::vector<bool> bad_parent_;
  std::set<std::tuple<int, int, int, int, std::size_t>> ready_;
  std::size_t settled_ = 0;
};

void append_skipped(ExecutionTrace& trace, const TaskDag& dag, const std::vector<std::size_t>& nodes,
                    double at) {
  for (std::size_t s : nodes) {
    TraceEvent e;
    e.id = dag.nodes()[s].id;
    e.status = TaskStatus::skipped;
    e.start = e.finish = at;
    e.error = "ancestor did not complete";
    trace.events.push_back(std::move(e));
  }
}

}  // namespace

ExecutionTrace execute(TaskDag& dag, int workers, const TaskBody& body) {
  if (workers < 1) throw std::invalid_argument("executor needs at least one worker");
  Scheduler sched(dag);
  ExecutionTrace trace;
  std::vector<TraceEvent> done_events;
  std::vector<std::size_t> skipped_nodes;
  std::mutex mu;
  std::condition_variable cv;
  const auto t0 = std::chrono::steady_clock::now();
  auto now = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  auto worker = [&](int wid) {
    std::unique_lock lock(mu);
    while (true) {
      cv.wait(lock, [&] { return sched.has_ready() || sched.finished(); });
      if (sched.finished()) return;
      const std::size_t n = sched.pop();
      const bool degraded = sched.degraded(n);
      TraceEvent ev;
      ev.id = dag.nodes()[n].id;
      ev.worker = wid;
      ev.degraded = degraded;
      ev.start = now();
      const TaskNode node = dag.nodes()[n];
      lock.unlock();
      TaskStatus status = TaskStatus::done;
      try {
        body(node, degraded);
      } catch (const std::exception& e) {
        status = TaskStatus::failed;
        ev.error = e.what();
      } catch (...) {
        status = TaskStatus::failed;
        ev.error = "unknown failure";
      }
      lock.lock();
      ev.finish = now();
      ev.status = status;
      done_events.push_back(std::move(ev));
      const auto skipped = sched.settle(n, status);
      skipped_nodes.insert(skipped_nodes.end(), skipped.begin(), skipped.end());
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();

  std::stable_sort(done_events.begin(), done_events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.start < b.start; });
  trace.events = std::move(done_events);
  trace.makespan = now();
  append_skipped(trace, dag, skipped_nodes, trace.makespan);
  return trace;
}

ExecutionTrace execute_simulated(TaskDag& dag, int workers, const std::function<double(const TaskNode&)>& duration,
                                 const std::function<bool(const TaskNode&)>& fails) {
  if (workers < 1) throw std::invalid_argument("executor needs at least one worker");
  Scheduler sched(dag);
  ExecutionTrace trace;
  std::vector<std::size_t> skipped_nodes;
  using Running = std::tuple<double, int, std::size_t, std::size_t>;  // finish, worker, node, event
  std::priority_queue<Running, std::vector<Running>, std::greater<>> running;
  std::set<int> idle;
  for (int w = 0; w < workers; ++w) idle.insert(w);
  double clock = 0.0;

  while (!sched.finished()) {
    while (!idle.empty() && sched.has_ready()) {
      const int w = *idle.begin();
      idle.erase(idle.begin());
      const std::size_t n = sched.pop();
      const double d = duration(dag.nodes()[n]);
      if (!(d >= 0.0)) throw std::invalid_argument("task durations must be nonnegative");
      TraceEvent ev;
      ev.id = dag.nodes()[n].id;
      ev.worker = w;
      ev.start = clock;
      ev.finish = clock + d;
      ev.degraded = sched.degraded(n);
      trace.events.push_back(std::move(ev));
      running.emplace(clock + d, w, n, trace.events.size() - 1);
    }
    if (running.empty()) throw std::logic_error("simulated executor stalled");
    const auto [finish, w, n, ev] = running.top();
    running.pop();
    clock = finish;
    const bool failed = fails && fails(dag.nodes()[n]);
    trace.events[ev].status = failed ? TaskStatus::failed : TaskStatus::done;
    if (failed) trace.events[ev].error = "injected failure";
    idle.insert(w);
    const auto skipped = sched.settle(n, trace.events[ev].status);
    skipped_nodes.insert(skipped_nodes.end(), skipped.begin(), skipped.end());
  }
  trace.makespan = clock;
  append_skipped(trace, dag, skipped_nodes, clock);
  return trace;
}

DagmanFiles export_dagman(const TaskDag& dag, const std::string& executable, const std::string& config_path) {
  DagmanFiles out;
  std::ostringstream s;
  for (const auto& node : dag.nodes()) {
    const std::string sub = node.id + ".sub";
    s << "JOB " << node.id << " " << sub << "\n";
    std::ostringstream f;
    f << "universe = vanilla\n"
      << "executable = " << executable << "\n"
      << "arguments = task --config " << config_path << " --task " << node.id << "\n"
      << "output = " << node.id << ".out\n"
      << "error = " << node.id << ".err\n"
      << "log = qdrive.log\n"
      << "queue\n";
    out.submit[sub] = f.str();
  }
  for (std::size_t p = 0; p < dag.size(); ++p) {
    if (dag.children(p).empty()) continue;
    s << "PARENT " << dag.nodes()[p].id << " CHILD";
    for (std::size_t c : dag.children(p)) s << " " << dag.nodes()[c].id;
    s << "\n";
  }
  out.dag = s.str();
  return out;
}

ParsedDagman parse_dagman(const std::string& text) {
  ParsedDagman out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> jobs;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword) || keyword[0] == '#') continue;
    if (keyword == "JOB") {
      std::string id, sub;
      if (!(ls >> id >> sub)) fail("JOB needs a name and a submit file");
      if (!jobs.insert(id).second) fail("duplicate job " + id);
      out.jobs.push_back(id);
    } else if (keyword == "PARENT") {
      std::vector<std::string> parents, children;
      std::string tok;
      bool child_side = false;
      while (ls >> tok) {
        if (tok == "CHILD") {
          child_side = true;
          continue;
        }
        (child_side ? children : parents).push_back(tok);
      }
      if (parents.empty() || children.empty()) fail("PARENT line needs parents and children");
      for (const auto& p : parents)
        for (const auto& c : children) {
          if (!jobs.count(p) || !jobs.count(c)) fail("edge references an undeclared job");
          out.edges.emplace_back(p, c);
        }
    } else {
      fail("unknown keyword " + keyword);
    }
  }
  return out;
}

}  // namespace qdrive
