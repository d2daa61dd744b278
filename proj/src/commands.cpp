#include "qdrive/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qdrive {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kDedupStage = 4;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing artifact " + path);
  return json::parse(in);
}

// Write-once: written to a temporary name, then renamed into place.
void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
  }
  fs::rename(tmp, path);
}

void write_telemetry_log(const std::string& artifact, const std::vector<TelemetryRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += json{{"iteration", r.iteration}, {"params_hash", r.params_hash}, {"value", r.value},
                {"evaluations", r.evaluations}}
               .dump() +
           "\n";
  }
  const std::string base = artifact.substr(0, artifact.size() - std::string(".json").size());
  write_file(base + ".telemetry.jsonl", out);
}

}  // namespace

json telemetry_json(const EstimatorTelemetry& t) {
  return {{"circuits", t.circuits},
          {"overlap_circuits", t.overlap_circuits},
          {"identity_word_circuits", t.identity_word_circuits},
          {"readout_clamps", t.readout_clamps},
          {"circuits_by_word", t.circuits_by_word},
          {"zne_branches", t.zne_branches}};
}

BatchRunner::BatchRunner(RunPlan plan) : plan_(std::move(plan)) {
  plan_.validate();
  for (Parity p : plan_.parities) channels_[p] = std::make_unique<Channel>(build_pipeline_channel(plan_, p));
}

std::map<Parity, const Channel*> BatchRunner::channels() const {
  std::map<Parity, const Channel*> out;
  for (const auto& [p, ch] : channels_) out[p] = ch.get();
  return out;
}

EstimatorTelemetry BatchRunner::telemetry() const {
  std::lock_guard lock(mu_);
  return telemetry_;
}

void BatchRunner::run_node(const TaskNode& node, bool degraded) {
  const Channel& ch = channel(node.parity);
  json artifact{{"task", node.id}, {"kind", to_string(node.kind)}, {"degraded", degraded}};
  StageLog log;
  bool has_log = false;

  switch (node.kind) {
    case TaskKind::hermitian: {
      std::vector<std::vector<double>> priors;
      if (!node.inputs.empty()) priors = read_json(node.inputs.front()).at("result").get<HermitianResult>().priors;
      artifact["result"] = run_hermitian_stage(node.index, priors, ch, plan_, node.run, &log);
      has_log = true;
      break;
    }
    case TaskKind::nonhermitian: {
      const auto h = read_json(node.inputs.front()).at("result").get<HermitianResult>();
      artifact["result"] = run_nonhermitian_stage(h, ch, plan_, &log);
      has_log = true;
      break;
    }
    case TaskKind::pool: {
      std::vector<ResonanceRecord> records;
      json missing = json::array();
      for (const auto& in : node.inputs) {
        if (!fs::exists(in)) {
          missing.push_back(fs::path(in).stem().string());
          continue;
        }
        records.push_back(read_json(in).at("result").get<ResonanceRecord>());
      }
      EstimatorContext ctx(plan_.estimator, task_seed(plan_, node.parity, node.run, 0, kDedupStage));
      records = deduplicate(std::move(records), plan_.overlap_tol, ctx);
      filter_spurious(records, ch, plan_.thresholds);
      log.estimator = ctx.telemetry();
      artifact["records"] = records;
      artifact["missing"] = missing;
      break;
    }
    case TaskKind::sort: {
      std::vector<ResonanceRecord> records;
      json missing = json::array();
      for (const auto& in : node.inputs) {
        if (!fs::exists(in)) {
          missing.push_back(fs::path(in).stem().string());
          continue;
        }
        const json doc = read_json(in);
        for (const auto& r : doc.at("records")) records.push_back(r.get<ResonanceRecord>());
      }
      const PoolResult pooled = pool_batches(records, {node.parity}, plan_.states);
      json absent = json::array();
      for (const auto& [p, i] : pooled.absent) absent.push_back(i);
      artifact["winners"] = pooled.winners;
      artifact["absent"] = absent;
      artifact["missing"] = missing;
      break;
    }
  }
  artifact["estimator"] = telemetry_json(log.estimator);
  if (has_log) write_telemetry_log(node.output, log.optimizer);
  write_file(node.output, artifact.dump(1) + "\n");
  std::lock_guard lock(mu_);
  merge_telemetry(telemetry_, log.estimator);
}

BatchResult run_batch(BatchRunner& runner, const fs::path& artifact_root, int workers, const TaskBody& body) {
  BatchResult res;
  res.dag = build_dag(runner.plan(), artifact_root);
  const TaskBody run = body ? body : TaskBody([&](const TaskNode& n, bool d) { runner.run_node(n, d); });
  res.trace = execute(res.dag, workers, run);

  for (const auto& node : res.dag.nodes()) {
    if (node.kind != TaskKind::sort) continue;
    if (node.status != TaskStatus::done || !fs::exists(node.output)) {
      for (int i = 1; i <= runner.plan().states; ++i) res.absent.emplace_back(node.parity, i);
      continue;
    }
    const json j = read_json(node.output);
    for (const auto& w : j.at("winners")) res.winners.push_back(w.get<ResonanceRecord>());
    for (const auto& a : j.at("absent")) res.absent.emplace_back(node.parity, a.get<int>());
  }
  std::sort(res.winners.begin(), res.winners.end(), [](const ResonanceRecord& a, const ResonanceRecord& b) {
    return std::tie(a.parity, a.index) < std::tie(b.parity, b.index);
  });
  res.table = build_table(runner.plan(), res.winners, runner.channels());
  res.telemetry = runner.telemetry();
  res.partial = res.trace.failed() > 0 || res.trace.skipped() > 0 ||
                std::any_of(res.table.entries.begin(), res.table.entries.end(),
                            [](const TableEntry& e) { return !e.energy; });
  return res;
}

fs::path run_directory(const RunConfig& config, const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  const fs::path dir(config.output_dir);
  return dir.is_absolute() ? dir : output_root() / dir;
}

int cmd_diag(const RunConfig& config, const CommandOptions& opts, std::ostream& out) {
  const RunPlan& plan = config.plan;
  std::string csv = "version,q,parity,index,re,im,class,cap_weight\n";
  json doc = json::object();
  for (Parity p : plan.parities) {
    Channel ch = build_pipeline_channel(plan, p);
    classify_spectrum(ch.oracle, ch.model.basis, ch.model.grid, plan.potential, plan.thresholds);
    json arr = json::array();
    for (Eigen::Index k = 0; k < ch.oracle.eigenvalues.size(); ++k) {
      const cplx e = ch.oracle.eigenvalues(k);
      const auto cls = ch.oracle.classes[static_cast<std::size_t>(k)];
      const double w = cap_region_weight(ch.oracle.eigenvectors.col(k), ch.model.basis, ch.model.grid, plan.potential.x0);
      arr.push_back({{"re", e.real()}, {"im", e.imag()}, {"classification", to_string(cls)}, {"cap_weight", w}});
      csv += std::to_string(kCsvVersion) + "," + std::to_string(plan.qubits) + "," + std::string(to_string(p)) + "," +
             std::to_string(k + 1) + "," + num(e.real()) + "," + num(e.imag()) + "," + std::string(to_string(cls)) +
             "," + num(w) + "\n";
    }
    doc[std::string(to_string(p))] = arr;
  }
  write_file(opts.output / "spectrum.json", doc.dump(1) + "\n");
  write_file(opts.output / "spectrum.csv", csv);
  out << csv;
  return kExitOk;
}

namespace {

int prepare_run_dir(const RunConfig& config, const CommandOptions& opts, std::ostream& out) {
  const fs::path batch_dir = opts.output / "runs" / std::to_string(config.plan.batch_id);
  if (fs::exists(batch_dir) && !fs::is_empty(batch_dir)) {
    if (!opts.force) {
      out << "error: artifacts already exist in " << batch_dir.string() << " (use --force to replace them)\n";
      return kExitConfig;
    }
    fs::remove_all(batch_dir);
  }
  write_file(opts.output / "config.json", config_to_json(config).dump(2) + "\n");
  return kExitOk;
}

void report_batch(const BatchResult& res, const fs::path& dir, std::ostream& out) {
  write_file(dir / "trace.jsonl", res.trace.to_jsonl());
  write_file(dir / "winners.csv", winners_csv(res.winners));
  write_file(dir / "table.csv", table_csv(res.table));
  write_file(dir / "telemetry.json", telemetry_json(res.telemetry).dump(1) + "\n");
  out << table_csv(res.table);
  for (const auto& e : res.trace.events)
    if (e.status == TaskStatus::failed) out << "failed: " << e.id << ": " << e.error << "\n";
  if (res.trace.skipped() > 0) out << "skipped tasks: " << res.trace.skipped() << "\n";
  for (const auto& [p, i] : res.absent) out << "absent: " << to_string(p) << " state " << i << "\n";
}

}  // namespace

int cmd_run(const RunConfig& config, const CommandOptions& opts, std::ostream& out) {
  if (const int rc = prepare_run_dir(config, opts, out); rc != kExitOk) return rc;
  BatchRunner runner(config.plan);
  const BatchResult res = run_batch(runner, opts.output / "runs", config.workers);
  report_batch(res, opts.output, out);
  return res.partial ? kExitPartial : kExitOk;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& out) {
  if (config.plan.estimator.tier != Tier::noisy) {
    out << "error: config key 'tier': sweep needs the noisy tier\n";
    return kExitConfig;
  }
  if (fs::exists(opts.output / "sweep") && !fs::is_empty(opts.output / "sweep")) {
    if (!opts.force) {
      out << "error: artifacts already exist in " << (opts.output / "sweep").string() << " (use --force)\n";
      return kExitConfig;
    }
    fs::remove_all(opts.output / "sweep");
  }
  write_file(opts.output / "config.json", config_to_json(config).dump(2) + "\n");

  std::string csv =
      "version,reduction,longevity_us,repeat,parity,state,pseudovariance,fidelity_error,re,im,class,status\n";
  bool partial = false;
  int point = 0;
  for (double reduction : config.sweep.reductions) {
    for (double longevity : config.sweep.longevities_us) {
      for (int rep = 0; rep < config.sweep.repeats; ++rep, ++point) {
        RunConfig c = config;
        c.gate_noise_reduction = reduction;
        c.qubit_longevity_us = longevity;
        c.plan.seed = mix_seed(config.plan.seed, static_cast<std::uint64_t>(rep));
        c.plan.batch_id = static_cast<std::uint64_t>(point);
        const std::string prefix = std::to_string(kCsvVersion) + "," + num(reduction) + "," +
                                   (std::isinf(longevity) ? std::string("inf") : num(longevity)) + "," +
                                   std::to_string(rep) + ",";
        try {
          c.plan.estimator.noise = resolved_noise(c);
          BatchRunner runner(c.plan);
          const BatchResult res = run_batch(runner, opts.output / "sweep", c.workers);
          partial = partial || res.trace.failed() > 0 || res.trace.skipped() > 0;
          for (Parity p : c.plan.parities) {
            for (int i = 1; i <= c.plan.states; ++i) {
              const auto it = std::find_if(res.winners.begin(), res.winners.end(), [&](const ResonanceRecord& r) {
                return r.parity == p && r.index == i;
              });
              csv += prefix + std::string(to_string(p)) + "," + std::to_string(i) + ",";
              if (it == res.winners.end()) {
                csv += ",,,,,absent\n";
                partial = true;
                continue;
              }
              csv += num(it->pseudovariance) + "," + (it->fidelity_error ? num(*it->fidelity_error) : "") + "," +
                     num(it->energy.real()) + "," + num(it->energy.imag()) + "," +
                     std::string(to_string(it->classification)) + "," + (it->fidelity_error ? "ok" : "no_oracle") +
                     "\n";
            }
          }
        } catch (const std::exception& e) {
          partial = true;
          for (Parity p : c.plan.parities)
            for (int i = 1; i <= c.plan.states; ++i)
              csv += prefix + std::string(to_string(p)) + "," + std::to_string(i) + ",,,,,,error\n";
          out << "grid point " << point << " failed: " << e.what() << "\n";
        }
      }
    }
  }
  write_file(opts.output / "sweep.csv", csv);
  out << csv;
  return partial ? kExitPartial : kExitOk;
}

int cmd_export_dag(const RunConfig& config, const CommandOptions& opts, std::ostream& out) {
  const fs::path root = fs::absolute(opts.output);
  const fs::path frozen = root / "config.json";
  write_file(frozen, config_to_json(config).dump(2) + "\n");
  const TaskDag dag = build_dag(config.plan, root / "runs");
  const DagmanFiles files = export_dagman(dag, "qdrive", frozen.string());
  const fs::path dagdir = root / "dagman";
  write_file(dagdir / "qdrive.dag", files.dag);
  for (const auto& [name, text] : files.submit) write_file(dagdir / name, text);
  out << files.dag;
  return kExitOk;
}

int cmd_task(const RunConfig& config, const std::string& task, const CommandOptions& opts, std::ostream& out) {
  TaskDag dag = build_dag(config.plan, opts.output / "runs");
  const auto n = dag.find(task);
  if (!n) {
    out << "error: unknown task '" << task << "'\n";
    return kExitConfig;
  }
  const TaskNode& node = dag.nodes()[*n];
  bool degraded = false;
  for (const auto& in : node.inputs) {
    if (fs::exists(in)) continue;
    if (node.kind == TaskKind::pool || node.kind == TaskKind::sort) {
      degraded = true;
    } else {
      out << "error: input artifact " << in << " is missing\n";
      return kExitPartial;
    }
  }
  BatchRunner runner(config.plan);
  runner.run_node(node, degraded);
  out << node.output << "\n";
  return degraded ? kExitPartial : kExitOk;
}

int cmd_zne_demo(const std::vector<ZnePoints>& points, std::ostream& out) {
  std::vector<ZnePoints> rows = points;
  if (rows.empty()) {
    const std::size_t n = 100000;
    rows = {{1.0, 1.0, 1.0, n, ZneMode::expectation},  {0.9, 0.7, 0.5, n, ZneMode::expectation},
            {0.8, 0.6, 0.6, n, ZneMode::expectation},  {0.5, 0.4, 0.7, n, ZneMode::expectation},
            {0.5, 0.7, 0.6, n, ZneMode::expectation},  {0.6, 0.4, 0.6001, n, ZneMode::expectation}};
  }
  out << "x1,x3,x5,shots,mode,z35,branch,x0\n";
  for (const auto& p : rows) {
    const ZneResult r = zne_extrapolate(p);
    out << num(p.x1) << "," << num(p.x3) << "," << num(p.x5) << "," << p.shots << ","
        << (p.mode == ZneMode::expectation ? "expectation" : "probability") << "," << num(r.z35) << ","
        << to_string(r.branch) << "," << num(r.x0) << "\n";
  }
  return kExitOk;
}

}  // namespace qdrive
