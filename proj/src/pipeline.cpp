#include "qdrive/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include "qdrive/simulator.hpp"

namespace qdrive {

namespace {
constexpr double kPi = 3.14159265358979323846;

enum Stage : int { kInit = 0, kHermitian = 1, kNonhermitian = 2, kFinal = 3 };

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

EstimatorContext stage_context(const RunPlan& plan, std::uint64_t seed) {
  return EstimatorContext(plan.estimator, seed);
}
}  // namespace

void RunPlan::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw std::invalid_argument(field + ": " + what);
  };
  if (qubits < 1 || qubits > 6) fail("q", "must be in [1, 6]");
  if (states < 1) fail("N", "must be >= 1");
  if (states > (1 << qubits)) fail("N", "exceeds the 2^q basis size");
  if (batch < 1) fail("B", "must be >= 1");
  if (parities.empty()) fail("parities", "at least one parity channel is required");
  if (!(potential.lambda > 0.0)) fail("lambda", "must be positive");
  if (!(potential.x0 < x_max)) fail("x0", "must be below x_max");
  if (!(overlap_tol > 0.0 && overlap_tol <= 1.0)) fail("overlap_tol", "must be in (0, 1]");
  if (!(penalty >= 0.0)) fail("penalty", "must be nonnegative");
  if (estimator.tier != Tier::statevector && estimator.shots == 0) fail("shots", "must be positive");
  if (estimator.tier != Tier::statevector && final_shots == 0) fail("final_shots", "must be positive");
  if (estimator.tier == Tier::noisy) {
    const int needed = qubits + (estimator.method == EstimatorMethod::hadamard ? 1 : 0);
    if (estimator.noise.size() < needed) fail("noise", "profile has fewer qubits than the circuits need");
  }
  for (const StateSlot* s : {&slots.bound, &slots.first_resonance, &slots.second_resonance}) {
    if (s->index < 1 || s->index > (1 << qubits)) fail("slots", "state index outside 1..2^q");
  }
}

OptimizerConfig default_hermitian_optimizer(Tier tier) {
  OptimizerConfig c;
  c.kind = OptimizerKind::nft;
  c.reset_interval = 32;
  if (tier == Tier::statevector) {
    c.max_iterations = 4096;
    c.max_evaluations = 16384;
    c.sweep_tolerance = 1e-10;
    c.check_sinusoid = true;
  } else {
    c.max_iterations = 512;
    c.max_evaluations = 2048;
  }
  return c;
}

OptimizerConfig default_nonhermitian_optimizer(Tier tier) {
  OptimizerConfig c;
  c.kind = OptimizerKind::nft;
  c.harmonics = 2;
  c.reset_interval = 32;
  c.target = 0.05;
  c.retries = 3;
  if (tier == Tier::statevector) {
    c.max_iterations = 2048;
    c.max_evaluations = 8448;
  } else {
    c.max_iterations = 512;
    c.max_evaluations = 2048;
  }
  return c;
}

Channel build_pipeline_channel(const RunPlan& plan, Parity parity) {
  const Grid grid(plan.x_max, plan.n_points);
  Channel ch{parity, build_channel(plan.potential, grid, parity, plan.qubits), {}, {}, {}, {}};
  ch.hermitian = decompose(ch.model.pair.hermitian).real_part();
  const PauliSum hn = decompose(ch.model.pair.nonhermitian());
  ch.pseudovariance = PseudovarianceOperators::from(hn);
  ch.cap = hn.imag_part();
  ch.oracle = exact_diagonalize(ch.model.pair);
  return ch;
}

std::uint64_t task_seed(const RunPlan& plan, Parity parity, int run, int index, int stage) {
  std::uint64_t s = mix_seed(plan.seed, plan.batch_id);
  s = mix_seed(s, parity == Parity::even ? 0 : 1);
  s = mix_seed(s, static_cast<std::uint64_t>(run));
  s = mix_seed(s, static_cast<std::uint64_t>(index));
  return mix_seed(s, static_cast<std::uint64_t>(stage));
}

HermitianResult run_hermitian_stage(int index, const std::vector<std::vector<double>>& priors,
                                    const Channel& channel, const RunPlan& plan, int run, StageLog* log) {
  if (index < 1) throw std::invalid_argument("state index is 1-based");
  if (priors.size() != static_cast<std::size_t>(index - 1))
    throw std::invalid_argument("state " + std::to_string(index) + " needs " + std::to_string(index - 1) +
                                " prior states");
  const std::size_t m = ansatz_parameter_count(plan.qubits);
  std::mt19937_64 rng(task_seed(plan, channel.parity, run, index, kInit));
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::vector<double> x0(m);
  for (double& v : x0) v = angle(rng);

  EstimatorContext ctx = stage_context(plan, task_seed(plan, channel.parity, run, index, kHermitian));
  Objective obj([&](std::span<const double> p) {
    return vqd_objective(p, channel.hermitian, priors, plan.penalty, ctx);
  });
  OptimizerConfig cfg = plan.hermitian_optimizer;
  if (plan.estimator.tier != Tier::statevector) cfg.check_sinusoid = false;
  const OptimizeResult opt = minimize(obj, cfg, std::move(x0));

  HermitianResult r;
  r.index = index;
  r.parity = channel.parity;
  r.run = run;
  r.params = opt.params;
  r.objective = opt.value;
  r.evaluations = opt.evaluations;
  r.budget_exhausted = opt.budget_exhausted;
  r.warnings = opt.warnings;
  if (opt.budget_exhausted) r.warnings.push_back("hermitian optimizer budget exhausted");

  EstimatorContext exact(EstimatorOptions{}, 0);
  r.energy = expectation(r.params, channel.hermitian, exact).real();
  for (const auto& p : priors) r.overlaps.push_back(overlap_lowdepth(r.params, p, exact));
  r.priors = priors;
  r.priors.push_back(r.params);
  if (log) {
    log->optimizer = obj.telemetry();
    merge_telemetry(log->estimator, ctx.telemetry());
  }
  return r;
}

ResonanceRecord run_nonhermitian_stage(const HermitianResult& hermitian, const Channel& channel,
                                       const RunPlan& plan, StageLog* log) {
  EstimatorContext ctx =
      stage_context(plan, task_seed(plan, channel.parity, hermitian.run, hermitian.index, kNonhermitian));
  Objective obj([&](std::span<const double> p) { return pseudovariance_objective(p, channel.pseudovariance, ctx); });
  const OptimizeResult opt = minimize(obj, plan.nonhermitian_optimizer, hermitian.params);

  ResonanceRecord r;
  r.index = hermitian.index;
  r.parity = channel.parity;
  r.run = hermitian.run;
  r.batch = plan.batch_id;
  r.params = opt.params;
  r.hermitian_energy = hermitian.energy;
  r.warm_pseudovariance = obj.telemetry().empty() ? opt.value : obj.telemetry().front().value;
  r.converged = opt.value <= plan.nonhermitian_optimizer.target;
  r.budget_exhausted = opt.budget_exhausted;
  r.evaluations = opt.evaluations;

  EstimatorContext final_ctx =
      stage_context(plan, task_seed(plan, channel.parity, hermitian.run, hermitian.index, kFinal));
  if (plan.estimator.tier != Tier::statevector) final_ctx.set_shots(plan.final_shots);
  const PseudovarianceValue v = evaluate_pseudovariance(r.params, channel.pseudovariance, final_ctx);
  r.energy = v.energy;
  r.pseudovariance = v.value;

  const Eigen::VectorXcd state = record_state(r.params);
  r.cap_weight = cap_region_weight(state, channel.model.basis, channel.model.grid, plan.potential.x0);
  r.classification = classify_state(r.energy, r.pseudovariance, r.cap_weight, plan.thresholds);
  if (plan.diagnostics) {
    const std::size_t k = oracle_index(channel, r.index);
    r.fidelity_error = compute_fidelity_error(state, channel.oracle.eigenvectors.col(static_cast<Eigen::Index>(k)));
  }
  if (log) {
    log->optimizer = obj.telemetry();
    merge_telemetry(log->estimator, ctx.telemetry());
    merge_telemetry(log->estimator, final_ctx.telemetry());
  }
  return r;
}

std::vector<ResonanceRecord> deduplicate(std::vector<ResonanceRecord> records, double overlap_tol,
                                         EstimatorContext& ctx) {
  std::stable_sort(records.begin(), records.end(), [](const ResonanceRecord& a, const ResonanceRecord& b) {
    return a.pseudovariance < b.pseudovariance;
  });
  std::vector<ResonanceRecord> kept;
  for (auto& r : records) {
    bool duplicate = false;
    for (const auto& k : kept) {
      if (k.parity != r.parity) continue;
      if (overlap_lowdepth(r.params, k.params, ctx) > overlap_tol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(std::move(r));
  }
  std::sort(kept.begin(), kept.end(), [](const ResonanceRecord& a, const ResonanceRecord& b) {
    return std::tie(a.parity, a.index) < std::tie(b.parity, b.index);
  });
  return kept;
}

PoolResult pool_batches(const std::vector<ResonanceRecord>& records, const std::vector<Parity>& parities,
                        int states) {
  auto better = [](const ResonanceRecord& a, const ResonanceRecord& b) {
    const bool sa = is_spurious(a.classification), sb = is_spurious(b.classification);
    if (sa != sb) return sb;
    if (a.pseudovariance != b.pseudovariance) return a.pseudovariance < b.pseudovariance;
    const double ia = std::abs(a.energy.imag()), ib = std::abs(b.energy.imag());
    if (ia != ib) return ia < ib;
    return a.run < b.run;
  };
  PoolResult out;
  for (Parity p : parities) {
    for (int i = 1; i <= states; ++i) {
      const ResonanceRecord* best = nullptr;
      for (const auto& r : records) {
        if (r.parity != p || r.index != i) continue;
        if (!best || better(r, *best)) best = &r;
      }
      if (best) out.winners.push_back(*best); else out.absent.emplace_back(p, i);
    }
  }
  return out;
}

Eigen::VectorXcd record_state(const std::vector<double>& params) {
  const int q = ansatz_qubits(params.size());
  const StateVector psi = statevector(build_ansatz(params, q));
  return Eigen::Map<const Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
}

void filter_spurious(std::vector<ResonanceRecord>& records, const Channel& channel,
                     const ClassifierThresholds& thresholds) {
  for (auto& r : records) {
    const Eigen::VectorXcd state = record_state(r.params);
    r.cap_weight = cap_region_weight(state, channel.model.basis, channel.model.grid, channel.model.potential.x0);
    r.classification = classify_state(r.energy, r.pseudovariance, r.cap_weight, thresholds);
  }
}

double compute_fidelity_error(const Eigen::VectorXcd& state, const Eigen::VectorXcd& oracle) {
  const double na = state.squaredNorm(), nb = oracle.squaredNorm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double f = std::norm(oracle.dot(state)) / (na * nb);
  return std::clamp(1.0 - f, 0.0, 1.0);
}

std::size_t oracle_index(const Channel& channel, int index) {
  return match_hermitian_state(channel.model.pair, channel.oracle, static_cast<std::size_t>(index - 1));
}

EnergyTable build_table(const RunPlan& plan, const std::vector<ResonanceRecord>& winners,
                        const std::map<Parity, const Channel*>& channels) {
  EnergyTable t;
  t.qubits = plan.qubits;
  t.tier = plan.estimator.tier;
  const std::pair<const char*, StateSlot> slots[] = {{"E_b", plan.slots.bound},
                                                     {"E_r1", plan.slots.first_resonance},
                                                     {"E_r2", plan.slots.second_resonance}};
  for (const auto& [label, slot] : slots) {
    TableEntry e;
    e.label = label;
    e.slot = slot;
    const auto it = channels.find(slot.parity);
    if (it != channels.end()) {
      const Channel& ch = *it->second;
      e.reference = ch.oracle.eigenvalues(static_cast<Eigen::Index>(oracle_index(ch, slot.index)));
    } else {
      e.reference = cplx(std::nan(""), std::nan(""));
    }
    for (const auto& w : winners) {
      if (w.parity == slot.parity && w.index == slot.index) {
        e.energy = w.energy;
        if (it != channels.end()) e.relative_error = std::abs(w.energy - e.reference) / std::abs(e.reference);
      }
    }
    t.entries.push_back(e);
  }
  return t;
}

std::string table_csv(const EnergyTable& table) {
  std::string out = "version,q,tier";
  for (const auto& e : table.entries)
    out += "," + e.label + "_re," + e.label + "_im," + e.label + "_ref_re," + e.label + "_ref_im," + e.label + "_relerr";
  out += ",status\n";
  out += std::to_string(kCsvVersion) + "," + std::to_string(table.qubits) + "," + std::string(to_string(table.tier));
  std::string status;
  for (const auto& e : table.entries) {
    if (e.energy) out += "," + num(e.energy->real()) + "," + num(e.energy->imag());
    else out += ",,";
    if (std::isfinite(e.reference.real())) out += "," + num(e.reference.real()) + "," + num(e.reference.imag());
    else out += ",,";
    out += "," + (e.relative_error ? num(*e.relative_error) : std::string());
    if (!e.energy) status += (status.empty() ? "" : ";") + std::string("absent:") + e.label;
    else if (!e.relative_error) status += (status.empty() ? "" : ";") + std::string("no_reference:") + e.label;
  }
  out += "," + (status.empty() ? std::string("ok") : status) + "\n";
  return out;
}

std::string winners_csv(const std::vector<ResonanceRecord>& winners) {
  std::string out =
      "version,parity,state,run,batch,re,im,pseudovariance,converged,class,cap_weight,fidelity_error,status\n";
  for (const auto& w : winners) {
    out += std::to_string(kCsvVersion) + "," + std::string(to_string(w.parity)) + "," + std::to_string(w.index) +
           "," + std::to_string(w.run) + "," + std::to_string(w.batch) + "," + num(w.energy.real()) + "," +
           num(w.energy.imag()) + "," + num(w.pseudovariance) + "," + (w.converged ? "1" : "0") + "," +
           std::string(to_string(w.classification)) + "," + num(w.cap_weight) + "," +
           (w.fidelity_error ? num(*w.fidelity_error) : std::string()) + "," +
           (w.fidelity_error ? "ok" : "no_oracle") + "\n";
  }
  return out;
}

namespace {
StateClass parse_class(const std::string& s) {
  for (StateClass c : {StateClass::bound, StateClass::resonance, StateClass::spurious_diverging,
                       StateClass::spurious_gain, StateClass::spurious_indifferent})
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown state class '" + s + "'");
}
}  // namespace

void to_json(nlohmann::json& j, const HermitianResult& r) {
  j = nlohmann::json{{"index", r.index},
                     {"parity", to_string(r.parity)},
                     {"run", r.run},
                     {"params", r.params},
                     {"energy", r.energy},
                     {"objective", r.objective},
                     {"overlaps", r.overlaps},
                     {"evaluations", r.evaluations},
                     {"budget_exhausted", r.budget_exhausted},
                     {"warnings", r.warnings},
                     {"priors", r.priors}};
}

void from_json(const nlohmann::json& j, HermitianResult& r) {
  r.index = j.at("index").get<int>();
  r.parity = parse_parity(j.at("parity").get<std::string>());
  r.run = j.at("run").get<int>();
  r.params = j.at("params").get<std::vector<double>>();
  r.energy = j.at("energy").get<double>();
  r.objective = j.at("objective").get<double>();
  r.overlaps = j.at("overlaps").get<std::vector<double>>();
  r.evaluations = j.at("evaluations").get<int>();
  r.budget_exhausted = j.at("budget_exhausted").get<bool>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.priors = j.at("priors").get<std::vector<std::vector<double>>>();
}

void to_json(nlohmann::json& j, const ResonanceRecord& r) {
  j = nlohmann::json{{"index", r.index},
                     {"parity", to_string(r.parity)},
                     {"run", r.run},
                     {"batch", r.batch},
                     {"energy", {{"re", r.energy.real()}, {"im", r.energy.imag()}}},
                     {"pseudovariance", r.pseudovariance},
                     {"warm_pseudovariance", r.warm_pseudovariance},
                     {"hermitian_energy", r.hermitian_energy},
                     {"params", r.params},
                     {"converged", r.converged},
                     {"budget_exhausted", r.budget_exhausted},
                     {"evaluations", r.evaluations},
                     {"cap_weight", r.cap_weight},
                     {"classification", to_string(r.classification)},
                     {"fidelity_error", r.fidelity_error ? nlohmann::json(*r.fidelity_error) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, ResonanceRecord& r) {
  r.index = j.at("index").get<int>();
  r.parity = parse_parity(j.at("parity").get<std::string>());
  r.run = j.at("run").get<int>();
  r.batch = j.at("batch").get<std::uint64_t>();
  r.energy = cplx(j.at("energy").at("re").get<double>(), j.at("energy").at("im").get<double>());
  r.pseudovariance = j.at("pseudovariance").get<double>();
  r.warm_pseudovariance = j.at("warm_pseudovariance").get<double>();
  r.hermitian_energy = j.at("hermitian_energy").get<double>();
  r.params = j.at("params").get<std::vector<double>>();
  r.converged = j.at("converged").get<bool>();
  r.budget_exhausted = j.at("budget_exhausted").get<bool>();
  r.evaluations = j.at("evaluations").get<int>();
  r.cap_weight = j.at("cap_weight").get<double>();
  r.classification = parse_class(j.at("classification").get<std::string>());
  if (j.at("fidelity_error").is_null()) r.fidelity_error.reset();
  else r.fidelity_error = j.at("fidelity_error").get<double>();
}

}  // namespace qdrive
