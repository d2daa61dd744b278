// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qdrive/commands.hpp"
#include "qdrive/config.hpp"
#include "qdrive/mitigation.hpp"
#include "qdrive/optimize.hpp"
#include "qdrive/orchestrator.hpp"
#include "qdrive/pauli.hpp"
#include "qdrive/pipeline.hpp"
#include "qdrive/simulator.hpp"

using namespace qdrive;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s %d %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

void criterion(int id, const char* name, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(id, name, ok, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

fs::path temp_root(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qdrive-acceptance-" + name);
  fs::remove_all(p);
  return p;
}

double relerr(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

/// One-sided exact permutation p-value of the Mann-Whitney U statistic for
/// "x tends to exceed y"; ties count one half.
double mann_whitney_greater(const std::vector<double>& x, const std::vector<double>& y) {
  const auto u_of = [](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double ai : a)
      for (double bi : b) u += ai > bi ? 1.0 : (ai == bi ? 0.5 : 0.0);
    return u;
  };
  const double observed = u_of(x, y);
  std::vector<double> all(x);
  all.insert(all.end(), y.begin(), y.end());
  std::vector<bool> pick(all.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(x.size()), true);
  std::size_t total = 0, extreme = 0;
  do {
    std::vector<double> a, b;
    for (std::size_t k = 0; k < all.size(); ++k) (pick[k] ? a : b).push_back(all[k]);
    ++total;
    if (u_of(a, b) >= observed - 1e-12) ++extreme;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

cplx dense_expectation(const StateVector& psi, const PauliSum& op) {
  cplx acc = 0.0;
  for (const auto& [w, c] : op.terms()) acc += c * (w.is_identity() ? cplx(1.0) : expectation(psi, w));
  return acc;
}

// Criterion bodies.

bool oracle_reproduction(std::string& detail) {
  const std::map<int, std::array<cplx, 3>> published{
      {2, {cplx(0.623, -2.63e-3), cplx(1.61, -4.15e-2), cplx(2.36, -5.83e-3)}},
      {3, {cplx(0.505, -2.02e-5), cplx(1.43, -1.61e-4), cplx(2.15, -2.04e-2)}},
      {4, {cplx(0.502, -9.98e-11), cplx(1.42, -3.60e-5), cplx(2.12, -1.18e-2)}}};
  double worst = 0.0;
  for (const auto& [q, refs] : published) {
    RunPlan plan;
    plan.qubits = q;
    const Channel even = build_pipeline_channel(plan, Parity::even);
    const Channel odd = build_pipeline_channel(plan, Parity::odd);
    const StateSlot slots[] = {plan.slots.bound, plan.slots.first_resonance, plan.slots.second_resonance};
    for (int k = 0; k < 3; ++k) {
      const Channel& ch = slots[k].parity == Parity::even ? even : odd;
      const cplx e = ch.oracle.eigenvalues(static_cast<Eigen::Index>(oracle_index(ch, slots[k].index)));
      worst = std::max(worst, std::abs(std::abs(e) - std::abs(refs[k])) / std::abs(refs[k]));
      worst = std::max(worst, relerr(e, refs[k]));
    }
  }
  detail = fmt("max relerr over 9 energies %.3g <= 0.01", worst);
  return worst <= 0.01;
}

bool statevector_pipeline(std::string& detail) {
  RunPlan plan;
  plan.qubits = 3;
  plan.batch = 8;
  BatchRunner runner(plan);
  const fs::path root = temp_root("sv");
  const BatchResult r = run_batch(runner, root, 1);
  fs::remove_all(root);
  const double tol[] = {0.01, 0.01, 0.03};
  bool ok = true;
  std::string parts;
  for (std::size_t k = 0; k < 3; ++k) {
    const TableEntry& e = r.table.entries[k];
    const double err = e.relative_error.value_or(kInf);
    ok = ok && err <= tol[k];
    parts += e.label + fmt(" %.3g<=%.2g ", err, tol[k]);
  }
  detail = "q=3 B=8 " + parts;
  return ok;
}

bool shot_pipeline(std::string& detail) {
  RunPlan plan;
  plan.qubits = 2;
  plan.estimator.tier = Tier::shots;
  plan.estimator.shots = 10000;
  plan.final_shots = 100000;
  plan.hermitian_optimizer = default_hermitian_optimizer(Tier::shots);
  plan.nonhermitian_optimizer = default_nonhermitian_optimizer(Tier::shots);
  BatchRunner runner(plan);
  const fs::path root = temp_root("shots");
  const BatchResult r = run_batch(runner, root, 1);
  fs::remove_all(root);
  bool ok = true;
  std::string parts;
  for (const auto& e : r.table.entries) {
    const double err = e.relative_error.value_or(kInf);
    ok = ok && err <= 0.05;
    parts += e.label + fmt(" %.3g ", err);
  }
  detail = "q=2 shots=1e4 " + parts + "<= 0.05";
  return ok;
}

struct TrendCell {
  double reduction, longevity;
  std::vector<double> sigma, fidelity;
};

EstimatorTelemetry noisy_telemetry;

bool noisy_trend(std::string& detail) {
  const RunConfig base = parse_config(R"({
    "q": 2, "N": 2, "B": 1, "tier": "noisy", "shots": 10000, "final_shots": 10000, "seed": 7,
    "optimizer": {"hermitian": {"max_iterations": 64, "max_evaluations": 1024},
                  "nonhermitian": {"max_iterations": 16, "max_evaluations": 512, "retries": 0}}
  })");
  constexpr int kRepeats = 8;
  std::vector<TrendCell> cells;
  for (double reduction : {1.0, 1e4})
    for (double longevity : {10.0, kInf}) cells.push_back({reduction, longevity, {}, {}});
  const fs::path root = temp_root("trend");
  for (auto& cell : cells) {
    for (int rep = 0; rep < kRepeats; ++rep) {
      RunConfig c = base;
      c.gate_noise_reduction = cell.reduction;
      c.qubit_longevity_us = cell.longevity;
      c.plan.seed = mix_seed(base.plan.seed, static_cast<std::uint64_t>(rep));
      c.plan.estimator.noise = resolved_noise(c);
      BatchRunner runner(c.plan);
      const BatchResult r = run_batch(runner, root / std::to_string(rep), 1);
      fs::remove_all(root);
      merge_telemetry(noisy_telemetry, r.telemetry);
      double s = 0.0, f = 0.0;
      for (const auto& w : r.winners) {
        s += w.pseudovariance;
        f += w.fidelity_error.value_or(1.0);
      }
      const double n = static_cast<double>(std::max<std::size_t>(r.winners.size(), 1));
      cell.sigma.push_back(s / n);
      cell.fidelity.push_back(f / n);
    }
  }
  for (const auto& c : cells)
    std::printf("     trend reduction=%-6g longevity=%-4g median sigma2=%.4g fidelity_error=%.4g\n", c.reduction,
                c.longevity, median(c.sigma), median(c.fidelity));
  // (noisier, cleaner) pairs along each axis
  const std::pair<int, int> axes[] = {{0, 2}, {1, 3}, {0, 1}, {2, 3}};
  double min_p = 1.0;
  for (const auto& [noisy, clean] : axes) {
    min_p = std::min(min_p, mann_whitney_greater(cells[clean].sigma, cells[noisy].sigma));
    min_p = std::min(min_p, mann_whitney_greater(cells[clean].fidelity, cells[noisy].fidelity));
  }
  detail = fmt("8 one-sided increase tests, min p=%.3g >= 0.05", min_p);
  return min_p >= 0.05;
}

bool mitigation_suite(std::string& detail) {
  struct Case {
    double x1, x3, x5, x0;
    ZneBranch branch;
  };
  const Case cases[] = {{1.0, 1.0, 1.0, 1.0, ZneBranch::constant},
                        {0.9, 0.7, 0.5, 1.0, ZneBranch::exponential},
                        {0.8, 0.6, 0.6, 0.9, ZneBranch::linear},
                        {0.5, 0.4, 0.7, 0.45, ZneBranch::outlier_x5},
                        {0.5, 0.7, 0.6, 0.4, ZneBranch::linear},
                        {0.6, 0.4, 0.6001, 0.6, ZneBranch::undefined_averaged}};
  bool worked = true;
  for (const auto& c : cases) {
    const ZneResult r = zne_extrapolate({c.x1, c.x3, c.x5, 100000, ZneMode::expectation});
    worked = worked && r.branch == c.branch && std::abs(r.x0 - c.x0) <= 1e-12;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0), err(0.0, 0.2);
  bool fuzz = true;
  for (int t = 0; t < 100000; ++t) {
    const bool prob = t % 2;
    ZnePoints pts{prob ? p(rng) : u(rng), prob ? p(rng) : u(rng), prob ? p(rng) : u(rng),
                  static_cast<std::size_t>(std::pow(10.0, t % 7)), prob ? ZneMode::probability : ZneMode::expectation};
    if (t % 13 == 0) pts.x3 = pts.x5;
    try {
      const ZneResult r = zne_extrapolate(pts);
      fuzz = fuzz && std::isfinite(r.x0) && !to_string(r.branch).empty();
    } catch (...) {
      fuzz = false;
    }
  }
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double e0 = err(rng), e1 = err(rng), t0 = p(rng);
    const ConfusionMatrix m{1.0 - e0, e0, e1, 1.0 - e1};
    worst = std::max(worst, std::abs(readout_invert(readout_forward(t0, m), m).t0 - t0));
  }
  detail = std::string("worked triples ") + (worked ? "exact" : "MISMATCH") + ", 1e5 fuzz " +
           (fuzz ? "total" : "FAILED") + fmt(", readout round-trip %.2g <= 1e-12", worst);
  return worked && fuzz && worst <= 1e-12;
}

bool pauli_algebra(std::string& detail) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto random_matrix = [&](int q) {
    const Eigen::Index d = Eigen::Index{1} << q;
    Eigen::MatrixXcd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = cplx(u(rng), u(rng));
    return m;
  };
  double round_trip = 0.0, product = 0.0;
  for (int q = 1; q <= 4; ++q) {
    for (int t = 0; t < 200; ++t) {
      const Eigen::MatrixXcd a = random_matrix(q), b = random_matrix(q);
      const PauliSum pa = decompose(a), pb = decompose(b);
      round_trip = std::max(round_trip, (to_dense(pa) - a).cwiseAbs().maxCoeff());
      product = std::max(product, (to_dense(multiply(pa, pb)) - a * b).cwiseAbs().maxCoeff());
    }
  }
  detail = fmt("800 matrices q=1..4: round-trip %.2g, multiply %.2g <= 1e-12", round_trip, product);
  return round_trip <= 1e-12 && product <= 1e-12;
}

bool pseudovariance_truth(std::string& detail) {
  double worst_dense = 0.0, worst_estimator = 0.0, min_random = kInf, disagreement = 0.0;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  EstimatorContext ctx(EstimatorOptions{}, 1);
  for (int q = 2; q <= 4; ++q) {
    RunPlan plan;
    plan.qubits = q;
    for (Parity parity : {Parity::even, Parity::odd}) {
      const Channel ch = build_pipeline_channel(plan, parity);
      const Eigen::MatrixXcd h = ch.model.pair.nonhermitian();
      for (Eigen::Index k = 0; k < ch.oracle.eigenvectors.cols(); ++k) {
        const Eigen::VectorXcd v = ch.oracle.eigenvectors.col(k).normalized();
        const cplx mean = v.dot(h * v);
        worst_dense = std::max(worst_dense, std::abs((h * v).squaredNorm() - std::norm(mean)));
        const StateVector psi(v.data(), v.data() + v.size());
        const double est = (dense_expectation(psi, ch.pseudovariance.product) -
                            std::norm(dense_expectation(psi, ch.pseudovariance.nonhermitian)))
                               .real();
        worst_estimator = std::max(worst_estimator, std::abs(est));
      }
      for (int t = 0; t < 100 / 6 + 1; ++t) {
        std::vector<double> params(ansatz_parameter_count(q));
        for (auto& x : params) x = angle(rng);
        const double sigma = evaluate_pseudovariance(params, ch.pseudovariance, ctx).value;
        const StateVector psi = statevector(build_ansatz(params, q));
        const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
        const double dense = (h * v).squaredNorm() - std::norm(v.dot(h * v));
        min_random = std::min(min_random, sigma);
        disagreement = std::max(disagreement, std::abs(sigma - dense));
      }
    }
  }
  detail = fmt("eigenvectors dense %.2g, estimator %.2g <= 1e-8; 102 random min %.3g > 0 (paths agree %.1g)",
               worst_dense, worst_estimator, min_random, disagreement);
  return worst_dense <= 1e-8 && worst_estimator <= 1e-8 && min_random > 0.0 && disagreement <= 1e-8;
}

bool scheduling(std::string& detail) {
  RunPlan stub;
  stub.qubits = 2;
  stub.states = 4;
  stub.batch = 3;
  TaskDag dag = build_dag(stub, "/tmp/stub");
  const ExecutionTrace trace = execute(dag, 4, [](const TaskNode&, bool) {});
  std::map<std::string, const TraceEvent*> ev;
  for (const auto& e : trace.events) ev[e.id] = &e;
  bool edges = trace.events.size() == dag.size();
  for (const auto& [p, c] : dag.edges()) edges = edges && ev.at(p)->finish <= ev.at(c)->start;

  bool overlap = true;
  for (int batch : {1, 3}) {
    RunPlan chain = stub;
    chain.batch = batch;
    chain.parities = {Parity::even};
    TaskDag sim = build_dag(chain, "/tmp/stub");
    const ExecutionTrace st = execute_simulated(sim, 2 * batch, [](const TaskNode&) { return 1.0; });
    std::map<std::string, const TraceEvent*> sev;
    for (const auto& e : st.events) sev[e.id] = &e;
    for (int run = 0; run < batch; ++run)
      for (int i = 1; i < chain.states; ++i) {
        const TraceEvent* n = sev.at(task_id(TaskKind::nonhermitian, Parity::even, run, i));
        const TraceEvent* h = sev.at(task_id(TaskKind::hermitian, Parity::even, run, i + 1));
        overlap = overlap && std::max(n->start, h->start) < std::min(n->finish, h->finish);
      }
  }

  RunPlan plan;
  plan.qubits = 2;
  plan.batch = 2;
  std::vector<std::string> csvs;
  for (int workers : {1, 2, 8}) {
    BatchRunner runner(plan);
    const fs::path root = temp_root("workers");
    csvs.push_back(winners_csv(run_batch(runner, root, workers).winners));
    fs::remove_all(root);
  }
  const bool identical = csvs[0] == csvs[1] && csvs[0] == csvs[2] && !csvs[0].empty();

  const TaskDag full = build_dag(plan, "/tmp/stub");
  const ParsedDagman parsed = parse_dagman(export_dagman(full, "qdrive", "/tmp/stub/config.json").dag);
  auto want = full.edges(), got = parsed.edges;
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  const bool dagman = want == got && parsed.jobs.size() == full.size();

  detail = std::string("edges ") + (edges ? "ok" : "VIOLATED") + ", overlap " + (overlap ? "ok" : "MISSING") +
           ", winners csv " + (identical ? "identical" : "DIFFER") + ", dagman " + (dagman ? "round-trips" : "MISMATCH");
  return edges && overlap && identical && dagman;
}

bool identity_word(std::string& detail) {
  if (noisy_telemetry.circuits == 0) {
    RunConfig c = parse_config(R"({"q": 2, "N": 1, "B": 1, "tier": "noisy", "shots": 2000, "final_shots": 2000,
      "optimizer": {"hermitian": {"max_iterations": 2}, "nonhermitian": {"max_iterations": 1, "retries": 0}}})");
    c.plan.estimator.noise = resolved_noise(c);
    BatchRunner runner(c.plan);
    const fs::path root = temp_root("identity");
    merge_telemetry(noisy_telemetry, run_batch(runner, root, 1).telemetry);
    fs::remove_all(root);
  }
  bool identity_keys = false;
  for (const auto& [word, n] : noisy_telemetry.circuits_by_word)
    identity_keys = identity_keys || word.find_first_not_of('I') == std::string::npos;

  RunConfig c = parse_config(R"({"q": 2, "tier": "noisy"})");
  c.plan.estimator.noise = resolved_noise(c);
  EstimatorContext ctx(c.plan.estimator, 3);
  PauliSum scaled(2);
  scaled.add(PauliWord(2), cplx(0.37, -0.11));
  const cplx value = expectation(std::vector<double>(ansatz_parameter_count(2), 0.3), scaled, ctx);
  const bool analytic = value == cplx(0.37, -0.11) && ctx.telemetry().circuits == 0;

  detail = std::to_string(noisy_telemetry.circuits) + " noisy circuits, identity-word circuits " +
           std::to_string(noisy_telemetry.identity_word_circuits) + (identity_keys ? ", identity key PRESENT" : "") +
           (analytic ? ", identity term exact" : ", identity term INEXACT");
  return noisy_telemetry.circuits > 0 && noisy_telemetry.identity_word_circuits == 0 && !identity_keys && analytic;
}

}  // namespace

int main() {
  criterion(1, "oracle-reproduction", oracle_reproduction);
  criterion(2, "statevector-pipeline", statevector_pipeline);
  criterion(3, "shot-noise-pipeline", shot_pipeline);
  criterion(4, "noisy-trend", noisy_trend);
  criterion(5, "mitigation-suite", mitigation_suite);
  criterion(6, "pauli-algebra", pauli_algebra);
  criterion(7, "pseudovariance-ground-truth", pseudovariance_truth);
  criterion(8, "scheduling", scheduling);
  criterion(9, "identity-word-rule", identity_word);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
