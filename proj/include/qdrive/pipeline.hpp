#pragma once

// Hermitian VQD stage, pseudovariance stage, per-run deduplication, pooling
// across runs, spurious-state filtering and the final energy table.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdrive/estimator.hpp"
#include "qdrive/model.hpp"
#include "qdrive/optimize.hpp"
#include "qdrive/pauli.hpp"

namespace qdrive {

/// (parity, 1-based state index) of one Table entry.
struct StateSlot {
  Parity parity = Parity::even;
  int index = 1;
};

struct TableSlots {
  StateSlot bound{Parity::even, 1};
  StateSlot first_resonance{Parity::odd, 2};
  StateSlot second_resonance{Parity::even, 4};
};

/// Hermitian-stage optimizer defaults for a tier: the exact tier gets a larger
/// NFT budget, sampled tiers keep 2^9 iterations and f_max = 2^11.
OptimizerConfig default_hermitian_optimizer(Tier tier);

/// Second-harmonic NFT with f_tol = 0.05 and u = 3; budget as above.
OptimizerConfig default_nonhermitian_optimizer(Tier tier);

struct RunPlan {
  PotentialModel potential;
  double x_max = 10.0;
  std::size_t n_points = 4096;
  int qubits = 3;
  int states = 4;   // N per parity channel
  int batch = 8;    // B runs
  std::vector<Parity> parities{Parity::even, Parity::odd};
  EstimatorOptions estimator;
  std::size_t final_shots = 1000000;
  std::uint64_t seed = 1;
  std::uint64_t batch_id = 0;
  double penalty = 100.0;
  OptimizerConfig hermitian_optimizer = default_hermitian_optimizer(Tier::statevector);
  OptimizerConfig nonhermitian_optimizer = default_nonhermitian_optimizer(Tier::statevector);
  double overlap_tol = 0.5;
  ClassifierThresholds thresholds;
  TableSlots slots;
  bool diagnostics = true;  // fidelity against the exact oracle

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Per-parity operators and oracle, immutable once built.
struct Channel {
  Parity parity;
  ChannelModel model;
  PauliSum hermitian;
  PseudovarianceOperators pseudovariance;
  PauliSum cap;
  SpectrumRecord oracle;
};

Channel build_pipeline_channel(const RunPlan& plan, Parity parity);

/// Seed of task (parity, run, state, stage); distinct per run and stage.
std::uint64_t task_seed(const RunPlan& plan, Parity parity, int run, int index, int stage);

struct HermitianResult {
  int index = 0;
  Parity parity = Parity::even;
  int run = 0;
  std::vector<double> params;
  double energy = 0.0;
  double objective = 0.0;
  std::vector<double> overlaps;  // with each prior
  int evaluations = 0;
  bool budget_exhausted = false;
  std::vector<std::string> warnings;
  std::vector<std::vector<double>> priors;  // theta_1 .. theta_i, this state last
};

struct ResonanceRecord {
  int index = 0;
  Parity parity = Parity::even;
  int run = 0;
  std::uint64_t batch = 0;
  cplx energy;
  double pseudovariance = 0.0;
  double warm_pseudovariance = 0.0;
  double hermitian_energy = 0.0;
  std::vector<double> params;
  bool converged = false;
  bool budget_exhausted = false;
  int evaluations = 0;
  double cap_weight = 0.0;
  StateClass classification = StateClass::resonance;
  std::optional<double> fidelity_error;
};

/// Optimizer telemetry rows and estimator counters of one stage.
struct StageLog {
  std::vector<TelemetryRow> optimizer;
  EstimatorTelemetry estimator;
};

HermitianResult run_hermitian_stage(int index, const std::vector<std::vector<double>>& priors,
                                    const Channel& channel, const RunPlan& plan, int run,
                                    StageLog* log = nullptr);

ResonanceRecord run_nonhermitian_stage(const HermitianResult& hermitian, const Channel& channel,
                                       const RunPlan& plan, StageLog* log = nullptr);

/// Greedy keep-lowest-pseudovariance; drops a record whose |<a|b>|^2 with an
/// already kept one exceeds overlap_tol. Overlaps use `ctx`.
std::vector<ResonanceRecord> deduplicate(std::vector<ResonanceRecord> records, double overlap_tol,
                                         EstimatorContext& ctx);

struct PoolResult {
  std::vector<ResonanceRecord> winners;        // sorted by parity, then index
  std::vector<std::pair<Parity, int>> absent;  // requested but seen in no run
};

/// Per (parity, index): non-spurious records first, then argmin pseudovariance,
/// ties by |Im E|, then run id.
PoolResult pool_batches(const std::vector<ResonanceRecord>& records, const std::vector<Parity>& parities,
                        int states);

/// Basis-coefficient vector of the Ansatz state.
Eigen::VectorXcd record_state(const std::vector<double>& params);

/// Sets cap_weight and classification on every record.
void filter_spurious(std::vector<ResonanceRecord>& records, const Channel& channel,
                     const ClassifierThresholds& thresholds);

/// 1 - |<psi|phi>|^2 for unit vectors, phase free.
double compute_fidelity_error(const Eigen::VectorXcd& state, const Eigen::VectorXcd& oracle);

/// Oracle eigenvalue index that a (parity, index) state is compared against.
std::size_t oracle_index(const Channel& channel, int index);

struct TableEntry {
  std::string label;
  StateSlot slot;
  std::optional<cplx> energy;
  cplx reference;
  std::optional<double> relative_error;
};

struct EnergyTable {
  int qubits = 0;
  Tier tier = Tier::statevector;
  std::vector<TableEntry> entries;  // E_b, E_r1, E_r2
};

EnergyTable build_table(const RunPlan& plan, const std::vector<ResonanceRecord>& winners,
                        const std::map<Parity, const Channel*>& channels);

inline constexpr int kCsvVersion = 1;

std::string table_csv(const EnergyTable& table);
std::string winners_csv(const std::vector<ResonanceRecord>& winners);

void to_json(nlohmann::json& j, const HermitianResult& r);
void from_json(const nlohmann::json& j, HermitianResult& r);
void to_json(nlohmann::json& j, const ResonanceRecord& r);
void from_json(const nlohmann::json& j, ResonanceRecord& r);

}  // namespace qdrive
