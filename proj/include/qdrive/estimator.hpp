#pragma once

// Expectation-value and overlap estimation for Ansatz states on the three
// simulation tiers.
//
//   statevector  exact amplitudes, no sampling
//   shots        exact amplitudes, multinomial/binomial shot sampling
//   noisy        density matrix with Kraus noise, readout confusion, shot
//                sampling, readout inversion and three-point ZNE
//
// The identity word is never estimated: its expectation is exactly one.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdrive/circuit.hpp"
#include "qdrive/mitigation.hpp"
#include "qdrive/noise.hpp"
#include "qdrive/pauli.hpp"

namespace qdrive {

enum class Tier { statevector, shots, noisy };
std::string_view to_string(Tier t);
Tier parse_tier(std::string_view s);

/// direct: rotate into each word's eigenbasis and take the parity of all
/// measured bits. hadamard: ancilla Hadamard test (ancilla is qubit 0).
enum class EstimatorMethod { direct, hadamard };
std::string_view to_string(EstimatorMethod m);
EstimatorMethod parse_method(std::string_view s);

enum class HadamardPart { real, imaginary };

struct EstimatorOptions {
  Tier tier = Tier::statevector;
  EstimatorMethod method = EstimatorMethod::direct;
  std::size_t shots = 100000;
  NoiseModel noise;  // noisy tier only
  bool readout_mitigation = true;
  bool zne = true;
  bool verbose = false;  // keep per-estimate ZNE records
};

struct ZneRecord {
  std::string label;
  double x1 = 0.0, x3 = 0.0, x5 = 0.0, z = 0.0, x0 = 0.0;
  ZneBranch branch = ZneBranch::constant;
};

struct EstimatorTelemetry {
  std::size_t circuits = 0;
  std::size_t overlap_circuits = 0;
  std::size_t identity_word_circuits = 0;
  std::size_t readout_clamps = 0;
  std::map<std::string, std::size_t> circuits_by_word;
  std::map<std::string, std::size_t> zne_branches;
  std::vector<ZneRecord> zne_log;
};

/// Sums counters and maps; appends logs.
void merge_telemetry(EstimatorTelemetry& into, const EstimatorTelemetry& from);

/// Options plus a counter-based RNG stream. One context per task; never
/// shared between threads.
class EstimatorContext {
 public:
  EstimatorContext(EstimatorOptions options, std::uint64_t seed);

  const EstimatorOptions& options() const { return options_; }
  std::uint64_t seed() const { return seed_; }
  /// Seed for the next sampled circuit.
  std::uint64_t next_seed();
  EstimatorTelemetry& telemetry() { return telemetry_; }
  const EstimatorTelemetry& telemetry() const { return telemetry_; }

  /// Same options and telemetry sink, different shot count (final comparisons).
  void set_shots(std::size_t shots) { options_.shots = shots; }

 private:
  EstimatorOptions options_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  EstimatorTelemetry telemetry_;
};

/// Ansatz qubit count implied by a parameter vector.
int ansatz_qubits(std::size_t parameter_count);

/// Real <P> estimates for every non-identity word, using the context's method.
std::map<PauliWord, double> estimate_words(std::span<const double> params, const std::set<PauliWord>& words,
                                           EstimatorContext& ctx);

/// sum_P C_P <P>, identity term taken analytically; per-word estimates use
/// the context's method.
cplx expectation(std::span<const double> params, const PauliSum& observable, EstimatorContext& ctx);

/// Same as expectation() but always through basis rotation + parity.
cplx expectation_pauli_direct(std::span<const double> params, const PauliSum& observable,
                              EstimatorContext& ctx);

/// Re or Im of <psi|P|psi> from P(ancilla = 0) - P(ancilla = 1).
double expectation_hadamard_test(std::span<const double> params, const PauliWord& word, HadamardPart part,
                                 EstimatorContext& ctx);

/// |<psi(b)|psi(a)>|^2 as the all-zeros probability of U(a) then U(b)^dagger.
double overlap_lowdepth(std::span<const double> params_a, std::span<const double> params_b,
                        EstimatorContext& ctx);

/// Deterministic 64-bit mixing used to derive per-task and per-circuit seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace qdrive
