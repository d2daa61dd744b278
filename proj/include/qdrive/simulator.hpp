#pragma once

// Statevector and density-matrix simulation, noise channels and shot sampling.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qdrive/circuit.hpp"
#include "qdrive/noise.hpp"

namespace qdrive {

class SimulationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using StateVector = std::vector<cplx>;

/// |0...0> on n qubits.
StateVector zero_state(int qubits);
void apply_gate(StateVector& state, const Gate& gate);
/// Runs the circuit on |0...0>. Rejects circuits containing measurements.
StateVector statevector(const Circuit& circuit);
std::vector<double> probabilities(const StateVector& state);
/// <psi|P|psi> for a word acting on qubits [offset, offset + P.qubits()).
cplx expectation(const StateVector& state, const PauliWord& word, int offset = 0);

/// Density matrix stored as a 2n-qubit "superket": rho(r, c) lives at index
/// r + (c << n), so a gate U acts as U on bit k and conj(U) on bit k + n.
class DensityMatrix {
 public:
  explicit DensityMatrix(int qubits);  // |0...0><0...0|
  static DensityMatrix from_state(const StateVector& psi);
  static DensityMatrix from_matrix(const Eigen::MatrixXcd& rho);

  int qubits() const { return qubits_; }
  std::size_t dim() const { return std::size_t{1} << qubits_; }
  cplx operator()(std::size_t r, std::size_t c) const { return data_[r + (c << qubits_)]; }

  Eigen::MatrixXcd matrix() const;
  cplx trace() const;
  std::vector<double> probabilities() const;
  /// Trace one, Hermitian and positive semidefinite within tol.
  bool is_valid(double tol = 1e-9) const;

  void apply_unitary(const Gate& gate);
  /// sum_j K_j rho K_j^dagger with single-qubit Kraus operators.
  void apply_kraus(int qubit, std::span<const Eigen::Matrix2cd> kraus);
  /// (1 - p) rho + p Tr_Q[rho] (x) I / 2^|Q| on the listed qubits.
  void apply_depolarizing(std::span<const int> qubits, double p);

 private:
  int qubits_;
  std::vector<cplx> data_;
};

/// Kraus set of generalized amplitude damping.
std::vector<Eigen::Matrix2cd> amplitude_damping_kraus(double gamma1, double excited_population);
/// Kraus set of pure phase damping.
std::vector<Eigen::Matrix2cd> phase_damping_kraus(double gamma2);

/// Thermal relaxation rates for a gate of duration t: gamma1 = 1 - exp(-t/T1)
/// and the residual pure-dephasing gamma chosen so the off-diagonal decay of
/// amplitude damping followed by dephasing equals exp(-t/T2).
struct RelaxationRates {
  double gamma1 = 0.0;
  double gamma_phi = 0.0;
};
RelaxationRates relaxation_rates(double t_us, double t1_us, double t2_us);

/// Channels that follow `gate`: thermal relaxation on each gate qubit, then
/// depolarizing with p_d on the gate's qubits. Validates the input state.
DensityMatrix apply_noise_channels(DensityMatrix rho, const Gate& gate, const NoiseModel& noise);

/// Unitary evolution with noise channels after every gate. Measurements are
/// ignored (read out through probabilities()).
DensityMatrix simulate_density(const Circuit& circuit, const NoiseModel& noise);

struct Measurement {
  std::size_t shots = 0;
  std::vector<std::uint64_t> counts;  // one bin per outcome index
  std::vector<double> probabilities() const;
};

/// Multinomial draw of n shots, reproducible for a fixed seed.
Measurement sample_shots(std::span<const double> probs, std::size_t shots, std::uint64_t seed);

}  // namespace qdrive
