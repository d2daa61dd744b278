#pragma once

// Gate-level circuits: the efficient SU(2) Ansatz and the estimation circuits
// built around it.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdrive/pauli.hpp"

namespace qdrive {

class CircuitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class GateKind : std::uint8_t {
  RY,
  RZ,
  H,
  X,
  S,
  Sdg,
  CX,
  /// Controlled single-qubit Pauli (letter X, Y or Z) on `target`.
  CPauli,
  Measure,
};

struct Gate {
  GateKind kind = GateKind::H;
  int target = 0;
  int control = -1;
  double angle = 0.0;
  PauliLetter letter = PauliLetter::I;

  int arity() const { return control >= 0 ? 2 : 1; }
  Gate inverse() const;
};

std::string to_string(const Gate& g);

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(int qubits) : qubits_(qubits) {}

  int qubits() const { return qubits_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }

  Circuit& ry(int q, double angle);
  Circuit& rz(int q, double angle);
  Circuit& h(int q);
  Circuit& x(int q);
  Circuit& s(int q);
  Circuit& sdg(int q);
  Circuit& cx(int control, int target);
  Circuit& cpauli(int control, int target, PauliLetter letter);
  Circuit& measure(int q);

  /// Controlled word: one CPauli per non-identity letter, word qubit k mapped
  /// to circuit qubit k + offset.
  Circuit& controlled_word(int control, const PauliWord& word, int offset);

  Circuit& append(const Gate& g);
  /// Append another circuit acting on qubits [offset, offset + other.qubits()).
  Circuit& append(const Circuit& other, int offset = 0);

  /// Reversed sequence of inverse gates. Rejects circuits with measurements.
  Circuit inverse() const;

  std::size_t count(GateKind kind) const;
  bool has_measurements() const { return count(GateKind::Measure) > 0; }

 private:
  void check_qubit(int q) const;

  int qubits_ = 0;
  std::vector<Gate> gates_;
};

/// Line-per-gate text dump.
void dump(std::ostream& out, const Circuit& c);

constexpr int kAnsatzLayers = 3;

/// Parameter count of the Ansatz: 2 q (layers + 1).
constexpr std::size_t ansatz_parameter_count(int qubits, int layers = kAnsatzLayers) {
  return static_cast<std::size_t>(2 * qubits * (layers + 1));
}

/// Three-layer efficient SU(2) Ansatz on qubits [offset, offset + q).
///
/// Rotation column l (l = 0..layers) uses parameters
///   theta[2 q l + k]     -> RY on qubit k
///   theta[2 q l + q + k] -> RZ on qubit k
/// and every column after the first is preceded by the linear CX chain
/// 0->1, 1->2, ..., (q-2)->(q-1).
Circuit build_ansatz(std::span<const double> params, int qubits, int offset = 0,
                     int total_qubits = -1);

}  // namespace qdrive
