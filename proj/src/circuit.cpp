#include "qdrive/circuit.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace qdrive {

Gate Gate::inverse() const {
  Gate g = *this;
  switch (kind) {
    case GateKind::RY:
    case GateKind::RZ: g.angle = -angle; break;
    case GateKind::S: g.kind = GateKind::Sdg; break;
    case GateKind::Sdg: g.kind = GateKind::S; break;
    case GateKind::Measure: throw CircuitError("measurement has no inverse");
    default: break;  // self-inverse
  }
  return g;
}

std::string to_string(const Gate& g) {
  std::ostringstream out;
  switch (g.kind) {
    case GateKind::RY: out << "RY " << g.target << ' ' << g.angle; break;
    case GateKind::RZ: out << "RZ " << g.target << ' ' << g.angle; break;
    case GateKind::H: out << "H " << g.target; break;
    case GateKind::X: out << "X " << g.target; break;
    case GateKind::S: out << "S " << g.target; break;
    case GateKind::Sdg: out << "SDG " << g.target; break;
    case GateKind::CX: out << "CX " << g.control << ' ' << g.target; break;
    case GateKind::CPauli: out << 'C' << to_char(g.letter) << ' ' << g.control << ' ' << g.target; break;
    case GateKind::Measure: out << "MEASURE " << g.target; break;
  }
  return out.str();
}

void Circuit::check_qubit(int q) const {
  if (q < 0 || q >= qubits_) throw CircuitError("gate target out of range");
}

Circuit& Circuit::append(const Gate& g) {
  check_qubit(g.target);
  if (g.control >= 0) {
    check_qubit(g.control);
    if (g.control == g.target) throw CircuitError("control equals target");
  }
  if (g.kind == GateKind::CPauli && g.letter == PauliLetter::I)
    throw CircuitError("controlled identity is not a gate");
  gates_.push_back(g);
  return *this;
}

Circuit& Circuit::ry(int q, double a) { return append(Gate{GateKind::RY, q, -1, a, PauliLetter::I}); }
Circuit& Circuit::rz(int q, double a) { return append(Gate{GateKind::RZ, q, -1, a, PauliLetter::I}); }
Circuit& Circuit::h(int q) { return append(Gate{GateKind::H, q}); }
Circuit& Circuit::x(int q) { return append(Gate{GateKind::X, q}); }
Circuit& Circuit::s(int q) { return append(Gate{GateKind::S, q}); }
Circuit& Circuit::sdg(int q) { return append(Gate{GateKind::Sdg, q}); }
Circuit& Circuit::cx(int c, int t) { return append(Gate{GateKind::CX, t, c}); }
Circuit& Circuit::cpauli(int c, int t, PauliLetter l) {
  return append(Gate{GateKind::CPauli, t, c, 0.0, l});
}
Circuit& Circuit::measure(int q) { return append(Gate{GateKind::Measure, q}); }

Circuit& Circuit::controlled_word(int control, const PauliWord& word, int offset) {
  for (int k = 0; k < word.qubits(); ++k) {
    const auto l = word.letter(k);
    if (l != PauliLetter::I) cpauli(control, k + offset, l);
  }
  return *this;
}

Circuit& Circuit::append(const Circuit& other, int offset) {
  if (offset < 0 || offset + other.qubits() > qubits_) throw CircuitError("appended circuit does not fit");
  for (Gate g : other.gates()) {
    g.target += offset;
    if (g.control >= 0) g.control += offset;
    append(g);
  }
  return *this;
}

Circuit Circuit::inverse() const {
  Circuit out(qubits_);
  for (auto it = gates_.rbegin(); it != gates_.rend(); ++it) out.append(it->inverse());
  return out;
}

std::size_t Circuit::count(GateKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(gates_.begin(), gates_.end(), [kind](const Gate& g) { return g.kind == kind; }));
}

void dump(std::ostream& out, const Circuit& c) {
  out << "QUBITS " << c.qubits() << '\n';
  for (const auto& g : c.gates()) out << to_string(g) << '\n';
}

Circuit build_ansatz(std::span<const double> params, int qubits, int offset, int total_qubits) {
  if (qubits < 1) throw CircuitError("Ansatz needs at least one qubit");
  if (params.size() != ansatz_parameter_count(qubits))
    throw CircuitError("Ansatz expects " + std::to_string(ansatz_parameter_count(qubits)) +
                       " parameters, got " + std::to_string(params.size()));
  Circuit c(total_qubits < 0 ? qubits + offset : total_qubits);
  for (int layer = 0; layer <= kAnsatzLayers; ++layer) {
    if (layer > 0) {
      for (int k = 0; k + 1 < qubits; ++k) c.cx(offset + k, offset + k + 1);
    }
    const std::size_t base = static_cast<std::size_t>(2 * qubits * layer);
    for (int k = 0; k < qubits; ++k) c.ry(offset + k, params[base + static_cast<std::size_t>(k)]);
    for (int k = 0; k < qubits; ++k)
      c.rz(offset + k, params[base + static_cast<std::size_t>(qubits + k)]);
  }
  return c;
}

}  // namespace qdrive
