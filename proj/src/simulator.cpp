#include "qdrive/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace qdrive {

namespace {
const cplx kI(0.0, 1.0);

Eigen::Matrix2cd gate_matrix(const Gate& g) {
  Eigen::Matrix2cd m;
  switch (g.kind) {
    case GateKind::RY: {
      const double c = std::cos(0.5 * g.angle), s = std::sin(0.5 * g.angle);
      m << c, -s, s, c;
      break;
    }
    case GateKind::RZ:
      m << std::exp(-0.5 * kI * g.angle), 0.0, 0.0, std::exp(0.5 * kI * g.angle);
      break;
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      m << r, r, r, -r;
      break;
    }
    case GateKind::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case GateKind::S: m << 1.0, 0.0, 0.0, kI; break;
    case GateKind::Sdg: m << 1.0, 0.0, 0.0, -kI; break;
    default: throw SimulationError("not a single-qubit gate");
  }
  return m;
}

Eigen::Matrix2cd letter_matrix(PauliLetter l) {
  Eigen::Matrix2cd m;
  switch (l) {
    case PauliLetter::I: m << 1.0, 0.0, 0.0, 1.0; break;
    case PauliLetter::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case PauliLetter::Y: m << 0.0, -kI, kI, 0.0; break;
    case PauliLetter::Z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

// m acting on bit `bit`; when control >= 0 only on indices with that bit set.
void apply_1q(std::vector<cplx>& v, int bit, const Eigen::Matrix2cd& m, int control = -1) {
  const std::size_t stride = std::size_t{1} << bit;
  const std::size_t cmask = control >= 0 ? std::size_t{1} << control : 0;
  const cplx a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((i & stride) || (i & cmask) != cmask) continue;
    const cplx v0 = v[i], v1 = v[i | stride];
    v[i] = a * v0 + b * v1;
    v[i | stride] = c * v0 + d * v1;
  }
}

void apply_gate_on(std::vector<cplx>& v, const Gate& g, int shift, bool conjugate) {
  const int t = g.target + shift;
  switch (g.kind) {
    case GateKind::CX: apply_1q(v, t, letter_matrix(PauliLetter::X), g.control + shift); return;
    case GateKind::CPauli: {
      const Eigen::Matrix2cd m = letter_matrix(g.letter);
      apply_1q(v, t, conjugate ? Eigen::Matrix2cd(m.conjugate()) : m, g.control + shift);
      return;
    }
    case GateKind::Measure: throw SimulationError("measurement inside unitary evolution");
    default: {
      const Eigen::Matrix2cd m = gate_matrix(g);
      apply_1q(v, t, conjugate ? Eigen::Matrix2cd(m.conjugate()) : m);
      return;
    }
  }
}

double gate_duration(const Gate& g, const NoiseModel& noise) {
  return g.arity() == 2 ? noise.two_qubit_gate_us : noise.one_qubit_gate_us;
}

void apply_noise_unchecked(DensityMatrix& rho, const Gate& gate, const NoiseModel& noise) {
  if (gate.kind == GateKind::Measure) return;
  int gq[2] = {gate.target, gate.control};
  const int arity = gate.arity();
  for (int k = 0; k < arity; ++k) {
    if (gq[k] >= noise.size()) throw SimulationError("circuit exceeds the noise profile qubit count");
  }
  const double t = gate_duration(gate, noise);
  for (int k = 0; k < arity; ++k) {
    const auto& qn = noise.qubits[static_cast<std::size_t>(gq[k])];
    const auto rates = relaxation_rates(t, qn.t1_us, qn.t2_us);
    if (rates.gamma1 > 0.0) {
      const auto kraus = amplitude_damping_kraus(rates.gamma1, qn.excited_population);
      rho.apply_kraus(gq[k], kraus);
    }
    if (rates.gamma_phi > 0.0) {
      const auto kraus = phase_damping_kraus(rates.gamma_phi);
      rho.apply_kraus(gq[k], kraus);
    }
  }
  double p = 0.0;
  if (arity == 1) {
    p = noise.qubits[static_cast<std::size_t>(gate.target)].p1;
  } else {
    p = 0.5 * (noise.qubits[static_cast<std::size_t>(gate.target)].p2 +
               noise.qubits[static_cast<std::size_t>(gate.control)].p2);
  }
  if (p > 0.0) rho.apply_depolarizing(std::span<const int>(gq, static_cast<std::size_t>(arity)), p);
}
}  // namespace

StateVector zero_state(int qubits) {
  if (qubits < 1 || qubits > 24) throw SimulationError("statevector qubit count out of range");
  StateVector s(std::size_t{1} << qubits, cplx{});
  s[0] = 1.0;
  return s;
}

void apply_gate(StateVector& state, const Gate& gate) { apply_gate_on(state, gate, 0, false); }

StateVector statevector(const Circuit& circuit) {
  StateVector s = zero_state(circuit.qubits());
  for (const auto& g : circuit.gates()) {
    if (g.kind == GateKind::Measure) throw SimulationError("statevector circuit contains measurements");
    apply_gate(s, g);
  }
  return s;
}

std::vector<double> probabilities(const StateVector& state) {
  std::vector<double> p(state.size());
  std::transform(state.begin(), state.end(), p.begin(), [](cplx a) { return std::norm(a); });
  return p;
}

cplx expectation(const StateVector& state, const PauliWord& word, int offset) {
  const std::uint64_t flip = word.x_mask() << offset;
  const std::uint64_t mask = ((std::uint64_t{1} << word.qubits()) - 1) << offset;
  cplx acc = 0.0;
  for (std::uint64_t i = 0; i < state.size(); ++i) {
    // P|i> = phase |i ^ flip>, so <psi|P|psi> = sum_i conj(psi[i^flip]) phase psi[i].
    const cplx phase = word.phase_on((i & mask) >> offset);
    acc += std::conj(state[i ^ flip]) * phase * state[i];
  }
  return acc;
}

DensityMatrix::DensityMatrix(int qubits) : qubits_(qubits) {
  if (qubits < 1 || qubits > 6) throw SimulationError("density-matrix qubit count out of range");
  data_.assign(std::size_t{1} << (2 * qubits), cplx{});
  data_[0] = 1.0;
}

DensityMatrix DensityMatrix::from_state(const StateVector& psi) {
  int n = 0;
  while ((std::size_t{1} << n) < psi.size()) ++n;
  if ((std::size_t{1} << n) != psi.size()) throw SimulationError("state size is not a power of two");
  DensityMatrix rho(n);
  for (std::size_t r = 0; r < psi.size(); ++r)
    for (std::size_t c = 0; c < psi.size(); ++c) rho.data_[r + (c << n)] = psi[r] * std::conj(psi[c]);
  return rho;
}

DensityMatrix DensityMatrix::from_matrix(const Eigen::MatrixXcd& m) {
  int n = 0;
  while ((Eigen::Index{1} << n) < m.rows()) ++n;
  if (m.rows() != m.cols() || (Eigen::Index{1} << n) != m.rows())
    throw SimulationError("density matrix must be square with power-of-two size");
  DensityMatrix rho(n);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      rho.data_[static_cast<std::size_t>(r) + (static_cast<std::size_t>(c) << n)] = m(r, c);
  return rho;
}

Eigen::MatrixXcd DensityMatrix::matrix() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXcd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      m(r, c) = (*this)(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  return m;
}

cplx DensityMatrix::trace() const {
  cplx t = 0.0;
  for (std::size_t r = 0; r < dim(); ++r) t += (*this)(r, r);
  return t;
}

std::vector<double> DensityMatrix::probabilities() const {
  std::vector<double> p(dim());
  for (std::size_t r = 0; r < dim(); ++r) p[r] = std::max(0.0, (*this)(r, r).real());
  return p;
}

bool DensityMatrix::is_valid(double tol) const {
  if (std::abs(trace() - 1.0) > tol) return false;
  const Eigen::MatrixXcd m = matrix();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues().minCoeff() >= -tol;
}

void DensityMatrix::apply_unitary(const Gate& gate) {
  if (gate.target >= qubits_ || gate.control >= qubits_) throw SimulationError("gate outside density matrix");
  apply_gate_on(data_, gate, 0, false);
  apply_gate_on(data_, gate, qubits_, true);
}

void DensityMatrix::apply_kraus(int qubit, std::span<const Eigen::Matrix2cd> kraus) {
  std::vector<cplx> acc(data_.size(), cplx{});
  std::vector<cplx> work;
  for (const auto& k : kraus) {
    work = data_;
    apply_1q(work, qubit, k);
    apply_1q(work, qubit + qubits_, k.conjugate());
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
  }
  data_.swap(acc);
}

void DensityMatrix::apply_depolarizing(std::span<const int> qs, double p) {
  if (p <= 0.0) return;
  const std::size_t d = qs.size();
  const std::size_t nterms = std::size_t{1} << (2 * d);
  std::vector<cplx> acc(data_.size(), cplx{});
  std::vector<cplx> work;
  for (std::size_t code = 0; code < nterms; ++code) {
    work = data_;
    for (std::size_t j = 0; j < d; ++j) {
      const auto l = static_cast<PauliLetter>((code >> (2 * j)) & 0x3u);
      if (l == PauliLetter::I) continue;
      const Eigen::Matrix2cd m = letter_matrix(l);
      apply_1q(work, qs[j], m);
      apply_1q(work, qs[j] + qubits_, m.conjugate());
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
  }
  const double w = p / static_cast<double>(nterms);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = (1.0 - p) * data_[i] + w * acc[i];
}

std::vector<Eigen::Matrix2cd> amplitude_damping_kraus(double gamma1, double pe) {
  const double a = std::sqrt(1.0 - pe), b = std::sqrt(pe);
  const double s = std::sqrt(gamma1), r = std::sqrt(1.0 - gamma1);
  Eigen::Matrix2cd k0, k1, k2, k3;
  k0 << a, 0.0, 0.0, a * r;
  k1 << 0.0, a * s, 0.0, 0.0;
  k2 << b * r, 0.0, 0.0, b;
  k3 << 0.0, 0.0, b * s, 0.0;
  return {k0, k1, k2, k3};
}

std::vector<Eigen::Matrix2cd> phase_damping_kraus(double gamma2) {
  Eigen::Matrix2cd k0, k1;
  k0 << 1.0, 0.0, 0.0, std::sqrt(1.0 - gamma2);
  k1 << 0.0, 0.0, 0.0, std::sqrt(gamma2);
  return {k0, k1};
}

RelaxationRates relaxation_rates(double t, double t1, double t2) {
  RelaxationRates r;
  if (!(t > 0.0)) return r;
  if (std::isfinite(t1)) r.gamma1 = 1.0 - std::exp(-t / t1);
  if (std::isfinite(t2)) {
    // sqrt(1 - gamma1) sqrt(1 - gamma_phi) = exp(-t/T2)
    const double inv_t1 = std::isfinite(t1) ? 1.0 / t1 : 0.0;
    const double rate = 2.0 / t2 - inv_t1;
    r.gamma_phi = rate > 0.0 ? 1.0 - std::exp(-t * rate) : 0.0;
  }
  return r;
}

DensityMatrix apply_noise_channels(DensityMatrix rho, const Gate& gate, const NoiseModel& noise) {
  if (!rho.is_valid(1e-8)) throw SimulationError("invalid density matrix");
  apply_noise_unchecked(rho, gate, noise);
  return rho;
}

DensityMatrix simulate_density(const Circuit& circuit, const NoiseModel& noise) {
  if (circuit.qubits() > noise.size()) throw SimulationError("circuit exceeds the noise profile qubit count");
  DensityMatrix rho(circuit.qubits());
  for (const auto& g : circuit.gates()) {
    if (g.kind == GateKind::Measure) continue;
    rho.apply_unitary(g);
    apply_noise_unchecked(rho, g, noise);
  }
  return rho;
}

std::vector<double> Measurement::probabilities() const {
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = shots ? static_cast<double>(counts[i]) / static_cast<double>(shots) : 0.0;
  return p;
}

Measurement sample_shots(std::span<const double> probs, std::size_t shots, std::uint64_t seed) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw SimulationError("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SimulationError("probabilities must sum to one");

  std::mt19937_64 rng(seed);
  Measurement m;
  m.shots = shots;
  m.counts.assign(probs.size(), 0);
  std::uint64_t remaining = shots;
  double mass = total;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    if (i + 1 == probs.size() || probs[i] >= mass) {
      m.counts[i] = remaining;
      remaining = 0;
      break;
    }
    const double p = std::clamp(probs[i] / mass, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(remaining, p);
    const std::uint64_t k = draw(rng);
    m.counts[i] = k;
    remaining -= k;
    mass -= probs[i];
  }
  return m;
}

}  // namespace qdrive
