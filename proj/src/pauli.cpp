#include "qdrive/pauli.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace qdrive {

namespace {
const cplx kI(0.0, 1.0);

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Single-letter product table: (phase, letter) of a*b.
std::pair<cplx, PauliLetter> letter_product(PauliLetter a, PauliLetter b) {
  using L = PauliLetter;
  if (a == L::I) return {1.0, b};
  if (b == L::I) return {1.0, a};
  if (a == b) return {1.0, L::I};
  const int ia = static_cast<int>(a), ib = static_cast<int>(b);
  const auto c = static_cast<L>(6 - ia - ib);  // the remaining letter among X,Y,Z
  // X*Y = iZ, Y*Z = iX, Z*X = iY; reversed order gives -i.
  const bool cyclic = (ia % 3) + 1 == ib;
  return {cyclic ? kI : -kI, c};
}
}  // namespace

char to_char(PauliLetter l) {
  static constexpr char kChars[] = {'I', 'X', 'Y', 'Z'};
  return kChars[static_cast<int>(l)];
}

PauliWord::PauliWord(int qubits) : qubits_(qubits) {
  if (qubits < 0 || qubits > kMaxQubits) throw PauliError("Pauli word qubit count out of range");
}

PauliWord PauliWord::parse(std::string_view letters) {
  PauliWord w(static_cast<int>(letters.size()));
  for (std::size_t pos = 0; pos < letters.size(); ++pos) {
    const int qubit = static_cast<int>(letters.size() - 1 - pos);
    switch (letters[pos]) {
      case 'I': break;
      case 'X': w.set(qubit, PauliLetter::X); break;
      case 'Y': w.set(qubit, PauliLetter::Y); break;
      case 'Z': w.set(qubit, PauliLetter::Z); break;
      default: throw PauliError("invalid Pauli letter '" + std::string(1, letters[pos]) + "'");
    }
  }
  return w;
}

void PauliWord::set(int qubit, PauliLetter l) {
  if (qubit < 0 || qubit >= qubits_) throw PauliError("Pauli letter qubit out of range");
  const auto shift = static_cast<unsigned>(2 * qubit);
  code_ = (code_ & ~(std::uint64_t{0x3} << shift)) |
          (static_cast<std::uint64_t>(l) << shift);
}

std::uint64_t PauliWord::x_mask() const {
  std::uint64_t m = 0;
  for (int k = 0; k < qubits_; ++k) {
    const auto l = letter(k);
    if (l == PauliLetter::X || l == PauliLetter::Y) m |= std::uint64_t{1} << k;
  }
  return m;
}

std::uint64_t PauliWord::z_mask() const {
  std::uint64_t m = 0;
  for (int k = 0; k < qubits_; ++k) {
    const auto l = letter(k);
    if (l == PauliLetter::Y || l == PauliLetter::Z) m |= std::uint64_t{1} << k;
  }
  return m;
}

std::uint64_t PauliWord::support() const { return x_mask() | z_mask(); }

cplx PauliWord::phase_on(std::uint64_t index) const {
  cplx phase = 1.0;
  for (int k = 0; k < qubits_; ++k) {
    const bool bit = (index >> k) & 1u;
    switch (letter(k)) {
      case PauliLetter::I:
      case PauliLetter::X: break;
      case PauliLetter::Y: phase *= bit ? -kI : kI; break;
      case PauliLetter::Z: if (bit) phase = -phase; break;
    }
  }
  return phase;
}

std::string PauliWord::str() const {
  std::string s(static_cast<std::size_t>(qubits_), 'I');
  for (int k = 0; k < qubits_; ++k) s[static_cast<std::size_t>(qubits_ - 1 - k)] = to_char(letter(k));
  return s;
}

std::pair<cplx, PauliWord> multiply_words(const PauliWord& a, const PauliWord& b) {
  if (a.qubits() != b.qubits()) throw PauliError("Pauli word qubit-count mismatch");
  PauliWord out(a.qubits());
  cplx phase = 1.0;
  for (int k = 0; k < a.qubits(); ++k) {
    const auto [p, l] = letter_product(a.letter(k), b.letter(k));
    phase *= p;
    if (l != PauliLetter::I) out.set(k, l);
  }
  return {phase, out};
}

Eigen::MatrixXcd to_dense(const PauliWord& w) {
  const Eigen::Index dim = Eigen::Index{1} << w.qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  const auto flip = w.x_mask();
  for (Eigen::Index c = 0; c < dim; ++c) {
    const auto col = static_cast<std::uint64_t>(c);
    m(static_cast<Eigen::Index>(col ^ flip), c) = w.phase_on(col);
  }
  return m;
}

cplx PauliSum::coefficient(const PauliWord& w) const {
  const auto it = terms_.find(w);
  return it == terms_.end() ? cplx{} : it->second;
}

void PauliSum::add(const PauliWord& w, cplx c) {
  if (terms_.empty() && qubits_ == 0) qubits_ = w.qubits();
  if (w.qubits() != qubits_) throw PauliError("Pauli sum qubit-count mismatch");
  terms_[w] += c;
}

void PauliSum::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) < tol; });
}

bool PauliSum::is_hermitian() const {
  for (const auto& [w, c] : terms_)
    if (std::abs(c.imag()) > kHermitianTol) return false;
  return true;
}

PauliSum& PauliSum::operator+=(const PauliSum& other) {
  if (qubits_ == 0 && terms_.empty()) qubits_ = other.qubits_;
  if (other.qubits_ != qubits_) throw PauliError("Pauli sum qubit-count mismatch");
  for (const auto& [w, c] : other.terms_) terms_[w] += c;
  prune();
  return *this;
}

PauliSum& PauliSum::operator*=(cplx s) {
  for (auto& kv : terms_) kv.second *= s;
  prune();
  return *this;
}

PauliSum PauliSum::real_part() const {
  PauliSum out(qubits_);
  for (const auto& [w, c] : terms_) out.terms_[w] = c.real();
  out.prune();
  return out;
}

PauliSum PauliSum::imag_part() const {
  PauliSum out(qubits_);
  for (const auto& [w, c] : terms_) out.terms_[w] = c.imag();
  out.prune();
  return out;
}

PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
PauliSum operator*(cplx s, PauliSum a) { return a *= s; }

PauliSum decompose(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
    throw PauliError("decompose needs a square matrix of power-of-two dimension");
  const int q = std::countr_zero(static_cast<std::uint64_t>(m.rows()));
  if (q > 10) throw PauliError("decompose limited to 10 qubits");
  const std::uint64_t dim = std::uint64_t{1} << q;
  const std::uint64_t nwords = std::uint64_t{1} << (2 * q);

  PauliSum out(q);
  for (std::uint64_t code = 0; code < nwords; ++code) {
    PauliWord w(q);
    for (int k = 0; k < q; ++k) w.set(k, static_cast<PauliLetter>((code >> (2 * k)) & 0x3u));
    // Tr(M P) = sum_c M[c, c^x] * phase(c)
    const auto flip = w.x_mask();
    cplx tr = 0.0;
    for (std::uint64_t c = 0; c < dim; ++c) {
      tr += m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c ^ flip)) * w.phase_on(c);
    }
    const cplx coeff = tr / static_cast<double>(dim);
    if (std::abs(coeff) >= PauliSum::kPruneTol) out.add(w, coeff);
  }
  return out;
}

PauliSum multiply(const PauliSum& a, const PauliSum& b) {
  if (a.qubits() != b.qubits()) throw PauliError("Pauli sum qubit-count mismatch");
  PauliSum out(a.qubits());
  for (const auto& [wa, ca] : a.terms())
    for (const auto& [wb, cb] : b.terms()) {
      const auto [phase, w] = multiply_words(wa, wb);
      out.add(w, phase * ca * cb);
    }
  out.prune();
  return out;
}

PauliSum adjoint(const PauliSum& a) {
  PauliSum out(a.qubits());
  for (const auto& [w, c] : a.terms()) out.add(w, std::conj(c));
  return out;
}

Eigen::MatrixXcd to_dense(const PauliSum& s) {
  const Eigen::Index dim = Eigen::Index{1} << s.qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [w, c] : s.terms()) {
    const auto flip = w.x_mask();
    for (Eigen::Index col = 0; col < dim; ++col) {
      const auto uc = static_cast<std::uint64_t>(col);
      m(static_cast<Eigen::Index>(uc ^ flip), col) += c * w.phase_on(uc);
    }
  }
  return m;
}

void write_text(std::ostream& out, const PauliSum& s) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  for (const auto& [w, c] : s.terms()) out << c.real() << ' ' << c.imag() << ' ' << w.str() << '\n';
  out.flags(flags);
  out.precision(prec);
}

PauliSum read_text(std::istream& in) {
  PauliSum s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    std::string word;
    if (!(ls >> re >> im >> word))
      throw PauliError("malformed Pauli term on line " + std::to_string(lineno));
    s.add(PauliWord::parse(word), cplx(re, im));
  }
  return s;
}

}  // namespace qdrive
