#pragma once

// Pauli code words and weighted sums of them.
//
// Conventions: a word acts on q qubits. Qubit k is bit k of a computational
// basis index. The text form lists letters from qubit q-1 down to qubit 0, so
// "XZ" is X on qubit 1 and Z on qubit 0, and its dense matrix is X (x) Z.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace qdrive {

using cplx = std::complex<double>;

class PauliError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(PauliLetter l);

class PauliWord {
 public:
  static constexpr int kMaxQubits = 32;

  PauliWord() = default;
  explicit PauliWord(int qubits);  // identity word
  static PauliWord parse(std::string_view letters);

  int qubits() const { return qubits_; }
  PauliLetter letter(int qubit) const {
    return static_cast<PauliLetter>((code_ >> (2 * qubit)) & 0x3u);
  }
  void set(int qubit, PauliLetter l);

  bool is_identity() const { return code_ == 0; }
  /// Bits of qubits carrying X or Y (the flip mask).
  std::uint64_t x_mask() const;
  /// Bits of qubits carrying Y or Z (the phase mask).
  std::uint64_t z_mask() const;
  /// Qubits carrying a non-identity letter.
  std::uint64_t support() const;

  /// P|index> = phase * |index ^ x_mask()>.
  cplx phase_on(std::uint64_t index) const;

  std::string str() const;
  std::uint64_t code() const { return code_; }

  friend bool operator==(const PauliWord&, const PauliWord&) = default;
  friend auto operator<=>(const PauliWord& a, const PauliWord& b) {
    if (a.qubits_ != b.qubits_) return a.qubits_ <=> b.qubits_;
    return a.code_ <=> b.code_;
  }

 private:
  int qubits_ = 0;
  std::uint64_t code_ = 0;
};

/// Product of two words including the phase: a * b = phase * word.
std::pair<cplx, PauliWord> multiply_words(const PauliWord& a, const PauliWord& b);

Eigen::MatrixXcd to_dense(const PauliWord& w);

class PauliSum {
 public:
  static constexpr double kPruneTol = 1e-14;
  static constexpr double kHermitianTol = 1e-12;

  PauliSum() = default;
  explicit PauliSum(int qubits) : qubits_(qubits) {}

  int qubits() const { return qubits_; }
  const std::map<PauliWord, cplx>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Coefficient of a word, zero if absent.
  cplx coefficient(const PauliWord& w) const;
  void add(const PauliWord& w, cplx c);
  void prune(double tol = kPruneTol);

  bool is_hermitian() const;

  PauliSum& operator+=(const PauliSum& other);
  PauliSum& operator*=(cplx s);

  /// Real and imaginary coefficient parts as separate sums.
  PauliSum real_part() const;
  PauliSum imag_part() const;

 private:
  int qubits_ = 0;
  std::map<PauliWord, cplx> terms_;
};

PauliSum operator+(PauliSum a, const PauliSum& b);
PauliSum operator*(cplx s, PauliSum a);

/// C_P = Tr(M P) / 2^q. Rejects non-square or non-power-of-two input.
PauliSum decompose(const Eigen::MatrixXcd& m);
PauliSum multiply(const PauliSum& a, const PauliSum& b);
PauliSum adjoint(const PauliSum& a);
Eigen::MatrixXcd to_dense(const PauliSum& s);

/// One "coeff_re coeff_im WORD" line per term.
void write_text(std::ostream& out, const PauliSum& s);
PauliSum read_text(std::istream& in);

}  // namespace qdrive
