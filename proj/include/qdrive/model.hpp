#pragma once

// One-dimensional predissociation benchmark: grid, potentials, parity-resolved
// sine basis, projected Hamiltonians and the exact-diagonalization oracle.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qdrive {

using cplx = std::complex<double>;

enum class Parity { even, odd };

std::string_view to_string(Parity p);
Parity parse_parity(std::string_view s);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform grid on [-x_max, x_max] including both endpoints.
class Grid {
 public:
  Grid(double x_max, std::size_t n_points);

  double x_max() const { return x_max_; }
  std::size_t size() const { return points_.size(); }
  double spacing() const { return dx_; }
  const std::vector<double>& points() const { return points_; }

 private:
  double x_max_;
  double dx_;
  std::vector<double> points_;
};

struct PotentialModel {
  double lambda = 0.1;  // Gaussian width parameter
  double J = 0.8;       // asymptote
  double x0 = 8.0;      // CAP onset
  bool cap_enabled = true;
};

/// V0(x) = (x^2/2 - J) exp(-lambda x^2) + J
double evaluate_potential(double x, const PotentialModel& model);

/// Quadratic CAP: 0 inside |x| <= x0, -(|x| - x0)^2 / 2 outside. Zero when
/// the model has the CAP disabled.
double evaluate_cap(double x, const PotentialModel& model);

struct SineBasis {
  Parity parity = Parity::even;
  int qubits = 0;
  double length = 0.0;
  std::vector<int> modes;   // w for each basis function
  Eigen::MatrixXd samples;  // one row per basis function, one column per grid point

  std::size_t size() const { return modes.size(); }

  /// Reconstruct psi(x_k) = sum_j c_j phi_j(x_k).
  Eigen::VectorXcd evaluate(const Eigen::VectorXcd& coeffs) const;
};

/// 2^q functions sqrt(2/L) sin(w pi / L (x - L/2)) sampled on the grid.
/// Even spatial parity takes odd w, odd parity takes even w.
SineBasis build_basis(Parity parity, int qubits, const Grid& grid);

struct HamiltonianPair {
  Eigen::MatrixXcd hermitian;  // H_H = T + V0
  Eigen::MatrixXd cap;         // V_CAP, symmetric negative semidefinite
  Eigen::MatrixXcd nonhermitian() const;  // H_H + i V_CAP
};

HamiltonianPair project_hamiltonians(const PotentialModel& model, const SineBasis& basis,
                                     const Grid& grid);

enum class StateClass { bound, resonance, spurious_diverging, spurious_gain, spurious_indifferent };

std::string_view to_string(StateClass c);
bool is_spurious(StateClass c);

/// Thresholds of the spurious-state classifier.
struct ClassifierThresholds {
  double cap_weight_max = 0.125;  // probability in |x| > x0 above this: diverging
  double im_gain_tol = 1e-3;     // Im E above +tol: unphysical gain
  double sigma_max = 0.5;        // pseudovariance above this: indifferent
  double bound_im_tol = 1e-3;    // |Im E| below this: bound
};

StateClass classify_state(cplx energy, double pseudovariance, double cap_weight,
                          const ClassifierThresholds& thresholds);

/// Probability weight of the basis-coefficient state in the CAP region |x| > x0.
double cap_region_weight(const Eigen::VectorXcd& coeffs, const SineBasis& basis, const Grid& grid,
                         double x0);

struct SpectrumRecord {
  Eigen::VectorXcd eigenvalues;   // sorted by real part
  Eigen::MatrixXcd eigenvectors;  // unit-norm columns
  std::vector<StateClass> classes;
};

/// Dense complex eigendecomposition of H_N. Throws ModelError if the solver
/// fails or the residual check does not hold.
SpectrumRecord exact_diagonalize(const HamiltonianPair& pair);

/// Fills SpectrumRecord::classes with pseudovariance 0 for every exact pair.
void classify_spectrum(SpectrumRecord& spectrum, const SineBasis& basis, const Grid& grid,
                       const PotentialModel& model, const ClassifierThresholds& thresholds);

/// Index of the H_N eigenvector with maximal overlap with the k-th (0-based)
/// eigenvector of H_H. Used to tie Hermitian state labels to Siegert states.
std::size_t match_hermitian_state(const HamiltonianPair& pair, const SpectrumRecord& spectrum,
                                  std::size_t hermitian_index);

/// Everything needed for one parity channel at q qubits.
struct ChannelModel {
  PotentialModel potential;
  Grid grid;
  SineBasis basis;
  HamiltonianPair pair;
};

ChannelModel build_channel(const PotentialModel& potential, const Grid& grid, Parity parity,
                           int qubits);

}  // namespace qdrive
