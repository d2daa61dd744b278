#include "qdrive/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace qdrive {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

std::string_view to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

Parity parse_parity(std::string_view s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  throw ModelError("unknown parity '" + std::string(s) + "'");
}

Grid::Grid(double x_max, std::size_t n_points) : x_max_(x_max) {
  if (!(x_max > 0.0)) throw ModelError("grid x_max must be positive");
  if (n_points < 4 || !is_power_of_two(n_points))
    throw ModelError("grid point count must be a power of two >= 4");
  dx_ = 2.0 * x_max / static_cast<double>(n_points - 1);
  points_.resize(n_points);
  // Filled from both ends so the grid is exactly symmetric about 0.
  for (std::size_t k = 0; k < n_points; ++k) {
    points_[k] = -x_max + dx_ * static_cast<double>(k);
  }
  for (std::size_t k = 0; k < n_points / 2; ++k) {
    points_[n_points - 1 - k] = -points_[k];
  }
}

double evaluate_potential(double x, const PotentialModel& model) {
  return (0.5 * x * x - model.J) * std::exp(-model.lambda * x * x) + model.J;
}

double evaluate_cap(double x, const PotentialModel& model) {
  if (!model.cap_enabled) return 0.0;
  const double ax = std::abs(x);
  if (ax <= model.x0) return 0.0;
  const double d = ax - model.x0;
  return -0.5 * d * d;
}

Eigen::VectorXcd SineBasis::evaluate(const Eigen::VectorXcd& coeffs) const {
  return samples.transpose().cast<cplx>() * coeffs;
}

SineBasis build_basis(Parity parity, int qubits, const Grid& grid) {
  if (qubits < 1) throw ModelError("basis needs at least one qubit");
  const std::size_t n = std::size_t{1} << qubits;
  if (n > grid.size() / 4) throw ModelError("basis size exceeds n_points/4 (aliasing guard)");

  SineBasis basis;
  basis.parity = parity;
  basis.qubits = qubits;
  basis.length = 2.0 * grid.x_max();
  basis.modes.resize(n);
  basis.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));

  const double L = basis.length;
  const double dx = grid.spacing();
  const auto& x = grid.points();
  for (std::size_t j = 0; j < n; ++j) {
    const int w = parity == Parity::even ? static_cast<int>(2 * j + 1) : static_cast<int>(2 * j + 2);
    basis.modes[j] = w;
    const auto row = static_cast<Eigen::Index>(j);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      basis.samples(row, static_cast<Eigen::Index>(k)) =
          std::sqrt(2.0 / L) * std::sin(w * kPi / L * (x[k] - L / 2.0));
    }
    // Endpoints are zero analytically; remove the sin(w pi) round-off.
    basis.samples(row, 0) = 0.0;
    basis.samples(row, static_cast<Eigen::Index>(grid.size() - 1)) = 0.0;
    const double norm = std::sqrt(basis.samples.row(row).squaredNorm() * dx);
    basis.samples.row(row) /= norm;
  }
  return basis;
}

Eigen::MatrixXcd HamiltonianPair::nonhermitian() const {
  return hermitian + cplx(0.0, 1.0) * cap.cast<cplx>();
}

HamiltonianPair project_hamiltonians(const PotentialModel& model, const SineBasis& basis,
                                     const Grid& grid) {
  const auto npts = static_cast<Eigen::Index>(grid.size());
  if (basis.samples.cols() != npts) throw ModelError("basis was not built on this grid");
  if (basis.size() > grid.size() / 4) throw ModelError("basis size exceeds n_points/4 (aliasing guard)");

  const double dx = grid.spacing();
  const auto& x = grid.points();
  Eigen::VectorXd v0(npts), vcap(npts);
  for (Eigen::Index k = 0; k < npts; ++k) {
    v0(k) = evaluate_potential(x[static_cast<std::size_t>(k)], model);
    vcap(k) = evaluate_cap(x[static_cast<std::size_t>(k)], model);
  }

  // (T + V0) phi on the grid; three-point stencil with zero Dirichlet ghosts.
  const Eigen::MatrixXd& B = basis.samples;
  Eigen::MatrixXd HB(B.rows(), npts);
  const double kin = -0.5 / (dx * dx);
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index k = 0; k < npts; ++k) {
      const double left = k > 0 ? B(j, k - 1) : 0.0;
      const double right = k + 1 < npts ? B(j, k + 1) : 0.0;
      HB(j, k) = kin * (left - 2.0 * B(j, k) + right) + v0(k) * B(j, k);
    }
  }

  Eigen::MatrixXd hh = (B * HB.transpose()) * dx;
  hh = 0.5 * (hh + hh.transpose()).eval();
  Eigen::MatrixXd cap = (B * vcap.asDiagonal() * B.transpose()) * dx;
  cap = 0.5 * (cap + cap.transpose()).eval();

  HamiltonianPair pair;
  pair.hermitian = hh.cast<cplx>();
  pair.cap = cap;
  return pair;
}

std::string_view to_string(StateClass c) {
  switch (c) {
    case StateClass::bound: return "bound";
    case StateClass::resonance: return "resonance";
    case StateClass::spurious_diverging: return "spurious-diverging";
    case StateClass::spurious_gain: return "spurious-gain";
    case StateClass::spurious_indifferent: return "spurious-indifferent";
  }
  return "unknown";
}

bool is_spurious(StateClass c) {
  return c != StateClass::bound && c != StateClass::resonance;
}

StateClass classify_state(cplx energy, double pseudovariance, double cap_weight,
                          const ClassifierThresholds& t) {
  if (cap_weight > t.cap_weight_max) return StateClass::spurious_diverging;
  if (energy.imag() > t.im_gain_tol) return StateClass::spurious_gain;
  if (pseudovariance > t.sigma_max) return StateClass::spurious_indifferent;
  return std::abs(energy.imag()) < t.bound_im_tol ? StateClass::bound : StateClass::resonance;
}

double cap_region_weight(const Eigen::VectorXcd& coeffs, const SineBasis& basis, const Grid& grid,
                         double x0) {
  const Eigen::VectorXcd psi = basis.evaluate(coeffs);
  const auto& x = grid.points();
  double inside = 0.0, outside = 0.0;
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const double p = std::norm(psi(k));
    if (std::abs(x[static_cast<std::size_t>(k)]) > x0) outside += p; else inside += p;
  }
  const double total = inside + outside;
  return total > 0.0 ? outside / total : 0.0;
}

SpectrumRecord exact_diagonalize(const HamiltonianPair& pair) {
  const Eigen::MatrixXcd hn = pair.nonhermitian();
  if (hn.rows() > 64) throw ModelError("exact diagonalization limited to 2^6 basis states");

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(hn, true);
  if (solver.info() != Eigen::Success) throw ModelError("complex eigensolver did not converge");

  const Eigen::Index n = hn.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a).real() < values(b).real();
  });

  SpectrumRecord rec;
  rec.eigenvalues.resize(n);
  rec.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    rec.eigenvalues(k) = values(src);
    Eigen::VectorXcd v = solver.eigenvectors().col(src);
    v.normalize();
    // Fix the global phase: largest component real positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::conj(v(imax)) / std::abs(v(imax));
    rec.eigenvectors.col(k) = v;
  }

  const double scale = hn.cwiseAbs().maxCoeff() * static_cast<double>(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double residual =
        (hn * rec.eigenvectors.col(k) - rec.eigenvalues(k) * rec.eigenvectors.col(k)).norm();
    if (residual > 1e-8 * std::max(scale, 1.0))
      throw ModelError("eigenpair residual check failed");
  }
  return rec;
}

void classify_spectrum(SpectrumRecord& spectrum, const SineBasis& basis, const Grid& grid,
                       const PotentialModel& model, const ClassifierThresholds& thresholds) {
  spectrum.classes.clear();
  for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
    const double w = cap_region_weight(spectrum.eigenvectors.col(k), basis, grid, model.x0);
    spectrum.classes.push_back(classify_state(spectrum.eigenvalues(k), 0.0, w, thresholds));
  }
}

std::size_t match_hermitian_state(const HamiltonianPair& pair, const SpectrumRecord& spectrum,
                                  std::size_t hermitian_index) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> herm(pair.hermitian);
  const auto idx = static_cast<Eigen::Index>(hermitian_index);
  if (idx >= herm.eigenvectors().cols()) throw ModelError("Hermitian state index out of range");
  const Eigen::VectorXcd h = herm.eigenvectors().col(idx);
  Eigen::Index best = 0;
  (spectrum.eigenvectors.adjoint() * h).cwiseAbs2().maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

ChannelModel build_channel(const PotentialModel& potential, const Grid& grid, Parity parity,
                           int qubits) {
  SineBasis basis = build_basis(parity, qubits, grid);
  HamiltonianPair pair = project_hamiltonians(potential, basis, grid);
  return ChannelModel{potential, grid, std::move(basis), std::move(pair)};
}

}  // namespace qdrive
