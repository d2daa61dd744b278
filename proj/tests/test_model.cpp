#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qdrive/model.hpp"

using namespace qdrive;

namespace {

const Grid& benchmark_grid() {
  static const Grid g(10.0, 4096);
  return g;
}

double relerr(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

bool contains(const SpectrumRecord& s, cplx e, double tol) {
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    if (relerr(s.eigenvalues(k), e) < tol) return true;
  return false;
}

}  // namespace

TEST(Potential, ClosedForm) {
  PotentialModel m;
  EXPECT_DOUBLE_EQ(evaluate_potential(0.0, m), 0.0);
  EXPECT_NEAR(evaluate_potential(2.0, m), 1.604384, 1e-6);
  EXPECT_NEAR(evaluate_potential(1e3, m), 0.8, 1e-12);
  EXPECT_NEAR(evaluate_potential(-1e3, m), 0.8, 1e-12);
}

TEST(Potential, Cap) {
  PotentialModel m;
  EXPECT_EQ(evaluate_cap(5.0, m), 0.0);
  EXPECT_EQ(evaluate_cap(8.0, m), 0.0);
  EXPECT_DOUBLE_EQ(evaluate_cap(9.0, m), -0.5);
  EXPECT_DOUBLE_EQ(evaluate_cap(-9.0, m), -0.5);
  for (double x = -10; x <= 10; x += 0.25) EXPECT_LE(evaluate_cap(x, m), 0.0);
  m.cap_enabled = false;
  EXPECT_EQ(evaluate_cap(9.0, m), 0.0);
}

TEST(Grid, SymmetricAndIncreasing) {
  const Grid g(10.0, 64);
  ASSERT_EQ(g.size(), 64u);
  EXPECT_DOUBLE_EQ(g.spacing(), 20.0 / 63.0);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_GT(g.points()[k], g.points()[k - 1]);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g.points()[k], -g.points()[g.size() - 1 - k], 1e-12);
  EXPECT_THROW(Grid(10.0, 2), ModelError);
}

TEST(Basis, ModeAssignment) {
  const Grid& g = benchmark_grid();
  EXPECT_EQ(build_basis(Parity::even, 1, g).modes, (std::vector<int>{1, 3}));
  EXPECT_EQ(build_basis(Parity::odd, 1, g).modes, (std::vector<int>{2, 4}));
}

TEST(Basis, OrthonormalWithParity) {
  const Grid& g = benchmark_grid();
  for (Parity p : {Parity::even, Parity::odd}) {
    for (int q = 1; q <= 4; ++q) {
      const SineBasis b = build_basis(p, q, g);
      const Eigen::MatrixXd gram = b.samples * b.samples.transpose() * g.spacing();
      EXPECT_LT((gram - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 1e-8);
      const Eigen::Index n = b.samples.cols();
      EXPECT_NEAR(b.samples(0, 0), 0.0, 1e-12);
      EXPECT_NEAR(b.samples(0, n - 1), 0.0, 1e-12);
      const double sign = p == Parity::even ? 1.0 : -1.0;
      for (Eigen::Index r = 0; r < b.samples.rows(); ++r)
        for (Eigen::Index k = 0; k < n; k += 97) EXPECT_NEAR(b.samples(r, k), sign * b.samples(r, n - 1 - k), 1e-9);
    }
  }
}

TEST(Basis, AliasingGuard) {
  const Grid g(10.0, 16);
  EXPECT_NO_THROW(build_basis(Parity::even, 2, g));
  EXPECT_THROW(build_basis(Parity::even, 3, g), ModelError);
  EXPECT_THROW(build_basis(Parity::even, 0, g), ModelError);
}

TEST(Hamiltonians, FreeParticleInBox) {
  PotentialModel free;
  free.J = 0.0;
  free.lambda = 1e9;
  free.cap_enabled = false;
  const Grid& g = benchmark_grid();
  const SineBasis b = build_basis(Parity::even, 2, g);
  const HamiltonianPair pair = project_hamiltonians(free, b, g);
  const double L = 2.0 * g.x_max();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pair.hermitian);
  for (int k = 0; k < 2; ++k) {
    const double w = b.modes[k];
    const double analytic = 0.5 * std::pow(w * M_PI / L, 2);
    EXPECT_LT(std::abs(es.eigenvalues()(k) - analytic) / analytic, 0.01);
  }
  EXPECT_EQ(pair.cap.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hamiltonians, Structure) {
  const Grid& g = benchmark_grid();
  for (Parity p : {Parity::even, Parity::odd}) {
    const ChannelModel ch = build_channel(PotentialModel{}, g, p, 3);
    const auto& h = ch.pair.hermitian;
    EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((ch.pair.cap - ch.pair.cap.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ch.pair.cap);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-10);
    const Eigen::MatrixXcd hn = ch.pair.nonhermitian();
    EXPECT_EQ((hn - (h + cplx(0, 1) * ch.pair.cap.cast<cplx>())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Hamiltonians, ExpectationSplits) {
  const ChannelModel ch = build_channel(PotentialModel{}, benchmark_grid(), Parity::even, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXcd psi(8);
    for (auto& c : psi) c = cplx(n(rng), n(rng));
    psi.normalize();
    const cplx full = psi.dot(ch.pair.nonhermitian() * psi);
    const cplx split = psi.dot(ch.pair.hermitian * psi) + cplx(0, 1) * psi.dot(ch.pair.cap.cast<cplx>() * psi);
    EXPECT_LT(std::abs(full - split), 1e-12);
  }
}

TEST(Oracle, TableEnergies) {
  const Grid& g = benchmark_grid();
  const SpectrumRecord q2e = exact_diagonalize(build_channel(PotentialModel{}, g, Parity::even, 2).pair);
  EXPECT_TRUE(contains(q2e, {0.623, -2.63e-3}, 0.01));
  EXPECT_TRUE(contains(q2e, {2.36, -5.83e-3}, 0.01));
  const SpectrumRecord q3e = exact_diagonalize(build_channel(PotentialModel{}, g, Parity::even, 3).pair);
  EXPECT_TRUE(contains(q3e, {0.505, -2.02e-5}, 0.01));
  const SpectrumRecord q4o = exact_diagonalize(build_channel(PotentialModel{}, g, Parity::odd, 4).pair);
  EXPECT_TRUE(contains(q4o, {1.42, -3.60e-5}, 0.01));
}

TEST(Oracle, ResidualsAndAbsorption) {
  const Grid& g = benchmark_grid();
  for (int q = 1; q <= 5; ++q) {
    for (Parity p : {Parity::even, Parity::odd}) {
      const HamiltonianPair pair = build_channel(PotentialModel{}, g, p, q).pair;
      const SpectrumRecord s = exact_diagonalize(pair);
      const Eigen::MatrixXcd hn = pair.nonhermitian();
      const double scale = hn.norm();
      for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
        EXPECT_LT((hn * s.eigenvectors.col(k) - s.eigenvalues(k) * s.eigenvectors.col(k)).norm(), 1e-8 * scale);
        EXPECT_LE(s.eigenvalues(k).imag(), 1e-8);
        if (k > 0) EXPECT_LE(s.eigenvalues(k - 1).real(), s.eigenvalues(k).real());
      }
    }
  }
}

TEST(Oracle, HermitianSpectrumIsReal) {
  PotentialModel m;
  m.cap_enabled = false;
  const SpectrumRecord s = exact_diagonalize(build_channel(m, benchmark_grid(), Parity::odd, 3).pair);
  for (auto e : s.eigenvalues) EXPECT_LT(std::abs(e.imag()), 1e-10);
}

TEST(Oracle, ParityChannelsMatchUnresolvedBasis) {
  const Grid& g = benchmark_grid();
  const int q = 2;
  const SineBasis even = build_basis(Parity::even, q, g);
  const SineBasis odd = build_basis(Parity::odd, q, g);
  SineBasis full;
  full.parity = Parity::even;
  full.qubits = q + 1;
  full.length = even.length;
  full.samples.resize(2 * even.size(), even.samples.cols());
  for (std::size_t k = 0; k < even.size(); ++k) {
    full.modes.push_back(even.modes[k]);
    full.samples.row(2 * k) = even.samples.row(k);
    full.modes.push_back(odd.modes[k]);
    full.samples.row(2 * k + 1) = odd.samples.row(k);
  }
  const SpectrumRecord union_spec = exact_diagonalize(project_hamiltonians(PotentialModel{}, full, g));
  const SpectrumRecord se = exact_diagonalize(project_hamiltonians(PotentialModel{}, even, g));
  const SpectrumRecord so = exact_diagonalize(project_hamiltonians(PotentialModel{}, odd, g));
  std::vector<cplx> parts;
  for (auto e : se.eigenvalues) parts.push_back(e);
  for (auto e : so.eigenvalues) parts.push_back(e);
  ASSERT_EQ(parts.size(), static_cast<std::size_t>(union_spec.eigenvalues.size()));
  for (cplx e : parts) {
    double best = 1e9;
    for (auto u : union_spec.eigenvalues) best = std::min(best, std::abs(u - e));
    EXPECT_LT(best, 1e-6);
  }
}

TEST(Classifier, Rules) {
  const ClassifierThresholds t;
  EXPECT_EQ(classify_state({0.5, -1e-5}, 0.0, 0.0, t), StateClass::bound);
  EXPECT_EQ(classify_state({1.4, -0.02}, 0.0, 0.01, t), StateClass::resonance);
  EXPECT_EQ(classify_state({1.4, -0.02}, 0.0, 0.9, t), StateClass::spurious_diverging);
  EXPECT_EQ(classify_state({1.4, +0.02}, 0.0, 0.0, t), StateClass::spurious_gain);
  EXPECT_EQ(classify_state({1.4, -0.02}, 0.9, 0.0, t), StateClass::spurious_indifferent);
  EXPECT_TRUE(is_spurious(StateClass::spurious_gain));
  EXPECT_FALSE(is_spurious(StateClass::bound));
}

TEST(Classifier, OracleStates) {
  const Grid& g = benchmark_grid();
  const ChannelModel ch = build_channel(PotentialModel{}, g, Parity::even, 3);
  SpectrumRecord s = exact_diagonalize(ch.pair);
  classify_spectrum(s, ch.basis, g, ch.potential, ClassifierThresholds{});
  const std::size_t bound = match_hermitian_state(ch.pair, s, 0);
  const std::size_t r2 = match_hermitian_state(ch.pair, s, 3);
  EXPECT_EQ(s.classes[bound], StateClass::bound);
  EXPECT_EQ(s.classes[r2], StateClass::resonance);
  EXPECT_NEAR(s.eigenvalues(r2).real(), 2.15, 0.01 * 2.15);
}

TEST(Classifier, CapRegionWeight) {
  const Grid& g = benchmark_grid();
  const ChannelModel ch = build_channel(PotentialModel{}, g, Parity::even, 3);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(8);
  c(0) = 1.0;
  const double w = cap_region_weight(c, ch.basis, g, 8.0);
  EXPECT_GT(w, 0.0);
  EXPECT_LT(w, 0.1);
  EXPECT_NEAR(cap_region_weight(c, ch.basis, g, -1.0), 1.0, 1e-9);
  EXPECT_EQ(classify_state({1.0, -0.01}, 0.0, cap_region_weight(c, ch.basis, g, -1.0), ClassifierThresholds{}),
            StateClass::spurious_diverging);
}
