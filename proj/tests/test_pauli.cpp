#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qdrive/model.hpp"
#include "qdrive/pauli.hpp"

using namespace qdrive;

namespace {

Eigen::MatrixXcd random_matrix(int q, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const Eigen::Index d = Eigen::Index{1} << q;
  Eigen::MatrixXcd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = cplx(n(rng), n(rng));
  return m;
}

double max_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

const cplx I{0.0, 1.0};

}  // namespace

TEST(PauliWord, ParseAndPrint) {
  const PauliWord w = PauliWord::parse("XZ");
  EXPECT_EQ(w.qubits(), 2);
  EXPECT_EQ(w.letter(0), PauliLetter::Z);
  EXPECT_EQ(w.letter(1), PauliLetter::X);
  EXPECT_EQ(w.str(), "XZ");
  EXPECT_TRUE(PauliWord(3).is_identity());
  EXPECT_THROW(PauliWord::parse("XQ"), PauliError);
}

TEST(PauliWord, DenseIsKroneckerInTextOrder) {
  Eigen::Matrix2cd x, z;
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  Eigen::MatrixXcd xz(4, 4);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) xz.block(2 * r, 2 * c, 2, 2) = x(r, c) * z;
  EXPECT_LT(max_diff(to_dense(PauliWord::parse("XZ")), xz), 1e-15);
}

TEST(PauliWord, UnitaryAndHermitian) {
  for (const char* s : {"I", "X", "Y", "Z", "XY", "YZX", "ZZYI"}) {
    const Eigen::MatrixXcd m = to_dense(PauliWord::parse(s));
    const auto id = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
    EXPECT_LT(max_diff(m * m.adjoint(), id), 1e-15) << s;
    EXPECT_LT(max_diff(m, m.adjoint()), 1e-15) << s;
  }
}

TEST(PauliWord, ProductPhases) {
  auto [p, w] = multiply_words(PauliWord::parse("X"), PauliWord::parse("Y"));
  EXPECT_EQ(w.str(), "Z");
  EXPECT_EQ(p, I);
  std::tie(p, w) = multiply_words(PauliWord::parse("Y"), PauliWord::parse("X"));
  EXPECT_EQ(p, -I);
  std::tie(p, w) = multiply_words(PauliWord::parse("XI"), PauliWord::parse("XI"));
  EXPECT_TRUE(w.is_identity());
  EXPECT_EQ(p, cplx(1.0));
  const char* letters = "IXYZ";
  for (int a = 0; a < 16; ++a) {
    for (int b = 0; b < 16; ++b) {
      const std::string sa{letters[a / 4], letters[a % 4]};
      const std::string sb{letters[b / 4], letters[b % 4]};
      const PauliWord wa = PauliWord::parse(sa), wb = PauliWord::parse(sb);
      const auto [ph, wc] = multiply_words(wa, wb);
      EXPECT_LT(max_diff(ph * to_dense(wc), to_dense(wa) * to_dense(wb)), 1e-15) << sa << sb;
    }
  }
}

TEST(Decompose, Examples) {
  Eigen::MatrixXcd z(2, 2);
  z << 1, 0, 0, -1;
  const PauliSum sz = decompose(z);
  ASSERT_EQ(sz.size(), 1u);
  EXPECT_EQ(sz.coefficient(PauliWord::parse("Z")), cplx(1.0));

  Eigen::MatrixXcd raise(2, 2);
  raise << 0, 1, 0, 0;
  const PauliSum sr = decompose(raise);
  ASSERT_EQ(sr.size(), 2u);
  EXPECT_LT(std::abs(sr.coefficient(PauliWord::parse("X")) - 0.5), 1e-15);
  EXPECT_LT(std::abs(sr.coefficient(PauliWord::parse("Y")) - 0.5 * I), 1e-15);
}

TEST(Decompose, RejectsBadShapes) {
  EXPECT_THROW(decompose(Eigen::MatrixXcd::Zero(3, 3)), PauliError);
  EXPECT_THROW(decompose(Eigen::MatrixXcd::Zero(2, 4)), PauliError);
}

TEST(Decompose, RoundTripRandom) {
  std::mt19937_64 rng(11);
  for (int q = 1; q <= 4; ++q) {
    for (int t = 0; t < 200; ++t) {
      const Eigen::MatrixXcd m = random_matrix(q, rng);
      const PauliSum s = decompose(m);
      EXPECT_LT(max_diff(to_dense(s), m), 1e-12);
      EXPECT_LT(std::abs(s.coefficient(PauliWord(q)) - m.trace() / static_cast<double>(1 << q)), 1e-12);
      const PauliSum back = decompose(to_dense(s));
      for (const auto& [w, c] : s.terms()) EXPECT_LT(std::abs(back.coefficient(w) - c), 1e-12);
    }
  }
}

TEST(Decompose, BenchmarkHamiltonians) {
  const Grid g(10.0, 4096);
  const ChannelModel ch = build_channel(PotentialModel{}, g, Parity::even, 2);
  const PauliSum hh = decompose(ch.pair.hermitian);
  EXPECT_TRUE(hh.is_hermitian());
  for (const auto& [w, c] : hh.terms()) EXPECT_LT(std::abs(c.imag()), 1e-12);
  const PauliSum cap = decompose(ch.pair.cap.cast<cplx>());
  const PauliSum hn = decompose(ch.pair.nonhermitian());
  const PauliSum split = hh + I * cap;
  for (const auto& [w, c] : hn.terms()) EXPECT_LT(std::abs(split.coefficient(w) - c), 1e-12);
  for (const auto& [w, c] : split.terms()) EXPECT_LT(std::abs(hn.coefficient(w) - c), 1e-12);
}

TEST(Multiply, MatchesDenseProducts) {
  std::mt19937_64 rng(5);
  for (int q = 1; q <= 4; ++q) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::MatrixXcd a = random_matrix(q, rng), b = random_matrix(q, rng);
      const PauliSum ab = multiply(decompose(a), decompose(b));
      EXPECT_LT(max_diff(to_dense(ab), a * b), 1e-12);
    }
  }
  EXPECT_THROW(multiply(PauliSum(1), PauliSum(2)), PauliError);
}

TEST(Multiply, SingleQubitAlgebra) {
  PauliSum x(1), y(1);
  x.add(PauliWord::parse("X"), 1.0);
  y.add(PauliWord::parse("Y"), 1.0);
  const PauliSum xy = multiply(x, y);
  ASSERT_EQ(xy.size(), 1u);
  EXPECT_EQ(xy.coefficient(PauliWord::parse("Z")), I);

  PauliSum xi(2);
  xi.add(PauliWord::parse("XI"), 1.0);
  const PauliSum sq = multiply(xi, xi);
  ASSERT_EQ(sq.size(), 1u);
  EXPECT_EQ(sq.coefficient(PauliWord(2)), cplx(1.0));
}

TEST(Multiply, GramProductIsHermitian) {
  std::mt19937_64 rng(8);
  const PauliSum h = decompose(random_matrix(3, rng));
  EXPECT_FALSE(h.is_hermitian());
  EXPECT_TRUE(multiply(adjoint(h), h).is_hermitian());
}

TEST(Adjoint, ConjugatesCoefficients) {
  PauliSum s(1);
  s.add(PauliWord::parse("Z"), cplx(1, 2));
  EXPECT_EQ(adjoint(s).coefficient(PauliWord::parse("Z")), cplx(1, -2));

  std::mt19937_64 rng(9);
  for (int q = 1; q <= 3; ++q) {
    const Eigen::MatrixXcd m = random_matrix(q, rng);
    EXPECT_LT(max_diff(to_dense(adjoint(decompose(m))), m.adjoint()), 1e-12);
    const Eigen::MatrixXcd herm = m + m.adjoint();
    const PauliSum hs = decompose(herm);
    const PauliSum ha = adjoint(hs);
    for (const auto& [w, c] : hs.terms()) EXPECT_LT(std::abs(ha.coefficient(w) - c), 1e-12);
  }
}

TEST(PauliSum, PruneDropsTinyTerms) {
  PauliSum s(2);
  s.add(PauliWord::parse("XX"), 1e-15);
  s.add(PauliWord::parse("ZZ"), 1.0);
  s.prune();
  EXPECT_EQ(s.size(), 1u);
  s.add(PauliWord::parse("ZZ"), -1.0);
  s.prune();
  EXPECT_TRUE(s.empty());
}

TEST(PauliSum, TextRoundTrip) {
  std::mt19937_64 rng(4);
  const PauliSum s = decompose(random_matrix(2, rng));
  std::stringstream ss;
  write_text(ss, s);
  const PauliSum back = read_text(ss);
  ASSERT_EQ(back.size(), s.size());
  for (const auto& [w, c] : s.terms()) EXPECT_LT(std::abs(back.coefficient(w) - c), 1e-15);

  std::stringstream one("0.5 0.0 XZ\n");
  const PauliSum parsed = read_text(one);
  EXPECT_EQ(parsed.coefficient(PauliWord::parse("XZ")), cplx(0.5));
}
