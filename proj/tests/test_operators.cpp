#include <gtest/gtest.h>

#include <cmath>

#include "wigvol/operators.hpp"

using namespace wigvol;

namespace {

const double kPi = std::acos(-1.0);

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::ConfigError;
}

bool is_identity_map(const AffineMap& am) {
  const int n = static_cast<int>(am.M.rows());
  return (am.M - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-15 && am.c.cwiseAbs().maxCoeff() < 1e-15;
}

}  // namespace

TEST(Pauli, Basics) {
  ComplexMatrix z = ComplexMatrix::Zero(2, 2);
  z(0, 0) = 1;
  z(1, 1) = -1;
  EXPECT_LT(max_diff(pauli(3).matrix(), z), 1e-15);
  EXPECT_LT(max_diff(pauli(1).matrix() * pauli(1).matrix(), ComplexMatrix::Identity(2, 2)), 1e-15);
  EXPECT_NEAR(std::abs((pauli(1).matrix() * pauli(2).matrix()).trace()), 0.0, 1e-15);
  EXPECT_EQ(kind_of([] { pauli(4); }), ErrorKind::BadIndex);
}

TEST(GellMann, ReducesToPauli) {
  for (int k = 1; k <= 3; ++k) EXPECT_LT(max_diff(gellmann(2, k).matrix(), pauli(k).matrix()), 1e-15);
}

TEST(GellMann, FirstGeneratorOfFive) {
  ComplexMatrix want = ComplexMatrix::Zero(5, 5);
  want(0, 1) = want(1, 0) = 1;
  EXPECT_LT(max_diff(gellmann(5, 1).matrix(), want), 1e-15);
}

TEST(GellMann, TracelessAndOrthogonal) {
  for (int N : {3, 4, 6}) {
    for (int j = 1; j <= N * N - 1; ++j) {
      const ComplexMatrix a = gellmann(N, j).matrix();
      EXPECT_NEAR(std::abs(a.trace()), 0.0, 1e-14);
      for (int k = 1; k <= N * N - 1; ++k) {
        const cplx t = (a * gellmann(N, k).matrix()).trace();
        EXPECT_NEAR(std::abs(t - cplx(j == k ? 2.0 : 0.0)), 0.0, 1e-13) << N << ' ' << j << ' ' << k;
      }
    }
  }
  EXPECT_EQ(kind_of([] { gellmann(3, 9); }), ErrorKind::BadIndex);
}

TEST(NoisyProjector, ZeroNoiseGivesProjectors) {
  const OperatorSet s = noisy_projector_set({{1, 1}, {2, 1}}, 0.0);
  EXPECT_EQ(s.family(), Family::NOISY_PROJ);
  for (int k = 0; k < 2; ++k) {
    const ComplexMatrix p = 0.5 * (ComplexMatrix::Identity(2, 2) + pauli(k + 1).matrix());
    EXPECT_LT(max_diff(s.op(k).matrix(), p), 1e-15);
  }
}

TEST(NoisyProjector, FullNoiseGivesHalfIdentity) {
  const OperatorSet s = noisy_projector_set({{1, 1}}, 1.0);
  EXPECT_LT(max_diff(s.op(0).matrix(), 0.5 * ComplexMatrix::Identity(2, 2)), 1e-15);
  EXPECT_FALSE(s.affine().has_value());
}

TEST(NoisyProjector, HalfNoise) {
  const OperatorSet s = noisy_projector_set({{1, 1}, {2, 1}}, 0.5);
  ComplexMatrix want(2, 2);
  want << 0.5, 0.25, 0.25, 0.5;
  EXPECT_LT(max_diff(s.op(0).matrix(), want), 1e-15);
}

TEST(NoisyProjector, MixedSetHasKernelDirection) {
  const OperatorSet s = noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, 0.2);
  EXPECT_EQ(s.family(), Family::NOISY_PROJ_MIXED);
  ASSERT_TRUE(s.affine());
  EXPECT_EQ(s.affine()->kernel.size(), 1u);
  // A_{2+} + A_{2-} = I
  EXPECT_LT(max_diff(s.op(1).matrix() + s.op(2).matrix(), ComplexMatrix::Identity(2, 2)), 1e-15);
}

TEST(NoisyProjector, Guards) {
  EXPECT_EQ(kind_of([] { noisy_projector_set({{1, 1}}, 1.5); }), ErrorKind::BadNoise);
  EXPECT_EQ(kind_of([] { noisy_projector_set({{1, 1}}, -0.1); }), ErrorKind::BadNoise);
  EXPECT_EQ(kind_of([] { noisy_projector_set({{4, 1}}, 0.1); }), ErrorKind::BadIndex);
  EXPECT_EQ(kind_of([] { noisy_projector_set({{1, 1}, {1, 1}}, 0.1); }), ErrorKind::BadIndex);
  EXPECT_EQ(kind_of([] { noisy_projector_set({}, 0.1); }), ErrorKind::BadIndex);
}

TEST(NoisyProjector, AffineMapSendsEigenvaluesToUnitBox) {
  const double l = 0.3;
  const OperatorSet s = noisy_projector_set({{1, 1}, {2, -1}, {3, 1}}, l);
  const auto r = s.eigen_ranges();
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(r[k].first, l / 2, 1e-14);
    EXPECT_NEAR(r[k].second, 1 - l / 2, 1e-14);
  }
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, l / 2), hi = Eigen::VectorXd::Constant(3, 1 - l / 2);
  const Eigen::VectorXd a = s.affine()->apply(lo), b = s.affine()->apply(hi);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(a(k), -1.0, 1e-14);
    EXPECT_NEAR(b(k), 1.0, 1e-14);
  }
}

TEST(NoisyPauli, ZeroNoiseIsMub) {
  const OperatorSet s = noisy_pauli_set({0, 0, 0});
  const OperatorSet m = mub_pauli_set(3);
  for (int k = 0; k < 3; ++k) EXPECT_LT(max_diff(s.op(k).matrix(), m.op(k).matrix()), 1e-15);
  EXPECT_TRUE(is_identity_map(*s.affine()));
  EXPECT_TRUE(is_identity_map(*m.affine()));
}

TEST(NoisyPauli, EqualHalfNoise) {
  const OperatorSet s = noisy_pauli_set({0.5, 0.5, 0.5}, true);
  EXPECT_EQ(s.family(), Family::NOISY_PAULI_SYMM);
  for (int k = 0; k < 3; ++k)
    EXPECT_LT(max_diff(s.op(k).matrix(), 0.5 * pauli(k + 1).matrix() + 0.5 * ComplexMatrix::Identity(2, 2)), 1e-15);
}

TEST(NoisyPauli, AffineCoordinates) {
  const OperatorSet s = noisy_pauli_set({0.2, 0.4});
  Eigen::VectorXd a(2);
  a << 0.9, -0.3;
  const Eigen::VectorXd ap = s.affine()->apply(a);
  EXPECT_NEAR(ap(0), (0.9 - 0.2) / 0.8, 1e-14);
  EXPECT_NEAR(ap(1), (-0.3 - 0.4) / 0.6, 1e-14);
}

TEST(NoisyPauli, Guards) {
  EXPECT_EQ(kind_of([] { noisy_pauli_set({1.0, 0.0}); }), ErrorKind::BadNoise);
  EXPECT_EQ(kind_of([] { noisy_pauli_set({0.1, 0.2}, true); }), ErrorKind::BadNoise);
  EXPECT_EQ(kind_of([] { noisy_pauli_set({0.1}); }), ErrorKind::BadIndex);
}

TEST(QubitTriple, MubAngles) {
  const OperatorSet s = arb_qubit_triple(kPi / 2, 0, kPi / 2, kPi / 2);
  for (int k = 0; k < 3; ++k) EXPECT_LT(max_diff(s.op(k).matrix(), pauli(k + 1).matrix()), 1e-15);
  EXPECT_NEAR(coplanarity_factor(kPi / 2, 0, kPi / 2, kPi / 2), 1.0, 1e-15);
}

TEST(QubitTriple, Coplanar) {
  EXPECT_EQ(kind_of([] { arb_qubit_triple(kPi / 2, 0, kPi / 2, 0); }), ErrorKind::DegenerateTriple);
}

TEST(QubitTriple, CoplanarityFactor) {
  // |gamma_y lambda_x - gamma_x lambda_y| with the two unit vectors
  const double t1 = kPi / 2, f1 = 0, t2 = kPi / 2, f2 = kPi / 4;
  const double lx = std::sin(t1) * std::cos(f1), ly = std::sin(t1) * std::sin(f1);
  const double gx = std::sin(t2) * std::cos(f2), gy = std::sin(t2) * std::sin(f2);
  EXPECT_NEAR(coplanarity_factor(t1, f1, t2, f2), std::abs(gy * lx - gx * ly), 1e-15);
  EXPECT_NEAR(coplanarity_factor(t1, f1, t2, f2), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(std::abs(arb_qubit_triple(t1, f1, t2, f2).affine()->M.determinant()), 1.0 / std::sqrt(0.5), 1e-12);
}

TEST(QubitPair, FullBetaIsMub) {
  const OperatorSet s = arb_qubit_pair(1.0);
  EXPECT_LT(max_diff(s.op(0).matrix(), pauli(1).matrix()), 1e-15);
  EXPECT_LT(max_diff(s.op(1).matrix(), pauli(2).matrix()), 1e-15);
  EXPECT_TRUE(is_identity_map(*s.affine()));
}

TEST(QubitPair, Beta06) {
  const OperatorSet s = arb_qubit_pair(0.6);
  EXPECT_LT(max_diff(s.op(1).matrix(), 0.8 * pauli(1).matrix() + 0.6 * pauli(2).matrix()), 1e-15);
  Eigen::VectorXd a(2);
  a << 0.5, 0.7;
  const Eigen::VectorXd ap = s.affine()->apply(a);
  EXPECT_NEAR(ap(0), 0.5, 1e-14);
  EXPECT_NEAR(ap(1), 0.5, 1e-14);
  EXPECT_EQ(kind_of([] { arb_qubit_pair(0.0); }), ErrorKind::BadBeta);
  EXPECT_EQ(kind_of([] { arb_qubit_pair(1.2); }), ErrorKind::BadBeta);
}

TEST(NoisyGellMann, QubitCaseIsMub) {
  const OperatorSet s = noisy_gellmann_set(2, {0, 0, 0});
  for (int k = 0; k < 3; ++k) EXPECT_LT(max_diff(s.op(k).matrix(), pauli(k + 1).matrix()), 1e-15);
}

TEST(NoisyGellMann, FourLevelNoiseless) {
  const OperatorSet s = noisy_gellmann_set(4, {0, 0});
  EXPECT_LT(max_diff(s.op(0).matrix(), gellmann(4, 1).matrix()), 1e-15);
  EXPECT_LT(max_diff(s.op(1).matrix(), gellmann(4, 2).matrix()), 1e-15);
}

TEST(NoisyGellMann, QutritEntries) {
  const OperatorSet s = noisy_gellmann_set(3, {0.3, 0.3, 0.3});
  const ComplexMatrix& a = s.op(0).matrix();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(a(j, j).real(), 0.3, 1e-15);
  EXPECT_NEAR(a(0, 1).real(), 0.7, 1e-15);
  EXPECT_NEAR(a(1, 0).real(), 0.7, 1e-15);
  EXPECT_NEAR(std::abs(a(0, 2)), 0.0, 1e-15);
  EXPECT_EQ(kind_of([] { noisy_gellmann_set(17, {0, 0}); }), ErrorKind::BadDim);
}

TEST(Families, NamesRoundTrip) {
  for (Family f : {Family::MUB_PAULI, Family::NOISY_PROJ, Family::NOISY_PROJ_MIXED, Family::NOISY_PAULI,
                   Family::NOISY_PAULI_SYMM, Family::ARB_QUBIT_TRIPLE, Family::ARB_QUBIT_PAIR, Family::GELLMANN,
                   Family::NOISY_GELLMANN, Family::CUSTOM})
    EXPECT_EQ(family_from_string(to_string(f)), f);
  EXPECT_EQ(kind_of([] { family_from_string("SQUARE"); }), ErrorKind::ConfigError);
}

TEST(CustomSet, Limits) {
  std::vector<HermitianOperator> ops(7, pauli(1));
  EXPECT_EQ(kind_of([&] { custom_set(ops); }), ErrorKind::BadIndex);
  EXPECT_EQ(kind_of([] { custom_set({pauli(1), gellmann(3, 1)}); }), ErrorKind::DimensionMismatch);
}
