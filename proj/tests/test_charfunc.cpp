#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wigvol/charfunc.hpp"

using namespace wigvol;

namespace {

const double kPi = std::acos(-1.0);

RealVector vec(std::initializer_list<double> v) {
  RealVector r(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

QuantumState qubit(double x, double y, double z) { return bloch_to_state(vec({x, y, z}), 2); }

}  // namespace

TEST(CharFn, OneAtOrigin) {
  const QuantumState rho = qubit(0.3, -0.1, 0.5);
  for (const OperatorSet& s : {mub_pauli_set(3), noisy_projector_set({{1, 1}, {2, -1}}, 0.2), arb_qubit_pair(0.4)})
    EXPECT_NEAR(std::abs(char_fn(rho, s, RealVector::Zero(s.n())) - 1.0), 0.0, 1e-15);
  const OperatorSet g = gellmann_set(4, 3);
  EXPECT_NEAR(std::abs(char_fn(QuantumState::maximally_mixed(4), g, RealVector::Zero(3)) - 1.0), 0.0, 1e-15);
}

TEST(CharFn, MubAtPi) {
  const cplx v = char_fn(QuantumState::maximally_mixed(2), mub_pauli_set(3), vec({kPi, 0, 0}));
  EXPECT_NEAR(v.real(), -1.0, 1e-14);
  EXPECT_NEAR(v.imag(), 0.0, 1e-14);
}

TEST(CharFn, QutritGellMann) {
  const double t = kPi / 2 / std::sqrt(3.0);
  const cplx v = char_fn(QuantumState::maximally_mixed(3), gellmann_set(3, 3), vec({t, t, t}));
  EXPECT_NEAR(v.real(), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(v.imag(), 0.0, 1e-14);
}

TEST(CharFn, IdentityTraceForm) {
  // tr e^{i xi.sigma} = 2 cos|xi|; general Gell-Mann triple: (N-2) + 2 cos|xi|
  const RealVector xi = vec({0.4, -1.1, 0.7});
  EXPECT_NEAR(char_fn_identity(mub_pauli_set(3), xi).real(), 2 * std::cos(xi.norm()), 1e-14);
  for (int N : {3, 5, 7})
    EXPECT_NEAR(char_fn_identity(gellmann_set(N, 3), xi).real(), (N - 2) + 2 * std::cos(xi.norm()), 1e-13) << N;
}

TEST(CharFn, HermitianSymmetry) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-3, 3);
  const QuantumState rho = qubit(0.2, 0.4, -0.3);
  const OperatorSet s = arb_qubit_triple(1.0, 0.3, 1.2, 1.5);
  for (int i = 0; i < 20; ++i) {
    const RealVector xi = vec({u(gen), u(gen), u(gen)});
    const cplx a = char_fn(rho, s, xi), b = char_fn(rho, s, -xi);
    EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-13);
    EXPECT_LE(std::abs(a), 1.0 + 1e-13);
  }
}

TEST(CharFn, DimensionChecks) {
  EXPECT_THROW(char_fn(QuantumState::maximally_mixed(2), mub_pauli_set(3), RealVector::Zero(2)), Error);
  EXPECT_THROW(char_fn(QuantumState::maximally_mixed(3), mub_pauli_set(2), RealVector::Zero(2)), Error);
}

TEST(CharFnGrad, TracelessAtOrigin) {
  const Eigen::VectorXcd g = char_fn_identity_grad(mub_pauli_set(3), RealVector::Zero(3));
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CharFnGrad, SingleSigmaZ) {
  const OperatorSet s = custom_set({pauli(3)});
  for (double t : {0.3, 1.2, -2.5}) {
    const cplx g = char_fn_identity_grad(s, vec({t}))(0);
    EXPECT_NEAR(g.real(), -2 * std::sin(t), 1e-14);
    EXPECT_NEAR(g.imag(), 0.0, 1e-14);
  }
}

TEST(CharFnGrad, NoisyPauliAtOrigin) {
  const Eigen::VectorXcd g = char_fn_identity_grad(noisy_pauli_set({0.5, 0.5, 0.5}), RealVector::Zero(3));
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(g(k).real(), 0.0, 1e-15);
    EXPECT_NEAR(g(k).imag(), 1.0, 1e-15);
  }
}

TEST(CharFnGrad, MatchesFiniteDifferences) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-2, 2);
  const double h = 1e-5;
  for (const OperatorSet& s : {noisy_pauli_set({0.2, 0.3, 0.1}), noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, 0.2),
                               noisy_gellmann_set(4, {0.1, 0.2, 0.3}), arb_qubit_pair(0.5)}) {
    for (int trial = 0; trial < 5; ++trial) {
      RealVector xi(s.n());
      for (int k = 0; k < s.n(); ++k) xi(k) = u(gen);
      const Eigen::VectorXcd g = char_fn_identity_grad(s, xi);
      for (int k = 0; k < s.n(); ++k) {
        RealVector p = xi, m = xi;
        p(k) += h;
        m(k) -= h;
        const cplx fd = (char_fn_identity(s, p) - char_fn_identity(s, m)) / (2 * h);
        EXPECT_LT(std::abs(fd - g(k)), 1e-6);
      }
    }
  }
}

TEST(Factorization, MaximallyMixed) {
  const OperatorSet s = mub_pauli_set(3);
  EXPECT_NEAR(factorization_coefficient(QuantumState::maximally_mixed(2), s, vec({0.3, -0.7, 0.1})), 0.5, 1e-15);
  EXPECT_NEAR(factorization_coefficient(QuantumState::maximally_mixed(3), gellmann_set(3, 3), vec({0.3, 0.1, 0.2})),
              1.0 / 3.0, 1e-15);
}

TEST(Factorization, PureStateAlongX) {
  EXPECT_NEAR(factorization_coefficient(qubit(1, 0, 0), mub_pauli_set(2), vec({1, 0})), 1.0, 1e-15);
}

TEST(Factorization, Guards) {
  EXPECT_THROW(factorization_coefficient(qubit(0, 0, 0.5), mub_pauli_set(2), vec({0, 0})), Error);
  EXPECT_THROW(factorization_coefficient(QuantumState::maximally_mixed(2), custom_set({pauli(1)}), vec({0})), Error);
}

TEST(SpanDecomposition, ReconstructsState) {
  const OperatorSet s = noisy_pauli_set({0.2, 0.4, 0.1});
  const QuantumState rho = qubit(0.3, -0.2, 0.4);
  const SpanDecomposition d = span_decomposition(rho.matrix(), s);
  ComplexMatrix back = d.w0 * ComplexMatrix::Identity(2, 2);
  for (int k = 0; k < 3; ++k) back += d.w(k) * s.op(k).matrix();
  EXPECT_LT((back - rho.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(d.residual, 1e-14);
}
