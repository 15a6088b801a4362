#include <gtest/gtest.h>

#include <cmath>

#include "wigvol/closedform.hpp"

using namespace wigvol;

namespace {

const double kPi = std::acos(-1.0);

RealVector vec(std::initializer_list<double> v) {
  RealVector r(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

// erfc by the Maclaurin series of erf (small x) or a Lentz continued fraction (large x)
double oracle_erfc(double x) {
  if (x < 0) return 2.0 - oracle_erfc(-x);
  if (x < 3.0) {
    long double term = x, sum = x;
    const long double x2 = (long double)x * x;
    for (int n = 1; n < 200; ++n) {
      term *= -x2 / n;
      sum += term / (2 * n + 1);
    }
    return double(1.0L - 2.0L / std::sqrt(acosl(-1.0L)) * sum);
  }
  // erfc x = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
  double f = x, C = x, D = 0;
  for (int n = 1; n < 300; ++n) {
    const double a = n / 2.0;
    D = x + a * D;
    C = x + a / C;
    D = 1.0 / D;
    const double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / std::sqrt(kPi) / f;
}

struct ScaleGuard {
  explicit ScaleGuard(double s) { closedform_detail::fault_scale() = s; }
  ~ScaleGuard() { closedform_detail::fault_scale() = 1.0; }
};

}  // namespace

TEST(OracleErfc, SelfCheck) {
  EXPECT_NEAR(oracle_erfc(0.0), 1.0, 1e-16);
  EXPECT_NEAR(oracle_erfc(0.5), 0.4795001221869535, 1e-15);
  EXPECT_NEAR(oracle_erfc(3.5) / 7.430983723414128e-07, 1.0, 1e-12);
}

TEST(ClosedForm, ErfcFormulasAgainstOracle) {
  for (double l : {0.0, 0.3, 0.5, 0.9})
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const double q = 1.0 / (2.0 * std::sqrt(eps)), p = 1.0 / std::sqrt(kPi * eps);
      EXPECT_NEAR(projector_negativity_erfc(l, eps), std::pow(l - 1, 3) / 16 * (-1 + p + oracle_erfc(q)), 1e-12);
      EXPECT_NEAR(symmetric_negativity_erfc(l, eps), 0.5 * (-1 + (l - 1) * p + oracle_erfc((l - 1) * q)), 1e-12);
    }
}

TEST(ClosedForm, ErfcLimits) {
  EXPECT_EQ(projector_negativity_erfc(1.0, 1e-3), 0.0);
  EXPECT_NEAR(symmetric_negativity_erfc(1.0, 1e-3), 0.0, 1e-16);
  // eps = 1/pi: 1/sqrt(pi eps) cancels the -1
  const double v = projector_negativity_erfc(0.0, 1.0 / kPi);
  EXPECT_NEAR(v, -oracle_erfc(std::sqrt(kPi) / 2) / 16, 1e-14);
  EXPECT_NEAR(v, -0.01315, 5e-5);
}

TEST(ClosedForm, MubOrigin) {
  const ClosedFormCase c = case_for(mub_pauli_set(2));
  for (double eps : {1e-4, 1e-2})
    EXPECT_NEAR(wigner_closed(c, QuantumState::maximally_mixed(2), vec({0, 0}), eps), -1 / (2 * kPi), 1e-14);
}

TEST(ClosedForm, MubInteriorWithState) {
  const ClosedFormCase c = case_for(mub_pauli_set(2));
  const QuantumState rho = bloch_to_state(vec({0.3, -0.2, 0.0}), 2);
  for (const RealVector& a : {vec({0.1, 0.2}), vec({-0.5, 0.4}), vec({0.7, -0.6})}) {
    const double want = -(1 + 0.3 * a(0) - 0.2 * a(1)) / (2 * kPi * std::pow(1 - a.squaredNorm(), 1.5));
    EXPECT_NEAR(wigner_closed(c, rho, a, 1e-3), want, 1e-13);
  }
  EXPECT_EQ(wigner_closed(c, rho, vec({1.1, 0.2}), 1e-3), 0.0);
}

TEST(ClosedForm, ProjectorDerivativeVanishesOnShell) {
  const OperatorSet s = noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, 0.5);
  const ClosedFormCase c = case_for(s);
  const AffineMap& am = *s.affine();
  const RealVector a = am.M.inverse() * (vec({1, 0, 0}) - am.c);
  const double w = wigner_closed(c, QuantumState::maximally_mixed(2), a, 0.01);
  // the -g'(r+1)/r tail remains; it is negligible against the peak scale
  const RealVector b = am.M.inverse() * (vec({0.99, 0, 0}) - am.c);
  EXPECT_LT(std::abs(w), 1e-12 * std::abs(wigner_closed(c, QuantumState::maximally_mixed(2), b, 0.01)) + 1e-20);
}

TEST(ClosedForm, SymmetricSingularGuard) {
  const OperatorSet s = noisy_pauli_set({0.2, 0.2}, true);
  const ClosedFormCase c = case_for(s);
  EXPECT_THROW(wigner_closed(c, QuantumState::maximally_mixed(2), vec({1.0, 0.2}), 1e-3), Error);
  const double at0 = wigner_closed(c, QuantumState::maximally_mixed(2), vec({0.2, 0.2}), 1e-3);
  EXPECT_NEAR(at0, -(0.8) / (2 * kPi * std::pow(0.8, 3)), 1e-13);
}

TEST(ClosedForm, CustomHasNoCase) {
  try {
    case_for(custom_set({pauli(1), pauli(2)}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownCase);
  }
}

TEST(MubReference, QubitTriple) {
  const double eps = 1e-4;
  const double want = 0.5 * (-1 + 1 / std::sqrt(kPi * eps) + oracle_erfc(1 / (2 * std::sqrt(eps))));
  EXPECT_NEAR(mub_reference(3, 2, eps), want, 1e-12);
  EXPECT_NEAR(mub_reference(3, 2, eps), 27.709, 5e-4);
}

TEST(MubReference, DimensionPrefactor) {
  for (double eps : {1e-3, 1e-5}) {
    EXPECT_NEAR(mub_reference(2, 4, eps), 0.5 * mub_reference(2, 2, eps), 1e-15);
    EXPECT_NEAR(mub_reference(3, 6, eps), mub_reference(3, 2, eps) / 3, 1e-13);
  }
}

TEST(MubReference, MaskedDisk) {
  // int_{|a| < u} (1/2pi)(1-|a|^2)^{-3/2} da = 1/sqrt(1-u^2) - 1
  const double u = 1 - default_mask(1e-5);
  EXPECT_NEAR(mub_reference(2, 2, 1e-5), 1 / std::sqrt(1 - u * u) - 1, 1e-12);
}

TEST(MubReference, Guards) {
  EXPECT_THROW(mub_reference(3, 1, 1e-3), Error);
  EXPECT_THROW(mub_reference(3, 17, 1e-3), Error);
  EXPECT_THROW(mub_reference(3, 2, 0.0), Error);
  EXPECT_THROW(mub_reference(4, 2, 1e-3), Error);
  EXPECT_THROW(mub_reference(3, 2, 1e-3, KernelKind::EXP_ISO), Error);
}

TEST(NegativityClosed, RatioLaws) {
  const double eps = 1e-4;
  for (double l : {0.0, 0.25, 0.5, 0.75}) {
    const double q = 1 - l;
    EXPECT_NEAR(negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, 1}}, l)), eps).ratio, q * q / 4, 1e-12);
    EXPECT_NEAR(negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, -1}, {3, 1}}, l)), eps).ratio,
                q * q * q / 8, 1e-12);
    EXPECT_NEAR(negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, l)), eps).ratio,
                q * q * q / 4, 1e-12);
    EXPECT_NEAR(negativity_closed(case_for(noisy_projector_set({{1, 1}, {1, -1}, {2, 1}, {2, -1}}, l)), eps).ratio,
                q * q * q * q / 4, 1e-12);
    EXPECT_NEAR(negativity_closed(case_for(noisy_pauli_set({l, l / 2})), eps).ratio, q * (1 - l / 2), 1e-12);
    EXPECT_NEAR(negativity_closed(case_for(noisy_pauli_set({l, l / 2, l / 3})), eps).ratio,
                q * (1 - l / 2) * (1 - l / 3), 1e-12);
  }
}

TEST(NegativityClosed, GeometricFamilies) {
  EXPECT_NEAR(negativity_closed(case_for(arb_qubit_pair(1.0)), 1e-3).ratio, 1.0, 1e-14);
  EXPECT_NEAR(negativity_closed(case_for(arb_qubit_pair(0.35)), 1e-3).ratio, 0.35, 1e-14);
  const double t1 = 1.0, f1 = 0.3, t2 = 1.2, f2 = 1.5;
  EXPECT_NEAR(negativity_closed(case_for(arb_qubit_triple(t1, f1, t2, f2)), 1e-3).ratio,
              std::abs(std::sin(t1) * std::sin(t2) * std::sin(f1 - f2)), 1e-12);
  EXPECT_NEAR(negativity_closed(case_for(arb_qubit_triple(kPi / 2, 0, kPi / 2, kPi / 2)), 1e-3).ratio, 1.0, 1e-12);
  double prev = 1;
  for (double d : {0.5, 0.1, 0.01, 1e-4}) {
    const double r = negativity_closed(case_for(arb_qubit_triple(kPi / 2, 0, kPi / 2, d)), 1e-3).ratio;
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_LT(prev, 2e-4);
}

TEST(NegativityClosed, QuditScaling) {
  const double r2 = negativity_closed(case_for(gellmann_set(2, 2)), 1e-3).ratio;
  for (int N = 2; N <= 8; ++N) {
    EXPECT_NEAR(negativity_closed(case_for(gellmann_set(N, 2)), 1e-3).ratio, r2 * 2.0 / N, 1e-14);
    EXPECT_NEAR(negativity_closed(case_for(gellmann_set(N, 3)), 1e-3).ratio, 2.0 / N, 1e-14);
  }
}

TEST(NegativityClosed, ProjectorAbsoluteMatchesErfc) {
  for (double l : {0.0, 0.5})
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const ClosedNegativity cn = negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, l)), eps);
      ASSERT_TRUE(cn.absolute);
      EXPECT_NEAR(*cn.absolute / projector_negativity_erfc(l, eps), 1.0, 1e-12);
    }
  const ClosedNegativity cn = negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, 0.0)), 1 / kPi);
  EXPECT_NEAR(*cn.absolute, -0.01315, 5e-5);
}

TEST(NegativityClosed, FullNoiseAndCommuting) {
  const ClosedNegativity full = negativity_closed(case_for(noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, 1.0)), 1e-3);
  EXPECT_EQ(full.ratio, 0.0);
  EXPECT_EQ(*full.absolute, 0.0);
  const ClosedNegativity one = negativity_closed(case_for(noisy_projector_set({{1, 1}}, 0.2)), 1e-3);
  EXPECT_EQ(one.ratio, 0.0);
}

TEST(NegativityClosed, SymmetricUsesErfc) {
  const ClosedNegativity cn = negativity_closed(case_for(noisy_pauli_set({0.5, 0.5, 0.5}, true)), 1e-3);
  EXPECT_NEAR(*cn.absolute, symmetric_negativity_erfc(0.5, 1e-3), 1e-15);
  EXPECT_NEAR(cn.ratio, std::abs(*cn.absolute) / mub_reference(3, 2, 1e-3), 1e-15);
}

TEST(NegativityClosed, FaultScaleIsVisible) {
  const ClosedFormCase c = case_for(arb_qubit_pair(0.5));
  const double base = negativity_closed(c, 1e-3).ratio;
  ScaleGuard g(2.0);
  EXPECT_NEAR(negativity_closed(c, 1e-3).ratio, 2 * base, 1e-15);
}

TEST(SingularMask, BandAroundShell) {
  const ClosedFormCase c = case_for(mub_pauli_set(2));
  EXPECT_TRUE(outside_singular_band(c, vec({0.5, 0.0}), 0.1));
  EXPECT_FALSE(outside_singular_band(c, vec({0.95, 0.0}), 0.1));
  EXPECT_FALSE(outside_singular_band(c, vec({1.2, 0.0}), 0.1));
  EXPECT_TRUE(outside_singular_band(case_for(mub_pauli_set(3)), vec({1.0, 0.0, 0.0}), 0.1));
  EXPECT_TRUE(has_singular_shell(c));
  EXPECT_FALSE(has_singular_shell(case_for(mub_pauli_set(3))));
}
