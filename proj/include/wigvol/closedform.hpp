#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "charfunc.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "operators.hpp"
#include "regularizer.hpp"
#include "special.hpp"

namespace wigvol {

namespace closedform_detail {

// multiplies every closed-form output; only the verify harness touches it
inline double& fault_scale() {
  static double s = 1.0;
  return s;
}

}  // namespace closedform_detail

struct ClosedFormCase {
  OperatorSet set;
  int m = 0;        // number of distinct Bloch directions (eta dimension)
  int N = 2;        // Hilbert-space dimension
  bool exponential = false;  // eta part of the bound kernel is |.|, else |.|^2
  bool symmetric = false;    // equal-noise Pauli with the unscaled kernel
  std::string expression;

  Family family() const { return set.family(); }
  const FamilyParams& params() const { return set.params(); }
  int n() const { return set.n(); }
};

inline ClosedFormCase case_for(const OperatorSet& set) {
  if (set.family() == Family::CUSTOM) throw Error(ErrorKind::UnknownCase, "no closed form for CUSTOM operator sets");
  ClosedFormCase c{set};
  c.N = set.dim();
  if (!set.affine()) {
    // fully noisy projectors: every operator is I/2
    c.m = 0;
    c.expression = "trivial";
    return c;
  }
  const AffineMap& am = *set.affine();
  c.m = static_cast<int>(am.M.rows() - am.kernel.size());
  c.exponential = c.m == 2;
  c.symmetric = set.family() == Family::NOISY_PAULI_SYMM;
  switch (set.family()) {
    case Family::MUB_PAULI: c.expression = c.m == 2 ? "mub2" : "mub3"; break;
    case Family::NOISY_PROJ: c.expression = "proj" + std::to_string(c.m); break;
    case Family::NOISY_PROJ_MIXED: c.expression = "proj_mixed" + std::to_string(set.n()); break;
    case Family::NOISY_PAULI: c.expression = "noisy_pauli" + std::to_string(c.m); break;
    case Family::NOISY_PAULI_SYMM: c.expression = "symm" + std::to_string(c.m); break;
    case Family::ARB_QUBIT_TRIPLE: c.expression = "triple"; break;
    case Family::ARB_QUBIT_PAIR: c.expression = "pair"; break;
    case Family::GELLMANN: c.expression = "gellmann" + std::to_string(c.m); break;
    case Family::NOISY_GELLMANN: c.expression = "noisy_gellmann" + std::to_string(c.m); break;
    case Family::CUSTOM: break;
  }
  return c;
}

namespace closedform_detail {

// rows of M^{-T}: eta = L_eta xi, kappa = L_kappa xi
inline void kernel_rows(const AffineMap& am, Eigen::MatrixXd& eta, Eigen::MatrixXd& kappa) {
  const Eigen::MatrixXd L = am.M.transpose().inverse();
  const int n = static_cast<int>(L.rows());
  const int nk = static_cast<int>(am.kernel.size());
  eta.resize(n - nk, n);
  kappa.resize(nk, n);
  int ie = 0, ik = 0;
  for (int i = 0; i < n; ++i) {
    if (am.is_kernel(i))
      kappa.row(ik++) = L.row(i);
    else
      eta.row(ie++) = L.row(i);
  }
}

inline double jacobian(const OperatorSet& set) { return std::abs(set.affine()->M.determinant()); }

}  // namespace closedform_detail

// the kernel each closed form is derived with
inline Regularizer family_regularizer(const OperatorSet& set, double eps) {
  const int n = set.n();
  const ClosedFormCase c = case_for(set);
  if (c.m == 0) return Regularizer::gauss_iso(n, eps);
  if (c.symmetric) return c.m == 2 ? Regularizer::exp_iso(n, eps) : Regularizer::gauss_iso(n, eps);
  Eigen::MatrixXd eta, kappa;
  closedform_detail::kernel_rows(*set.affine(), eta, kappa);
  const bool diag = kappa.rows() == 0 && eta.isDiagonal(1e-15);
  const bool iso = diag && (eta - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-15;
  Eigen::VectorXd scale = diag ? Eigen::VectorXd(eta.diagonal().cwiseAbs()) : Eigen::VectorXd();
  switch (set.family()) {
    case Family::ARB_QUBIT_TRIPLE: return Regularizer::eta_gauss(eta, eps);
    case Family::ARB_QUBIT_PAIR: return Regularizer::eta_exp(eta, eps);
    case Family::NOISY_PROJ_MIXED: {
      if (c.exponential) return Regularizer::mixed(eta, kappa, eps);
      Eigen::MatrixXd all(n, n);
      all << eta, kappa;
      return Regularizer(KernelKind::MIXED, eps, Eigen::MatrixXd(0, n), all);
    }
    default: break;
  }
  if (c.exponential) return iso ? Regularizer::exp_iso(n, eps) : Regularizer::exp_scaled(scale, eps);
  return iso ? Regularizer::gauss_iso(n, eps) : Regularizer::gauss_scaled(scale, eps);
}

// the unscaled kernel of the same shape: the denominator of the normalization factor
inline Regularizer reference_regularizer(const OperatorSet& set, double eps) {
  const int n = set.n();
  const ClosedFormCase c = case_for(set);
  if (c.m == 0) return Regularizer::gauss_iso(n, eps);
  const int nk = static_cast<int>(set.affine()->kernel.size());
  if (nk == 0) return c.exponential ? Regularizer::exp_iso(n, eps) : Regularizer::gauss_iso(n, eps);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  if (c.exponential) return Regularizer::mixed(I.topRows(n - nk), I.bottomRows(nk), eps);
  return Regularizer(KernelKind::MIXED, eps, Eigen::MatrixXd(0, n), I);
}

// W_I in the canonical coordinates b (eta part) of an m-direction set
inline double canonical_identity_wigner(int m, int N, double r, double eps) {
  using special::delta_gauss;
  using special::delta_gauss_prime;
  const double pi = special::kPi;
  if (m == 1) return delta_gauss(r - 1.0, eps) + delta_gauss(r + 1.0, eps) + (N - 2) * delta_gauss(r, eps);
  if (m == 2) {
    double w = 0;
    if (N > 2) w += (N - 2) * eps / (2.0 * pi * std::pow(eps * eps + r * r, 1.5));
    if (std::abs(1.0 - r) < 1e-12) throw Error(ErrorKind::SingularPoint, "closed form is singular at |a'| = 1");
    if (r < 1.0) w += -1.0 / (pi * std::pow(1.0 - r * r, 1.5));
    return w;
  }
  // m == 3: the r -> 0 limit of g'(r -+ 1)/r terms is finite
  double w;
  if (r < 1e-8) {
    const double g1 = delta_gauss(1.0, eps);
    // -(g'(r-1) + g'(r+1))/(2 pi r) -> 2 g(1) (1/(2 eps) - 1/(4 eps^2)) / (2 pi)
    w = 2.0 * g1 * (1.0 / (2.0 * eps) - 1.0 / (4.0 * eps * eps)) / (2.0 * pi);
    if (N > 2) w += (N - 2) * delta_gauss(0.0, eps) / (4.0 * pi * eps);
    return w;
  }
  w = -(delta_gauss_prime(r - 1.0, eps) + delta_gauss_prime(r + 1.0, eps)) / (2.0 * pi * r);
  if (N > 2) w += (N - 2) * delta_gauss(r, eps) / (4.0 * pi * eps);
  return w;
}

inline double wigner_closed(const ClosedFormCase& c, const QuantumState& rho, const RealVector& a, double eps) {
  if (!(eps > 0)) throw Error(ErrorKind::ConfigError, "epsilon must be positive");
  const OperatorSet& set = c.set;
  if (a.size() != set.n()) throw Error(ErrorKind::DimensionMismatch, "point length differs from n");
  if (rho.dim() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "state and operators differ in dimension");
  const double fs = closedform_detail::fault_scale();
  if (c.m == 0) {
    // all operators equal I/2: W = prod_k delta(a_k - 1/2)
    double w = 1;
    for (int k = 0; k < a.size(); ++k) w *= special::delta_gauss(a(k) - 0.5, eps);
    return fs * w;
  }
  const AffineMap& am = *set.affine();
  if (c.symmetric) {
    const double R0 = 1.0 - set.params().lambda;
    if (R0 < 1e-12) throw Error(ErrorKind::SingularPoint, "equal-noise closed form degenerates at lambda = 1");
    const RealVector r = state_to_bloch(rho);
    const RealVector a2 = set.shifted()->apply(a);
    double ra = 0;
    for (int k = 0; k < a2.size(); ++k) ra += r(k) * a2(k);
    const double s = a2.norm();
    if (c.m == 2) {
      if (std::abs(R0 - s) < 1e-12) throw Error(ErrorKind::SingularPoint, "closed form is singular at |a''| = 1 - lambda");
      if (s >= R0) return 0.0;
      return fs * -(R0 + ra) / (2.0 * special::kPi * std::pow(R0 * R0 - s * s, 1.5));
    }
    const double cf = 0.5 * (1.0 + ra / R0);
    double wi;
    if (s < 1e-8) {
      const double g = special::delta_gauss(R0, eps);
      wi = 2.0 * g * (1.0 / (2.0 * eps) - R0 * R0 / (4.0 * eps * eps)) / (2.0 * special::kPi);
    } else {
      wi = -(special::delta_gauss_prime(s - R0, eps) + special::delta_gauss_prime(s + R0, eps)) / (2.0 * special::kPi * s);
    }
    return fs * cf * wi;
  }
  const double coef = factorization_coefficient(rho, set, a);
  const RealVector ap = am.apply(a);
  double kern = 1;
  for (int i = 0; i < ap.size(); ++i)
    if (am.is_kernel(i)) kern *= special::delta_gauss(ap(i), eps);
  const double r = am.bloch_coords(ap).norm();
  return fs * coef * closedform_detail::jacobian(set) * kern * canonical_identity_wigner(c.m, c.N, r, eps);
}

// n=3 projector Erfc law: ((lambda-1)^3/16)(-1 + 1/sqrt(pi eps) + Erfc(1/(2 sqrt eps)))
inline double projector_negativity_erfc(double lambda, double eps) {
  const double l1 = lambda - 1.0;
  return l1 * l1 * l1 / 16.0 * (-1.0 + 1.0 / std::sqrt(special::kPi * eps) + std::erfc(1.0 / (2.0 * std::sqrt(eps))));
}

// equal-noise Pauli Erfc law: 1/2(-1 + (lambda-1)/sqrt(pi eps) + Erfc((lambda-1)/(2 sqrt eps)))
inline double symmetric_negativity_erfc(double lambda, double eps) {
  const double l1 = lambda - 1.0;
  return 0.5 * (-1.0 + l1 / std::sqrt(special::kPi * eps) + std::erfc(l1 / (2.0 * std::sqrt(eps))));
}

inline double default_mask(double eps) { return 3.0 * std::sqrt(eps); }

// masked n=2 integral of (1/2pi)(1-|a|^2)^{-3/2} over |a| < u
inline double disk_negativity(double u) {
  if (u <= 0) return 0.0;
  return 1.0 / std::sqrt(1.0 - u * u) - 1.0;
}

// magnitude of the MUB negative volume; n=2 values use the singular mask (1-|a|) > mask
inline double mub_reference(int n, int N, double eps, KernelKind reference = KernelKind::GAUSS_ISO, double mask = -1) {
  if (N < 2 || N > kMaxDim) throw Error(ErrorKind::BadDim, "dimension must be in [2,16]");
  if (!(eps > 0)) throw Error(ErrorKind::ConfigError, "epsilon must be positive");
  const double q = 2.0 / N;
  if (n == 3) {
    if (reference != KernelKind::GAUSS_ISO) throw Error(ErrorKind::UnknownCase, "n=3 baseline is defined for the Gaussian kernel");
    return q * 0.5 * (-1.0 + 1.0 / std::sqrt(special::kPi * eps) + std::erfc(1.0 / (2.0 * std::sqrt(eps))));
  }
  if (n == 2) {
    if (reference != KernelKind::GAUSS_ISO && reference != KernelKind::EXP_ISO)
      throw Error(ErrorKind::UnknownCase, "n=2 baseline is defined for isotropic kernels");
    return q * disk_negativity(1.0 - (mask < 0 ? default_mask(eps) : mask));
  }
  throw Error(ErrorKind::BadIndex, "baseline exists for n in {2,3}");
}

struct ClosedNegativity {
  double ratio = 0;                 // to the qubit MUB baseline, in [0,1]
  std::optional<double> absolute;   // signed normalized negative volume
  double baseline = 0;              // mub_reference used for the ratio
  int baseline_n = 0;
  double mask = 0;                  // singular-mask width, 0 if unmasked
};

inline ClosedNegativity negativity_closed(const ClosedFormCase& c, double eps) {
  if (!(eps > 0)) throw Error(ErrorKind::ConfigError, "epsilon must be positive");
  const double fs = closedform_detail::fault_scale();
  ClosedNegativity out;
  if (c.m <= 1) {
    // a single direction (or none) commutes: no negativity
    out.absolute = 0.0;
    return out;
  }
  out.baseline_n = c.m == 2 ? 2 : 3;
  out.mask = c.m == 2 ? default_mask(eps) : 0.0;
  out.baseline = mub_reference(out.baseline_n, 2, eps, c.m == 2 ? KernelKind::EXP_ISO : KernelKind::GAUSS_ISO);
  if (c.symmetric) {
    const double lambda = c.params().lambda;
    double abs;
    if (c.m == 3) {
      abs = symmetric_negativity_erfc(lambda, eps);
    } else {
      const double R0 = 1.0 - lambda;
      abs = -disk_negativity(1.0 - default_mask(eps) / R0);
    }
    out.absolute = fs * abs;
    out.ratio = fs * std::abs(abs) / out.baseline;
    return out;
  }
  out.ratio = fs * (2.0 / c.N) / closedform_detail::jacobian(c.set);
  out.absolute = -out.ratio * out.baseline;
  return out;
}

// false inside the band (R0-|a'|) <= width around the (1-|a'|^2)^{-3/2} shell
inline bool outside_singular_band(const ClosedFormCase& c, const RealVector& a, double width) {
  if (c.m != 2) return true;
  const double R0 = c.symmetric ? 1.0 - c.params().lambda : 1.0;
  const double r = c.symmetric ? c.set.shifted()->apply(a).norm()
                               : c.set.affine()->bloch_coords(c.set.affine()->apply(a)).norm();
  return (R0 - r) > width;
}

// 1 where the point is kept
inline std::vector<char> singular_mask(const ClosedFormCase& c, const PhaseGrid& grid, double width) {
  std::vector<char> keep(grid.size(), 1);
  if (c.m != 2) return keep;
  for (long i = 0; i < grid.size(); ++i) keep[i] = outside_singular_band(c, grid.point(i), width) ? 1 : 0;
  return keep;
}

inline bool has_singular_shell(const ClosedFormCase& c) { return c.m == 2; }

}  // namespace wigvol
