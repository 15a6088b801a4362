#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "gellmann.hpp"

namespace wigvol {

using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr int kMaxDim = 16;

namespace linalg {

inline double hermiticity_defect(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace linalg

class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(const ComplexMatrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "operator must be square");
    if (m.rows() < 1 || m.rows() > kMaxDim)
      throw Error(ErrorKind::BadDim, "operator dimension must be in [1,16]");
    if (linalg::hermiticity_defect(m) > tol)
      throw Error(ErrorKind::NonHermitianInput, "operator is not Hermitian");
    m_ = 0.5 * (m + m.adjoint());
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  cplx operator()(int j, int k) const { return m_(j, k); }

 private:
  ComplexMatrix m_;
};

struct EigenSystem {
  RealVector values;     // ascending
  ComplexMatrix vectors;  // columns
};

namespace linalg {

// eigen-decomposition of a 2x2 Hermitian matrix h0 I + h.sigma
inline EigenSystem eigh2(const ComplexMatrix& m) {
  const double a = m(0, 0).real(), d = m(1, 1).real();
  const cplx b = m(0, 1);
  const double h0 = 0.5 * (a + d), hz = 0.5 * (a - d);
  const double r = std::sqrt(hz * hz + std::norm(b));
  EigenSystem es;
  es.values.resize(2);
  es.values << h0 - r, h0 + r;
  es.vectors.resize(2, 2);
  if (r == 0.0) {
    es.vectors.setIdentity();
    return es;
  }
  // upper eigenvector of hz sz + Re b sx - Im b sy
  if (hz >= 0) {
    const double n = std::sqrt(2.0 * r * (r + hz));
    es.vectors(0, 1) = (r + hz) / n;
    es.vectors(1, 1) = std::conj(b) / n;
    es.vectors(0, 0) = -b / n;
    es.vectors(1, 0) = (r + hz) / n;
  } else {
    const double n = std::sqrt(2.0 * r * (r - hz));
    es.vectors(0, 1) = b / n;
    es.vectors(1, 1) = (r - hz) / n;
    es.vectors(0, 0) = (r - hz) / n;
    es.vectors(1, 0) = -std::conj(b) / n;
  }
  return es;
}

// connected components of the nonzero pattern
inline std::vector<std::vector<int>> block_structure(const ComplexMatrix& m) {
  const int d = static_cast<int>(m.rows());
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k)
      if (m(j, k) != cplx(0.0)) parent[find(j)] = find(k);
  std::vector<std::vector<int>> blocks;
  std::vector<int> label(d, -1);
  for (int j = 0; j < d; ++j) {
    int r = find(j);
    if (label[r] < 0) {
      label[r] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[label[r]].push_back(j);
  }
  return blocks;
}

inline EigenSystem eigh_dense(const ComplexMatrix& m) {
  if (m.rows() == 1) {
    EigenSystem es;
    es.values = RealVector::Constant(1, m(0, 0).real());
    es.vectors = ComplexMatrix::Identity(1, 1);
    return es;
  }
  if (m.rows() == 2) return eigh2(m);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Hermitian eigendecomposition; block-diagonal inputs are split first
inline EigenSystem eigh(const ComplexMatrix& m) {
  const int d = static_cast<int>(m.rows());
  if (d <= 2) return eigh_dense(m);
  auto blocks = block_structure(m);
  if (blocks.size() == 1) return eigh_dense(m);

  std::vector<double> vals;
  std::vector<Eigen::VectorXcd> vecs;
  for (const auto& b : blocks) {
    const int s = static_cast<int>(b.size());
    ComplexMatrix sub(s, s);
    for (int j = 0; j < s; ++j)
      for (int k = 0; k < s; ++k) sub(j, k) = m(b[j], b[k]);
    EigenSystem es = eigh_dense(sub);
    for (int c = 0; c < s; ++c) {
      vals.push_back(es.values(c));
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
      for (int j = 0; j < s; ++j) v(b[j]) = es.vectors(j, c);
      vecs.push_back(v);
    }
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return vals[x] < vals[y]; });
  EigenSystem es;
  es.values.resize(d);
  es.vectors.resize(d, d);
  for (int c = 0; c < d; ++c) {
    es.values(c) = vals[order[c]];
    es.vectors.col(c) = vecs[order[c]];
  }
  return es;
}

inline EigenSystem eigh(const HermitianOperator& h) { return eigh(h.matrix()); }

inline double min_eigenvalue(const ComplexMatrix& m) { return eigh(m).values(0); }

inline double max_abs_offdiag(const ComplexMatrix& m) {
  double best = 0;
  for (int j = 0; j < m.rows(); ++j)
    for (int k = 0; k < m.cols(); ++k)
      if (j != k) best = std::max(best, std::abs(m(j, k)));
  return best;
}

}  // namespace linalg

// e^{itH} by eigendecomposition
inline ComplexMatrix expm_i(const HermitianOperator& h, double t) {
  const EigenSystem es = linalg::eigh(h.matrix());
  const int d = h.dim();
  Eigen::VectorXcd ph(d);
  for (int j = 0; j < d; ++j) ph(j) = std::polar(1.0, t * es.values(j));
  return es.vectors * ph.asDiagonal() * es.vectors.adjoint();
}

inline ComplexMatrix expm_i(const ComplexMatrix& m, double t) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "operator must be square");
  if (linalg::hermiticity_defect(m) > 1e-9)
    throw Error(ErrorKind::NonHermitianInput, "expm_i needs a Hermitian argument");
  return expm_i(HermitianOperator(m, 1e-9), t);
}

class QuantumState {
 public:
  QuantumState() = default;
  explicit QuantumState(const ComplexMatrix& rho, std::optional<RealVector> bloch = std::nullopt)
      : rho_(validate(rho)), bloch_(std::move(bloch)) {}

  static QuantumState maximally_mixed(int d) {
    return QuantumState(ComplexMatrix::Identity(d, d) / double(d), RealVector::Zero(d * d - 1));
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const ComplexMatrix& matrix() const { return rho_; }
  const std::optional<RealVector>& bloch() const { return bloch_; }

 private:
  static ComplexMatrix validate(const ComplexMatrix& rho) {
    if (rho.rows() != rho.cols()) throw Error(ErrorKind::DimensionMismatch, "state must be square");
    if (rho.rows() < 1 || rho.rows() > kMaxDim)
      throw Error(ErrorKind::BadDim, "state dimension must be in [1,16]");
    if (linalg::hermiticity_defect(rho) > 1e-12)
      throw Error(ErrorKind::NotAState, "density matrix is not Hermitian");
    if (std::abs(rho.trace() - 1.0) > 1e-12) throw Error(ErrorKind::NotAState, "trace differs from 1");
    ComplexMatrix h = 0.5 * (rho + rho.adjoint());
    if (linalg::min_eigenvalue(h) < -1e-10)
      throw Error(ErrorKind::NotAState, "density matrix has a negative eigenvalue");
    return h;
  }

  ComplexMatrix rho_;
  std::optional<RealVector> bloch_;
};

// (1/d)(I + sum_k r_k L_k)
inline QuantumState bloch_to_state(const RealVector& r, int d) {
  const auto& basis = detail::gellmann_basis(d);
  if (r.size() > static_cast<Eigen::Index>(basis.size()))
    throw Error(ErrorKind::DimensionMismatch, "Bloch vector longer than d^2-1");
  ComplexMatrix m = ComplexMatrix::Identity(d, d);
  for (int k = 0; k < r.size(); ++k) m += r(k) * basis[k];
  m /= double(d);
  ComplexMatrix h = 0.5 * (m + m.adjoint());
  if (linalg::min_eigenvalue(h) < -1e-10)
    throw Error(ErrorKind::NotAState, "Bloch vector outside the state space");
  RealVector full = RealVector::Zero(d * d - 1);
  full.head(r.size()) = r;
  // trace is exactly 1 by construction
  h.diagonal() += Eigen::VectorXcd::Constant(d, (1.0 - h.trace()) / double(d));
  return QuantumState(h, full);
}

// r_k = (d/2) tr[rho L_k]
inline RealVector state_to_bloch(const QuantumState& rho) {
  const int d = rho.dim();
  const auto& basis = detail::gellmann_basis(d);
  RealVector r(d * d - 1);
  for (int k = 0; k < d * d - 1; ++k) r(k) = 0.5 * d * (rho.matrix() * basis[k]).trace().real();
  return r;
}

inline double expectation(const QuantumState& rho, const HermitianOperator& a) {
  if (rho.dim() != a.dim()) throw Error(ErrorKind::DimensionMismatch, "state and operator dims differ");
  return (rho.matrix() * a.matrix()).trace().real();
}

}  // namespace wigvol
