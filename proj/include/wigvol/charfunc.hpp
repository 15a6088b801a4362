#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "linalg.hpp"
#include "operators.hpp"

namespace wigvol {

// Spectral data of xi.A for a direction: eigenvalues and the diagonal of U^dag w U.
struct Spectrum {
  RealVector mu;
  RealVector weight;
};

// Evaluates tr[w e^{i xi.A}] for a fixed operator list and Hermitian weight w.
class CharEvaluator {
 public:
  CharEvaluator(std::vector<ComplexMatrix> ops, ComplexMatrix weight)
      : ops_(std::move(ops)), weight_(std::move(weight)) {
    d_ = static_cast<int>(weight_.rows());
    for (const auto& o : ops_)
      if (o.rows() != d_) throw Error(ErrorKind::DimensionMismatch, "weight and operators differ in dimension");
    if (d_ == 2) {
      // A_k = a0_k I + a_k.sigma, w = w0 I + w.sigma (w0, w complex in general)
      const auto& b = detail::gellmann_basis(2);
      for (const auto& o : ops_) {
        Eigen::Vector4d v;
        v(0) = 0.5 * o.trace().real();
        for (int i = 0; i < 3; ++i) v(i + 1) = 0.5 * (o * b[i]).trace().real();
        pauli_ops_.push_back(v);
      }
      w0_ = 0.5 * weight_.trace();
      for (int i = 0; i < 3; ++i) wv_[i] = 0.5 * (weight_ * b[i]).trace();
    }
  }

  CharEvaluator(const OperatorSet& set, const ComplexMatrix& weight) : CharEvaluator(matrices(set), weight) {}

  static std::vector<ComplexMatrix> matrices(const OperatorSet& set) {
    std::vector<ComplexMatrix> out;
    for (const auto& o : set.ops()) out.push_back(o.matrix());
    return out;
  }

  int n() const { return static_cast<int>(ops_.size()); }
  int dim() const { return d_; }

  ComplexMatrix combination(const double* xi) const {
    ComplexMatrix h = ComplexMatrix::Zero(d_, d_);
    for (int k = 0; k < n(); ++k) h += xi[k] * ops_[k];
    return h;
  }

  cplx operator()(const double* xi) const {
    if (d_ == 2) {
      double h0 = 0, h[3] = {0, 0, 0};
      for (int k = 0; k < n(); ++k) {
        const auto& v = pauli_ops_[k];
        h0 += xi[k] * v(0);
        for (int i = 0; i < 3; ++i) h[i] += xi[k] * v(i + 1);
      }
      const double r = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
      // tr[w e^{i(h0 + h.sigma)}] = e^{ih0} 2 (w0 cos r + i sin r/r w.h)
      const double sinc = r > 1e-8 ? std::sin(r) / r : 1.0 - r * r / 6.0;
      const cplx wh = wv_[0] * h[0] + wv_[1] * h[1] + wv_[2] * h[2];
      return std::polar(2.0, h0) * (w0_ * std::cos(r) + cplx(0.0, 1.0) * sinc * wh);
    }
    const Spectrum s = spectrum(xi);
    cplx acc = 0;
    for (int j = 0; j < d_; ++j) acc += std::polar(s.weight(j), s.mu(j));
    return acc;
  }

  Spectrum spectrum(const double* xi) const {
    const EigenSystem es = linalg::eigh(combination(xi));
    Spectrum s;
    s.mu = es.values;
    s.weight.resize(d_);
    for (int j = 0; j < d_; ++j)
      s.weight(j) = (es.vectors.col(j).adjoint() * weight_ * es.vectors.col(j))(0, 0).real();
    return s;
  }

  const std::vector<ComplexMatrix>& ops() const { return ops_; }
  const ComplexMatrix& weight() const { return weight_; }

 private:
  std::vector<ComplexMatrix> ops_;
  ComplexMatrix weight_;
  int d_ = 0;
  std::vector<Eigen::Vector4d> pauli_ops_;
  cplx w0_ = 0;
  cplx wv_[3] = {0, 0, 0};
};

namespace detail {

inline void check_xi(const OperatorSet& set, const RealVector& xi) {
  if (xi.size() != set.n()) throw Error(ErrorKind::DimensionMismatch, "xi length differs from n");
}

}  // namespace detail

inline cplx char_fn(const QuantumState& rho, const OperatorSet& set, const RealVector& xi) {
  detail::check_xi(set, xi);
  if (rho.dim() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "state and operators differ in dimension");
  ComplexMatrix h = ComplexMatrix::Zero(set.dim(), set.dim());
  for (int k = 0; k < set.n(); ++k) h += xi(k) * set.op(k).matrix();
  return (rho.matrix() * expm_i(HermitianOperator(h, 1e-9), 1.0)).trace();
}

// tr[e^{i xi.A}], no 1/d
inline cplx char_fn_identity(const OperatorSet& set, const RealVector& xi) {
  detail::check_xi(set, xi);
  ComplexMatrix h = ComplexMatrix::Zero(set.dim(), set.dim());
  for (int k = 0; k < set.n(); ++k) h += xi(k) * set.op(k).matrix();
  return expm_i(HermitianOperator(h, 1e-9), 1.0).trace();
}

// (i tr[A_k e^{i xi.A}])_k
inline Eigen::VectorXcd char_fn_identity_grad(const OperatorSet& set, const RealVector& xi) {
  detail::check_xi(set, xi);
  ComplexMatrix h = ComplexMatrix::Zero(set.dim(), set.dim());
  for (int k = 0; k < set.n(); ++k) h += xi(k) * set.op(k).matrix();
  const ComplexMatrix e = expm_i(HermitianOperator(h, 1e-9), 1.0);
  Eigen::VectorXcd g(set.n());
  for (int k = 0; k < set.n(); ++k) g(k) = cplx(0.0, 1.0) * (set.op(k).matrix() * e).trace();
  return g;
}

// rho = w0 I + sum_k w_k A_k, least squares over Hermitian matrices
struct SpanDecomposition {
  double w0 = 0;
  RealVector w;
  double residual = 0;
};

inline SpanDecomposition span_decomposition(const ComplexMatrix& rho, const OperatorSet& set) {
  const int d = set.dim(), n = set.n();
  Eigen::MatrixXd B(2 * d * d, n + 1);
  Eigen::VectorXd y(2 * d * d);
  auto flatten = [d](const ComplexMatrix& m, Eigen::Ref<Eigen::VectorXd> out) {
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        out(2 * (j * d + k)) = m(j, k).real();
        out(2 * (j * d + k) + 1) = m(j, k).imag();
      }
  };
  flatten(ComplexMatrix::Identity(d, d), B.col(0));
  for (int k = 0; k < n; ++k) flatten(set.op(k).matrix(), B.col(k + 1));
  flatten(rho, y);
  Eigen::VectorXd x = B.completeOrthogonalDecomposition().solve(y);
  SpanDecomposition out;
  out.w0 = x(0);
  out.w = x.tail(n);
  out.residual = (B * x - y).cwiseAbs().maxCoeff();
  return out;
}

// c(a) with W_rho(a) = c(a) W_I(a)
inline double factorization_coefficient(const QuantumState& rho, const OperatorSet& set, const RealVector& a) {
  if (set.family() == Family::CUSTOM || !set.affine())
    throw Error(ErrorKind::NoAffineMap, "operator set has no affine reparametrization");
  if (a.size() != set.n()) throw Error(ErrorKind::DimensionMismatch, "point length differs from n");
  if (rho.dim() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "state and operators differ in dimension");
  const AffineMap& am = *set.affine();
  const RealVector r = state_to_bloch(rho);
  std::vector<bool> spanned(r.size(), false);
  for (int ax : am.bloch_axis) spanned[ax] = true;
  for (int k = 0; k < r.size(); ++k)
    if (!spanned[k] && std::abs(r(k)) > 1e-10)
      throw Error(ErrorKind::UnsupportedState, "state has Bloch components outside the operator span");
  const RealVector ap = am.apply(a);
  double dot = 0;
  int j = 0;
  for (int i = 0; i < ap.size(); ++i) {
    if (am.is_kernel(i)) continue;
    dot += am.bloch_sign[j] * r(am.bloch_axis[j]) * ap(i);
    ++j;
  }
  return (1.0 + dot) / double(set.dim());
}

}  // namespace wigvol
