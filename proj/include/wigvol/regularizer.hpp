#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "special.hpp"

namespace wigvol {

enum class KernelKind { GAUSS_ISO, GAUSS_SCALED, EXP_ISO, EXP_SCALED, ETA_GAUSS, ETA_EXP, MIXED };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::GAUSS_ISO: return "GAUSS_ISO";
    case KernelKind::GAUSS_SCALED: return "GAUSS_SCALED";
    case KernelKind::EXP_ISO: return "EXP_ISO";
    case KernelKind::EXP_SCALED: return "EXP_SCALED";
    case KernelKind::ETA_GAUSS: return "ETA_GAUSS";
    case KernelKind::ETA_EXP: return "ETA_EXP";
    case KernelKind::MIXED: return "MIXED";
  }
  return "MIXED";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  for (KernelKind k : {KernelKind::GAUSS_ISO, KernelKind::GAUSS_SCALED, KernelKind::EXP_ISO, KernelKind::EXP_SCALED,
                       KernelKind::ETA_GAUSS, KernelKind::ETA_EXP, KernelKind::MIXED})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::ConfigError, "unknown kernel kind '" + s + "'");
}

// G(xi) = exp(-eps (|P xi| + |Q xi|^2))
class Regularizer {
 public:
  Regularizer() = default;
  Regularizer(KernelKind kind, double eps, Eigen::MatrixXd P, Eigen::MatrixXd Q)
      : kind_(kind), eps_(eps), P_(std::move(P)), Q_(std::move(Q)) {
    if (!(eps_ > 0) || !std::isfinite(eps_)) throw Error(ErrorKind::ConfigError, "epsilon must be positive");
    n_ = static_cast<int>(std::max(P_.cols(), Q_.cols()));
    if (P_.rows() == 0) P_.resize(0, n_);
    if (Q_.rows() == 0) Q_.resize(0, n_);
    if (P_.cols() != n_ || Q_.cols() != n_) throw Error(ErrorKind::DimensionMismatch, "kernel blocks differ in n");
  }

  static Regularizer gauss_iso(int n, double eps) {
    return {KernelKind::GAUSS_ISO, eps, Eigen::MatrixXd(0, n), Eigen::MatrixXd::Identity(n, n)};
  }
  static Regularizer gauss_scaled(const Eigen::VectorXd& s, double eps) {
    return {KernelKind::GAUSS_SCALED, eps, Eigen::MatrixXd(0, s.size()), s.asDiagonal().toDenseMatrix()};
  }
  static Regularizer exp_iso(int n, double eps) {
    return {KernelKind::EXP_ISO, eps, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd(0, n)};
  }
  static Regularizer exp_scaled(const Eigen::VectorXd& s, double eps) {
    return {KernelKind::EXP_SCALED, eps, s.asDiagonal().toDenseMatrix(), Eigen::MatrixXd(0, s.size())};
  }
  static Regularizer eta_gauss(const Eigen::MatrixXd& M, double eps) {
    return {KernelKind::ETA_GAUSS, eps, Eigen::MatrixXd(0, M.cols()), M};
  }
  static Regularizer eta_exp(const Eigen::MatrixXd& M, double eps) {
    return {KernelKind::ETA_EXP, eps, M, Eigen::MatrixXd(0, M.cols())};
  }
  static Regularizer mixed(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, double eps) {
    return {KernelKind::MIXED, eps, P, Q};
  }

  KernelKind kind() const { return kind_; }
  double epsilon() const { return eps_; }
  int n() const { return n_; }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  bool pure_gaussian() const { return P_.rows() == 0; }
  bool pure_exponential() const { return Q_.rows() == 0; }

  Regularizer with_epsilon(double eps) const { return {kind_, eps, P_, Q_}; }

  double exponent(const Eigen::VectorXd& xi) const {
    double e = 0;
    if (P_.rows()) e += (P_ * xi).norm();
    if (Q_.rows()) e += (Q_ * xi).squaredNorm();
    return eps_ * e;
  }
  double operator()(const Eigen::VectorXd& xi) const { return std::exp(-exponent(xi)); }

  // radial parameters along unit direction u: G(t u) = exp(-alpha t - beta t^2)
  double alpha(const Eigen::VectorXd& u) const { return P_.rows() ? eps_ * (P_ * u).norm() : 0.0; }
  double beta(const Eigen::VectorXd& u) const { return Q_.rows() ? eps_ * (Q_ * u).squaredNorm() : 0.0; }

  Eigen::MatrixXd metric() const {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_, n_);
    if (P_.rows()) S += P_.transpose() * P_;
    if (Q_.rows()) S += Q_.transpose() * Q_;
    return S;
  }

  bool integrable() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric());
    return es.eigenvalues()(0) > 1e-14 * std::max(1.0, es.eigenvalues()(n_ - 1));
  }

  // upper bound of G over the face xi_k = +-R
  double face_max(int k, double R) const {
    if (!integrable()) throw Error(ErrorKind::NonIntegrable, "kernel does not decay in every direction");
    const double sk = metric().inverse()(k, k);
    const double d = R / std::sqrt(sk);
    if (pure_gaussian()) return std::exp(-eps_ * d * d);
    if (pure_exponential()) {
      const double pk = (P_.transpose() * P_).inverse()(k, k);
      return std::exp(-eps_ * R / std::sqrt(pk));
    }
    double f = std::min(d, d * d);
    if (d >= 0.5) f = std::min(f, d * d + 0.25);
    return std::exp(-eps_ * f);
  }

  // smallest R with face_max(k, R) <= level
  double cutoff(int k, double level = 1e-10) const {
    const double T = -std::log(level);
    if (!integrable()) throw Error(ErrorKind::NonIntegrable, "kernel does not decay in every direction");
    if (pure_gaussian()) return std::sqrt(T * metric().inverse()(k, k) / eps_);
    if (pure_exponential()) return T / eps_ * std::sqrt((P_.transpose() * P_).inverse()(k, k));
    double lo = 0, hi = 1;
    while (face_max(k, hi) > level) hi *= 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (face_max(k, mid) > level ? lo : hi) = mid;
    }
    return hi;
  }

  // standard deviation of the Gaussian part of G in a-space along its widest direction
  double gaussian_blur() const {
    if (!Q_.rows()) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_.transpose() * Q_);
    return std::sqrt(2.0 * eps_ * es.eigenvalues().maxCoeff());
  }
  // half-width scale of the exponential part (Cauchy-like tails)
  double exponential_width() const {
    if (!P_.rows()) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P_);
    return eps_ * svd.singularValues()(0);
  }
  double blur_width() const { return std::max(gaussian_blur(), exponential_width()); }

  // int G over R^n
  double integral() const {
    if (!integrable()) throw Error(ErrorKind::NonIntegrable, "kernel does not decay in every direction");
    const int p = static_cast<int>(P_.rows()), q = static_cast<int>(Q_.rows());
    if (p + q == n_) {
      Eigen::MatrixXd B(n_, n_);
      if (p) B.topRows(p) = P_;
      if (q) B.bottomRows(q) = Q_;
      double val = 1.0 / std::abs(B.determinant());
      if (p) {
        const double surface = 2.0 * std::pow(special::kPi, 0.5 * p) / std::tgamma(0.5 * p);
        val *= surface * special::factorial(p - 1) / std::pow(eps_, p);
      }
      if (q) val *= std::pow(special::kPi / eps_, 0.5 * q);
      return val;
    }
    return integral_numeric();
  }

  // int over the unit sphere of J_{n-1}(alpha(u), beta(u))
  double integral_numeric(int angular = 0) const {
    if (!integrable()) throw Error(ErrorKind::NonIntegrable, "kernel does not decay in every direction");
    auto radial = [&](const Eigen::VectorXd& u) {
      return special::radial_moment(n_ - 1, alpha(u), beta(u)).real();
    };
    Eigen::VectorXd u(n_);
    if (n_ == 1) {
      u << 1.0;
      double s = radial(u);
      u << -1.0;
      return s + radial(u);
    }
    if (n_ == 2) {
      const int N = angular ? angular : 4096;
      double s = 0;
      for (int i = 0; i < N; ++i) {
        const double t = 2 * special::kPi * i / N;
        u << std::cos(t), std::sin(t);
        s += radial(u);
      }
      return s * 2 * special::kPi / N;
    }
    if (n_ == 3) {
      const int N = angular ? angular : 256;
      auto [z, w] = special::gauss_legendre(N / 2);
      double s = 0;
      for (size_t i = 0; i < z.size(); ++i) {
        const double st = std::sqrt(1 - z[i] * z[i]);
        double ring = 0;
        for (int j = 0; j < N; ++j) {
          const double ph = 2 * special::kPi * j / N;
          u << st * std::cos(ph), st * std::sin(ph), z[i];
          ring += radial(u);
        }
        s += w[i] * ring * 2 * special::kPi / N;
      }
      return s;
    }
    throw Error(ErrorKind::NonIntegrable, "numeric kernel integral supports n <= 3");
  }

  std::string describe() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s(eps=%.6g)", to_string(kind_), eps_);
    return buf;
  }

 private:
  KernelKind kind_ = KernelKind::GAUSS_ISO;
  double eps_ = 1e-3;
  int n_ = 0;
  Eigen::MatrixXd P_, Q_;
};

// int G_reg / int G_ref: the factor a scaled-kernel negativity is divided by
inline double norm_factor(const Regularizer& reg, const Regularizer& reference) {
  if (reg.n() != reference.n()) throw Error(ErrorKind::DimensionMismatch, "kernels differ in n");
  return reg.integral() / reference.integral();
}

}  // namespace wigvol
