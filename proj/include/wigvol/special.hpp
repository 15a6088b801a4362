#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace wigvol::special {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Weideman's rational approximation of the Faddeeva function, valid for Im z >= 0.
class Faddeeva {
 public:
  static constexpr int N = 40;

  static const Faddeeva& instance() {
    static const Faddeeva f;
    return f;
  }

  cplx operator()(cplx z) const {
    const cplx iz(-z.imag(), z.real());
    const cplx den = L_ - iz;
    const cplx Z = (L_ + iz) / den;
    cplx p = a_[N - 1];
    for (int j = N - 2; j >= 0; --j) p = p * Z + a_[j];
    return 2.0 * p / (den * den) + (1.0 / std::sqrt(kPi)) / den;
  }

 private:
  Faddeeva() {
    const int M = 2 * N, M2 = 2 * M;
    L_ = std::sqrt(N / std::sqrt(2.0));
    // f sampled on k = -M+1..M-1, prefixed with a zero, then fftshift'ed
    std::vector<double> f(M2, 0.0);
    for (int k = -M + 1; k < M; ++k) {
      const double t = L_ * std::tan(k * kPi / M2);
      f[k + M] = std::exp(-t * t) * (L_ * L_ + t * t);
    }
    std::vector<double> g(M2);
    for (int i = 0; i < M2; ++i) g[i] = f[(i + M) % M2];
    for (int j = 1; j <= N; ++j) {
      double s = 0;
      for (int i = 0; i < M2; ++i) s += g[i] * std::cos(2.0 * kPi * j * i / M2);
      a_[j - 1] = s / M2;
    }
  }

  double L_ = 0;
  std::array<double, N> a_{};
};

inline cplx faddeeva(cplx z) { return Faddeeva::instance()(z); }

// e^{w^2} erfc(w) for Re w >= 0
inline cplx erfcx(cplx w) { return faddeeva(cplx(-w.imag(), w.real())); }

inline double factorial(int m) {
  double f = 1;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

// physicists' Hermite polynomial
inline double hermite(int m, double y) {
  double h0 = 1, h1 = 2 * y;
  if (m == 0) return h0;
  for (int k = 1; k < m; ++k) {
    const double h2 = 2 * y * h1 - 2 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// J_m(z, beta) = int_0^inf t^m exp(-z t - beta t^2) dt, Re z >= 0, beta >= 0
inline cplx radial_moment(int m, cplx z, double beta) {
  if (beta == 0.0) return factorial(m) / std::pow(z, m + 1);
  const double sb = std::sqrt(beta);
  const cplx w = z / (2.0 * sb);
  if (std::abs(w) >= 6.0) {
    cplx sum = 0;
    const cplx z2 = z * z;
    cplx zp = std::pow(z, m + 1);
    double coef = factorial(m);  // (m+2k)!/k! (-beta)^k
    double last = HUGE_VAL;
    for (int k = 0; k < 60; ++k) {
      const cplx term = coef / zp;
      const double at = std::abs(term);
      if (at > last) break;
      sum += term;
      if (at < 1e-17 * std::abs(sum)) break;
      last = at;
      coef *= -beta * (m + 2.0 * k + 1) * (m + 2.0 * k + 2) / (k + 1.0);
      zp *= z2;
    }
    return sum;
  }
  cplx j0 = std::sqrt(kPi) / (2.0 * sb) * erfcx(w);
  if (m == 0) return j0;
  cplx j1 = (1.0 - z * j0) / (2.0 * beta);
  for (int k = 1; k < m; ++k) {
    const cplx j2 = (double(k) * j0 - z * j1) / (2.0 * beta);
    j0 = j1;
    j1 = j2;
  }
  return j1;
}

// Re J_m(-i x, beta) for even m (pure Gaussian radial kernel)
inline double radial_moment_gauss_even(int m, double x, double beta) {
  const double sb = std::sqrt(beta);
  const double y = x / (2.0 * sb);
  const double sign = (m / 2) % 2 == 0 ? 1.0 : -1.0;
  return 0.5 * std::sqrt(kPi / beta) * sign * std::pow(2.0 * sb, -m) * hermite(m, y) * std::exp(-y * y);
}

// Gauss-Legendre nodes and weights on [-1,1] (Golub-Welsch)
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    w[i] = 2.0 * v * v;
  }
  return {x, w};
}

// Gaussian representation of delta with variance 2 eps: e^{-x^2/(4 eps)}/sqrt(4 pi eps)
inline double delta_gauss(double x, double eps) {
  return std::exp(-x * x / (4.0 * eps)) / std::sqrt(4.0 * kPi * eps);
}

inline double delta_gauss_prime(double x, double eps) { return -x / (2.0 * eps) * delta_gauss(x, eps); }

}  // namespace wigvol::special
