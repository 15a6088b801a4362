#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace wigvol {

using cplx = std::complex<double>;

namespace detail {

// Generalized Gell-Mann basis of dimension N, tr[L_j L_k] = 2 delta_jk.
// Order: the embedded Paulis on rows/cols (0,1), then symmetric off-diagonal
// pairs (row-major), antisymmetric pairs, then the remaining diagonal ones.
inline std::vector<Eigen::MatrixXcd> make_gellmann_basis(int N) {
  std::vector<Eigen::MatrixXcd> out;
  auto zero = [N] { return Eigen::MatrixXcd::Zero(N, N).eval(); };
  const cplx I(0.0, 1.0);

  Eigen::MatrixXcd s = zero();
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  out.push_back(s);
  s = zero();
  s(0, 1) = -I;
  s(1, 0) = I;
  out.push_back(s);
  s = zero();
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  out.push_back(s);

  for (int j = 0; j < N; ++j)
    for (int k = j + 1; k < N; ++k) {
      if (j == 0 && k == 1) continue;
      s = zero();
      s(j, k) = 1.0;
      s(k, j) = 1.0;
      out.push_back(s);
    }
  for (int j = 0; j < N; ++j)
    for (int k = j + 1; k < N; ++k) {
      if (j == 0 && k == 1) continue;
      s = zero();
      s(j, k) = -I;
      s(k, j) = I;
      out.push_back(s);
    }
  for (int l = 2; l < N; ++l) {
    s = zero();
    const double c = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int j = 0; j < l; ++j) s(j, j) = c;
    s(l, l) = -c * l;
    out.push_back(s);
  }
  return out;
}

inline const std::vector<Eigen::MatrixXcd>& gellmann_basis(int N) {
  if (N < 2 || N > 16) throw Error(ErrorKind::BadDim, "Gell-Mann dimension must be in [2,16]");
  static const std::vector<std::vector<Eigen::MatrixXcd>> cache = [] {
    std::vector<std::vector<Eigen::MatrixXcd>> c(17);
    for (int n = 2; n <= 16; ++n) c[n] = make_gellmann_basis(n);
    return c;
  }();
  return cache[N];
}

}  // namespace detail
}  // namespace wigvol
