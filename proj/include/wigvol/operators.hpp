#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "gellmann.hpp"
#include "linalg.hpp"

namespace wigvol {

enum class Family {
  MUB_PAULI,
  NOISY_PROJ,
  NOISY_PROJ_MIXED,
  NOISY_PAULI,
  NOISY_PAULI_SYMM,
  ARB_QUBIT_TRIPLE,
  ARB_QUBIT_PAIR,
  GELLMANN,
  NOISY_GELLMANN,
  CUSTOM
};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::MUB_PAULI: return "MUB_PAULI";
    case Family::NOISY_PROJ: return "NOISY_PROJ";
    case Family::NOISY_PROJ_MIXED: return "NOISY_PROJ_MIXED";
    case Family::NOISY_PAULI: return "NOISY_PAULI";
    case Family::NOISY_PAULI_SYMM: return "NOISY_PAULI_SYMM";
    case Family::ARB_QUBIT_TRIPLE: return "ARB_QUBIT_TRIPLE";
    case Family::ARB_QUBIT_PAIR: return "ARB_QUBIT_PAIR";
    case Family::GELLMANN: return "GELLMANN";
    case Family::NOISY_GELLMANN: return "NOISY_GELLMANN";
    case Family::CUSTOM: return "CUSTOM";
  }
  return "CUSTOM";
}

inline Family family_from_string(const std::string& s) {
  for (Family f : {Family::MUB_PAULI, Family::NOISY_PROJ, Family::NOISY_PROJ_MIXED, Family::NOISY_PAULI,
                   Family::NOISY_PAULI_SYMM, Family::ARB_QUBIT_TRIPLE, Family::ARB_QUBIT_PAIR,
                   Family::GELLMANN, Family::NOISY_GELLMANN, Family::CUSTOM})
    if (s == to_string(f)) return f;
  throw Error(ErrorKind::ConfigError, "unknown family '" + s + "'");
}

struct AxisSign {
  int axis = 1;  // 1..3
  int sign = 1;  // +1 or -1
  bool operator==(const AxisSign&) const = default;
};

struct FamilyParams {
  double lambda = 0.0;
  std::vector<double> lambdas;
  double beta = 1.0;
  double theta1 = 0, phi1 = 0, theta2 = 0, phi2 = 0;
  std::vector<AxisSign> signs;
  int N = 2;
  int n = 0;
};

// a' = M a + c. Coordinates listed in `kernel` are delta-directions; every other
// coordinate i maps to Bloch component bloch_axis[i] (0-based) with bloch_sign[i].
struct AffineMap {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  std::vector<int> kernel;
  std::vector<int> bloch_axis;
  std::vector<int> bloch_sign;

  Eigen::VectorXd apply(const Eigen::VectorXd& a) const { return M * a + c; }
  bool is_kernel(int i) const {
    for (int k : kernel)
      if (k == i) return true;
    return false;
  }
  // non-kernel coordinates of a', in order
  Eigen::VectorXd bloch_coords(const Eigen::VectorXd& ap) const {
    std::vector<double> v;
    for (int i = 0; i < ap.size(); ++i)
      if (!is_kernel(i)) v.push_back(ap(i));
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
};

class OperatorSet {
 public:
  OperatorSet() = default;
  OperatorSet(std::vector<HermitianOperator> ops, Family family, FamilyParams params,
              std::optional<AffineMap> affine = std::nullopt, std::optional<AffineMap> shifted = std::nullopt)
      : ops_(std::move(ops)), family_(family), params_(std::move(params)), affine_(std::move(affine)),
        shifted_(std::move(shifted)) {
    if (ops_.empty()) throw Error(ErrorKind::BadIndex, "operator set is empty");
    const int limit = family_ == Family::CUSTOM ? 6 : 4;
    if (static_cast<int>(ops_.size()) > limit) throw Error(ErrorKind::BadIndex, "too many operators");
    for (const auto& o : ops_)
      if (o.dim() != ops_[0].dim()) throw Error(ErrorKind::DimensionMismatch, "operators differ in dimension");
    params_.n = n();
  }

  int n() const { return static_cast<int>(ops_.size()); }
  int dim() const { return ops_.empty() ? 0 : ops_[0].dim(); }
  const std::vector<HermitianOperator>& ops() const { return ops_; }
  const HermitianOperator& op(int k) const { return ops_.at(k); }
  Family family() const { return family_; }
  const FamilyParams& params() const { return params_; }
  const std::optional<AffineMap>& affine() const { return affine_; }
  // a'' = a - lambda for the equal-noise family
  const std::optional<AffineMap>& shifted() const { return shifted_; }

  // per-axis [lambda_min, lambda_max]
  std::vector<std::pair<double, double>> eigen_ranges() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& o : ops_) {
      auto es = linalg::eigh(o.matrix());
      out.emplace_back(es.values(0), es.values(es.values.size() - 1));
    }
    return out;
  }

 private:
  std::vector<HermitianOperator> ops_;
  Family family_ = Family::CUSTOM;
  FamilyParams params_;
  std::optional<AffineMap> affine_;
  std::optional<AffineMap> shifted_;
};

inline HermitianOperator pauli(int k) {
  if (k < 1 || k > 3) throw Error(ErrorKind::BadIndex, "Pauli index must be 1..3");
  return HermitianOperator(detail::gellmann_basis(2)[k - 1]);
}

inline HermitianOperator gellmann(int N, int k) {
  const auto& b = detail::gellmann_basis(N);
  if (k < 1 || k > static_cast<int>(b.size())) throw Error(ErrorKind::BadIndex, "Gell-Mann index out of range");
  return HermitianOperator(b[k - 1]);
}

namespace detail {

inline void check_lambda(double l, bool allow_one) {
  if (!(l >= 0.0) || l > 1.0 || (!allow_one && l >= 1.0))
    throw Error(ErrorKind::BadNoise, "noise parameter lambda=" + std::to_string(l) + " out of range");
}

inline AffineMap diagonal_map(const std::vector<double>& lambdas) {
  const int n = static_cast<int>(lambdas.size());
  AffineMap m;
  m.M = Eigen::MatrixXd::Zero(n, n);
  m.c = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    m.M(k, k) = 1.0 / (1.0 - lambdas[k]);
    m.c(k) = -lambdas[k] / (1.0 - lambdas[k]);
    m.bloch_axis.push_back(k);
    m.bloch_sign.push_back(1);
  }
  return m;
}

}  // namespace detail

inline OperatorSet mub_pauli_set(int n) {
  if (n < 2 || n > 3) throw Error(ErrorKind::BadIndex, "MUB Pauli set needs n in {2,3}");
  std::vector<HermitianOperator> ops;
  for (int k = 1; k <= n; ++k) ops.push_back(pauli(k));
  FamilyParams p;
  p.lambdas.assign(n, 0.0);
  return OperatorSet(ops, Family::MUB_PAULI, p, detail::diagonal_map(p.lambdas));
}

// A_k = (lambda/2) I + (1-lambda)|s_k><s_k| = I/2 + s_k (1-lambda)/2 sigma_axis
inline OperatorSet noisy_projector_set(const std::vector<AxisSign>& signs, double lambda) {
  const int n = static_cast<int>(signs.size());
  if (n < 1 || n > 4) throw Error(ErrorKind::BadIndex, "projector set needs 1..4 operators");
  detail::check_lambda(lambda, true);
  for (const auto& s : signs) {
    if (s.axis < 1 || s.axis > 3) throw Error(ErrorKind::BadIndex, "projector axis must be 1..3");
    if (s.sign != 1 && s.sign != -1) throw Error(ErrorKind::BadIndex, "projector sign must be +1 or -1");
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k)
      if (signs[j] == signs[k]) throw Error(ErrorKind::BadIndex, "repeated projector in set");

  const double c = 0.5 * (1.0 - lambda);
  std::vector<HermitianOperator> ops;
  for (const auto& s : signs) {
    ComplexMatrix m = 0.5 * ComplexMatrix::Identity(2, 2) + (s.sign * c) * pauli(s.axis).matrix();
    ops.emplace_back(m);
  }

  // group operators by axis
  std::vector<int> singles;
  std::vector<std::pair<int, int>> pairs;  // (plus op, minus op)
  for (int axis = 1; axis <= 3; ++axis) {
    int plus = -1, minus = -1;
    for (int k = 0; k < n; ++k)
      if (signs[k].axis == axis) (signs[k].sign > 0 ? plus : minus) = k;
    if (plus >= 0 && minus >= 0)
      pairs.emplace_back(plus, minus);
    else if (plus >= 0 || minus >= 0)
      singles.push_back(plus >= 0 ? plus : minus);
  }
  // keep singles in operator order
  std::sort(singles.begin(), singles.end());

  FamilyParams p;
  p.lambda = lambda;
  p.signs = signs;
  const Family fam = pairs.empty() ? Family::NOISY_PROJ : Family::NOISY_PROJ_MIXED;
  if (lambda >= 1.0) return OperatorSet(ops, fam, p);

  AffineMap am;
  am.M = Eigen::MatrixXd::Zero(n, n);
  am.c = Eigen::VectorXd::Zero(n);
  const double s = 1.0 / (1.0 - lambda);
  int row = 0;
  for (int k : singles) {
    am.M(row, k) = 2.0 * s;
    am.c(row) = -s;
    am.bloch_axis.push_back(signs[k].axis - 1);
    am.bloch_sign.push_back(signs[k].sign);
    ++row;
  }
  for (auto [kp, km] : pairs) {
    am.M(row, kp) = s;
    am.M(row, km) = -s;
    am.bloch_axis.push_back(signs[kp].axis - 1);
    am.bloch_sign.push_back(1);
    ++row;
  }
  for (auto [kp, km] : pairs) {
    am.M(row, kp) = s;
    am.M(row, km) = s;
    am.c(row) = -s;
    am.kernel.push_back(row);
    ++row;
  }
  return OperatorSet(ops, fam, p, am);
}

// A_k = (1-lambda_k) sigma_k + lambda_k I
inline OperatorSet noisy_pauli_set(const std::vector<double>& lambdas, bool symmetric = false) {
  const int n = static_cast<int>(lambdas.size());
  if (n < 2 || n > 3) throw Error(ErrorKind::BadIndex, "noisy Pauli set needs n in {2,3}");
  for (double l : lambdas) detail::check_lambda(l, false);
  if (symmetric)
    for (double l : lambdas)
      if (l != lambdas[0]) throw Error(ErrorKind::BadNoise, "symmetric set needs equal noise");
  std::vector<HermitianOperator> ops;
  for (int k = 0; k < n; ++k)
    ops.emplace_back((1.0 - lambdas[k]) * pauli(k + 1).matrix() +
                     lambdas[k] * ComplexMatrix::Identity(2, 2));
  FamilyParams p;
  p.lambdas = lambdas;
  p.lambda = lambdas[0];
  std::optional<AffineMap> shifted;
  if (symmetric) {
    AffineMap sh;
    sh.M = Eigen::MatrixXd::Identity(n, n);
    sh.c = Eigen::VectorXd::Constant(n, -lambdas[0]);
    for (int k = 0; k < n; ++k) {
      sh.bloch_axis.push_back(k);
      sh.bloch_sign.push_back(1);
    }
    shifted = sh;
  }
  return OperatorSet(ops, symmetric ? Family::NOISY_PAULI_SYMM : Family::NOISY_PAULI, p,
                     detail::diagonal_map(lambdas), shifted);
}

inline double coplanarity_factor(double t1, double f1, double t2, double f2) {
  return std::abs(std::sin(t1) * std::sin(t2) * std::sin(f1 - f2));
}

inline OperatorSet arb_qubit_triple(double t1, double f1, double t2, double f2) {
  const Eigen::Vector3d l(std::sin(t1) * std::cos(f1), std::sin(t1) * std::sin(f1), std::cos(t1));
  const Eigen::Vector3d g(std::sin(t2) * std::cos(f2), std::sin(t2) * std::sin(f2), std::cos(t2));
  const double det = g.y() * l.x() - g.x() * l.y();
  if (std::abs(det) < 1e-12) throw Error(ErrorKind::DegenerateTriple, "coplanar operator triple");
  auto dot = [](const Eigen::Vector3d& v) {
    return HermitianOperator(v.x() * pauli(1).matrix() + v.y() * pauli(2).matrix() + v.z() * pauli(3).matrix());
  };
  std::vector<HermitianOperator> ops{dot(l), dot(g), pauli(3)};
  // a' = M^{-T} a with M = [l g e_z]
  Eigen::Matrix3d M;
  M.col(0) = l;
  M.col(1) = g;
  M.col(2) = Eigen::Vector3d::UnitZ();
  AffineMap am;
  am.M = M.transpose().inverse();
  am.c = Eigen::VectorXd::Zero(3);
  am.bloch_axis = {0, 1, 2};
  am.bloch_sign = {1, 1, 1};
  FamilyParams p;
  p.theta1 = t1;
  p.phi1 = f1;
  p.theta2 = t2;
  p.phi2 = f2;
  return OperatorSet(ops, Family::ARB_QUBIT_TRIPLE, p, am);
}

inline OperatorSet arb_qubit_pair(double beta) {
  if (!(beta > 0.0) || beta > 1.0) throw Error(ErrorKind::BadBeta, "beta must be in (0,1]");
  const double s = std::sqrt(1.0 - beta * beta);
  std::vector<HermitianOperator> ops{pauli(1), HermitianOperator(s * pauli(1).matrix() + beta * pauli(2).matrix())};
  AffineMap am;
  am.M = Eigen::MatrixXd(2, 2);
  am.M << 1.0, 0.0, -s / beta, 1.0 / beta;
  am.c = Eigen::VectorXd::Zero(2);
  am.bloch_axis = {0, 1};
  am.bloch_sign = {1, 1};
  FamilyParams p;
  p.beta = beta;
  return OperatorSet(ops, Family::ARB_QUBIT_PAIR, p, am);
}

inline OperatorSet noisy_gellmann_set(int N, const std::vector<double>& lambdas) {
  if (N < 2 || N > kMaxDim) throw Error(ErrorKind::BadDim, "Gell-Mann dimension must be in [2,16]");
  const int n = static_cast<int>(lambdas.size());
  if (n < 2 || n > 3) throw Error(ErrorKind::BadIndex, "Gell-Mann set needs n in {2,3}");
  for (double l : lambdas) detail::check_lambda(l, false);
  std::vector<HermitianOperator> ops;
  for (int k = 0; k < n; ++k)
    ops.emplace_back((1.0 - lambdas[k]) * gellmann(N, k + 1).matrix() +
                     lambdas[k] * ComplexMatrix::Identity(N, N));
  FamilyParams p;
  p.N = N;
  p.lambdas = lambdas;
  p.lambda = lambdas[0];
  return OperatorSet(ops, Family::NOISY_GELLMANN, p, detail::diagonal_map(lambdas));
}

inline OperatorSet gellmann_set(int N, int n) {
  OperatorSet s = noisy_gellmann_set(N, std::vector<double>(n, 0.0));
  return OperatorSet(s.ops(), Family::GELLMANN, s.params(), s.affine());
}

inline OperatorSet custom_set(const std::vector<HermitianOperator>& ops) {
  return OperatorSet(ops, Family::CUSTOM, FamilyParams{});
}

}  // namespace wigvol
