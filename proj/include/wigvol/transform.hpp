#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include "charfunc.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "operators.hpp"
#include "regularizer.hpp"
#include "special.hpp"

namespace wigvol {

enum class TransformMethod { AUTO, BOX_DIRECT, BOX_FFT, POLAR };

inline const char* to_string(TransformMethod m) {
  switch (m) {
    case TransformMethod::AUTO: return "auto";
    case TransformMethod::BOX_DIRECT: return "box_direct";
    case TransformMethod::BOX_FFT: return "box_fft";
    case TransformMethod::POLAR: return "polar";
  }
  return "auto";
}

inline TransformMethod transform_method_from_string(const std::string& s) {
  for (auto m : {TransformMethod::AUTO, TransformMethod::BOX_DIRECT, TransformMethod::BOX_FFT, TransformMethod::POLAR})
    if (s == to_string(m)) return m;
  throw Error(ErrorKind::ConfigError, "unknown transform method '" + s + "'");
}

struct TransformOptions {
  TransformMethod method = TransformMethod::AUTO;
  double xi_cutoff = 0;   // 0: per-axis radius where G drops to 1e-10
  int nodes = 0;          // box_direct nodes per axis, 0 picks them from the oscillation rule
  int angular_nodes = 0;  // polar: nodes on the half circle (m=2) or in azimuth (m=3)
  bool reduce = true;
  int threads = 0;        // 0: WIGVOL_THREADS or 1
  int multiplier = -1;    // k >= 0: transform W_I-hat times i dG/dxi_k / G instead of W_rho-hat
  double memory_limit = 2.0e9;
};

namespace detail {

inline int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WIGVOL_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

// static chunking; every index is written by exactly one worker
template <class F>
void parallel_for(long n, int threads, F&& f) {
  const long t = std::max(1L, std::min<long>(threads, n));
  if (t == 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  const long chunk = (n + t - 1) / t;
  for (long w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      try {
        const long end = std::min(n, (w + 1) * chunk);
        for (long i = w * chunk; i < end; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// operators, weight and kernel blocks in a common coordinate system
struct Problem {
  std::vector<ComplexMatrix> ops;
  ComplexMatrix weight;
  Eigen::MatrixXd P, Q;
  double eps = 0;
  bool has_mult = false;
  Eigen::VectorXd e, f;  // P e_k and Q e_k

  int m() const { return static_cast<int>(ops.size()); }

  double kernel(const Eigen::VectorXd& xi) const {
    double s = 0;
    if (P.rows()) s += (P * xi).norm();
    if (Q.rows()) s += (Q * xi).squaredNorm();
    return std::exp(-eps * s);
  }

  cplx multiplier(const Eigen::VectorXd& xi) const {
    if (!has_mult) return 1.0;
    double s = 0;
    if (P.rows()) {
      const Eigen::VectorXd px = P * xi;
      const double nrm = px.norm();
      if (nrm > 0) s += e.dot(px) / nrm;
    }
    if (Q.rows()) s += 2.0 * f.dot(Q * xi);
    return cplx(0.0, -eps * s);
  }
};

inline Problem make_problem(const std::vector<ComplexMatrix>& ops, const ComplexMatrix& weight, const Regularizer& reg,
                            int mult) {
  Problem pb;
  pb.ops = ops;
  pb.weight = weight;
  pb.P = reg.P();
  pb.Q = reg.Q();
  pb.eps = reg.epsilon();
  if (mult >= 0) {
    if (mult >= static_cast<int>(ops.size())) throw Error(ErrorKind::BadIndex, "multiplier axis out of range");
    pb.has_mult = true;
    pb.e = pb.P.rows() ? Eigen::VectorXd(pb.P.col(mult)) : Eigen::VectorXd();
    pb.f = pb.Q.rows() ? Eigen::VectorXd(pb.Q.col(mult)) : Eigen::VectorXd();
  }
  return pb;
}

// Splits off the directions xi = U zeta along which sum xi_k A_k is a multiple of I.
struct Reduction {
  Eigen::MatrixXd U, V;
  Eigen::VectorXd tau;
  Eigen::MatrixXd S;  // U^T Q^T Q U
  std::vector<ComplexMatrix> ops;
  int q() const { return static_cast<int>(U.cols()); }
  int m() const { return static_cast<int>(V.cols()); }
};

inline Reduction identity_reduction(const std::vector<ComplexMatrix>& ops) {
  const int n = static_cast<int>(ops.size());
  Reduction r;
  r.U = Eigen::MatrixXd(n, 0);
  r.V = Eigen::MatrixXd::Identity(n, n);
  r.tau = Eigen::VectorXd::Zero(n);
  r.S = Eigen::MatrixXd(0, 0);
  r.ops = ops;
  return r;
}

inline Reduction reduce(const std::vector<ComplexMatrix>& ops, const Regularizer& reg) {
  const int n = static_cast<int>(ops.size());
  const int d = static_cast<int>(ops[0].rows());
  Eigen::VectorXd tau(n);
  std::vector<ComplexMatrix> B;
  Eigen::MatrixXd flat(2 * d * d, n);
  for (int k = 0; k < n; ++k) {
    tau(k) = ops[k].trace().real() / d;
    B.push_back(ops[k] - tau(k) * ComplexMatrix::Identity(d, d));
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) {
        flat(2 * (j * d + l), k) = B[k](j, l).real();
        flat(2 * (j * d + l) + 1, k) = B[k](j, l).imag();
      }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(flat, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int m = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++m;
  const int q = n - m;
  Reduction r;
  r.tau = tau;
  r.V = svd.matrixV().leftCols(m);
  r.U = svd.matrixV().rightCols(q);
  if (q > 0) {
    const double pu = reg.P().rows() ? (reg.P() * r.U).cwiseAbs().maxCoeff() : 0.0;
    const Eigen::MatrixXd QtQ = reg.Q().rows() ? Eigen::MatrixXd(reg.Q().transpose() * reg.Q())
                                               : Eigen::MatrixXd::Zero(n, n);
    const double cross = m > 0 ? (r.V.transpose() * QtQ * r.U).cwiseAbs().maxCoeff() : 0.0;
    if (pu > 1e-10 || cross > 1e-10) return identity_reduction(ops);
    r.S = r.U.transpose() * QtQ * r.U;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.S);
    if (es.eigenvalues()(0) <= 1e-14) throw Error(ErrorKind::NonIntegrable, "kernel does not decay along a scalar direction");
  } else {
    r.S = Eigen::MatrixXd(0, 0);
  }
  for (int j = 0; j < m; ++j) {
    ComplexMatrix h = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < n; ++k) h += r.V(k, j) * B[k];
    r.ops.push_back(h);
  }
  return r;
}

// ---- polar engine ----

inline constexpr int kMaxPolarDim = 3;

// per-problem data in a form that makes one direction cheap to evaluate
struct PolarSetup {
  int m = 0, d = 0;
  const Problem* pb = nullptr;
  double eps = 0;
  bool has_p = false, has_q = false, has_mult = false;
  double PtP[kMaxPolarDim][kMaxPolarDim] = {}, QtQ[kMaxPolarDim][kMaxPolarDim] = {};
  double Pte[kMaxPolarDim] = {}, Qtf[kMaxPolarDim] = {};
  // split path: ops and weight share blocks of size <= 2; each block is h0_j I + hv_j.sigma
  struct Block {
    int idx[2] = {0, 0};
    int size = 1;
    double h0[kMaxPolarDim] = {}, hv[kMaxPolarDim][3] = {};
    double w0 = 0, wv[3] = {};
  };
  bool split = false;
  std::vector<Block> blocks;

  explicit PolarSetup(const Problem& p) : m(p.m()), d(static_cast<int>(p.weight.rows())), pb(&p), eps(p.eps) {
    if (m > kMaxPolarDim) throw Error(ErrorKind::TooLarge, "polar engine supports at most 3 reduced dimensions");
    has_p = p.P.rows() > 0;
    has_q = p.Q.rows() > 0;
    has_mult = p.has_mult;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (has_p) PtP[i][j] = p.P.col(i).dot(p.P.col(j));
        if (has_q) QtQ[i][j] = p.Q.col(i).dot(p.Q.col(j));
      }
    if (has_mult) {
      for (int i = 0; i < m; ++i) {
        if (has_p) Pte[i] = p.P.col(i).dot(p.e);
        if (has_q) Qtf[i] = p.Q.col(i).dot(p.f);
      }
    }
    ComplexMatrix pattern = p.weight.cwiseAbs().cast<cplx>();
    for (const auto& o : p.ops) pattern += o.cwiseAbs().cast<cplx>();
    const auto parts = linalg::block_structure(pattern);
    split = true;
    for (const auto& b : parts) split = split && b.size() <= 2;
    if (!split) return;
    const auto& sig = gellmann_basis(2);
    for (const auto& b : parts) {
      Block B;
      B.size = static_cast<int>(b.size());
      B.idx[0] = b[0];
      B.idx[1] = b.back();
      auto sub = [&](const ComplexMatrix& a) {
        ComplexMatrix s(B.size, B.size);
        for (int r = 0; r < B.size; ++r)
          for (int c = 0; c < B.size; ++c) s(r, c) = a(B.idx[r], B.idx[c]);
        return s;
      };
      for (int j = 0; j < m; ++j) {
        const ComplexMatrix s = sub(p.ops[j]);
        if (B.size == 1) {
          B.h0[j] = s(0, 0).real();
        } else {
          B.h0[j] = 0.5 * s.trace().real();
          for (int i = 0; i < 3; ++i) B.hv[j][i] = 0.5 * (s * sig[i]).trace().real();
        }
      }
      const ComplexMatrix w = sub(p.weight);
      if (B.size == 1) {
        B.w0 = w(0, 0).real();
      } else {
        B.w0 = 0.5 * w.trace().real();
        for (int i = 0; i < 3; ++i) B.wv[i] = 0.5 * (w * sig[i]).trace().real();
      }
      blocks.push_back(B);
    }
  }
};

struct Direction {
  double u[kMaxPolarDim] = {};
  int d = 0;
  double mu[kMaxDim] = {}, p[kMaxDim] = {}, dmu[kMaxDim] = {};
  double alpha = 0, beta = 0;
  cplx a0 = 1.0, a1 = 0.0;
};

inline double quad(const double (&A)[kMaxPolarDim][kMaxPolarDim], const double* u, int m) {
  double s = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) s += u[i] * A[i][j] * u[j];
  return s;
}

inline Direction make_direction(const PolarSetup& S, const double* u, const double* du = nullptr) {
  Direction D;
  D.d = S.d;
  for (int i = 0; i < S.m; ++i) D.u[i] = u[i];
  if (S.split) {
    int k = 0;
    for (const auto& B : S.blocks) {
      double c0 = 0, c[3] = {0, 0, 0}, e0 = 0, e[3] = {0, 0, 0};
      for (int j = 0; j < S.m; ++j) {
        c0 += u[j] * B.h0[j];
        for (int i = 0; i < 3; ++i) c[i] += u[j] * B.hv[j][i];
        if (du) {
          e0 += du[j] * B.h0[j];
          for (int i = 0; i < 3; ++i) e[i] += du[j] * B.hv[j][i];
        }
      }
      if (B.size == 1) {
        D.mu[k] = c0;
        D.p[k] = B.w0;
        D.dmu[k] = e0;
        ++k;
        continue;
      }
      const double r = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
      double wc = 0, ec = 0;
      if (r > 0) {
        wc = (B.wv[0] * c[0] + B.wv[1] * c[1] + B.wv[2] * c[2]) / r;
        ec = (e[0] * c[0] + e[1] * c[1] + e[2] * c[2]) / r;
      }
      D.mu[k] = c0 - r;
      D.mu[k + 1] = c0 + r;
      D.p[k] = B.w0 - wc;
      D.p[k + 1] = B.w0 + wc;
      D.dmu[k] = e0 - ec;
      D.dmu[k + 1] = e0 + ec;
      k += 2;
    }
  } else {
    const Problem& pb = *S.pb;
    ComplexMatrix h = ComplexMatrix::Zero(S.d, S.d);
    for (int j = 0; j < S.m; ++j) h += u[j] * pb.ops[j];
    const EigenSystem es = linalg::eigh(h);
    ComplexMatrix dh;
    if (du) {
      dh = ComplexMatrix::Zero(S.d, S.d);
      for (int j = 0; j < S.m; ++j) dh += du[j] * pb.ops[j];
    }
    for (int j = 0; j < S.d; ++j) {
      const auto v = es.vectors.col(j);
      D.mu[j] = es.values(j);
      D.p[j] = v.dot(pb.weight * v).real();
      if (du) D.dmu[j] = v.dot(dh * v).real();
    }
  }
  const double pn = S.has_p ? std::sqrt(std::max(0.0, quad(S.PtP, u, S.m))) : 0.0;
  D.alpha = S.eps * pn;
  D.beta = S.has_q ? S.eps * quad(S.QtQ, u, S.m) : 0.0;
  if (S.has_mult) {
    D.a0 = 0.0;
    D.a1 = 0.0;
    double pe = 0, qf = 0;
    for (int i = 0; i < S.m; ++i) {
      pe += S.Pte[i] * u[i];
      qf += S.Qtf[i] * u[i];
    }
    if (S.has_p && pn > 0) D.a0 = cplx(0.0, -S.eps * pe / pn);
    if (S.has_q) D.a1 = cplx(0.0, -2.0 * S.eps * qf);
  }
  return D;
}

// Re int_0^inf t^{m-1} W-hat(tu) G(tu) mult(tu) e^{-i t u.x} dt
inline double direction_value(const Direction& D, const double* x, int m) {
  double ux = 0;
  for (int i = 0; i < m; ++i) ux += D.u[i] * x[i];
  double s = 0;
  for (int j = 0; j < D.d; ++j) {
    if (D.p[j] == 0.0) continue;
    const cplx z(D.alpha, -(D.mu[j] - ux));
    cplx v = 0;
    if (D.a0 != 0.0) v += D.a0 * special::radial_moment(m - 1, z, D.beta);
    if (D.a1 != 0.0) v += D.a1 * special::radial_moment(m, z, D.beta);
    s += D.p[j] * v.real();
  }
  return s;
}

class PolarEngine {
 public:
  // reach: largest |x| the engine will be evaluated at (sets the default m=3 node count)
  PolarEngine(const Problem& pb, int angular, double reach = 0) : S_(pb), m_(pb.m()) {
    if (m_ == 1) {
      const double u = 1.0;
      dirs_.push_back(make_direction(S_, &u));
      w_.push_back(1.0);
    } else if (m_ == 2) {
      N_ = angular > 0 ? angular : 256;
      for (int i = 0; i <= N_; ++i) {
        const double t = special::kPi * i / N_;
        const double u[2] = {std::cos(t), std::sin(t)}, du[2] = {-std::sin(t), std::cos(t)};
        dirs_.push_back(make_direction(S_, u, du));
      }
      for (const auto& D : dirs_)
        for (int j = 0; j < D.d; ++j) {
          spec_ = std::max(spec_, std::abs(D.mu[j]) + std::abs(D.dmu[j]));
          scale_ = std::max(scale_, D.alpha + 2.0 * std::sqrt(D.beta));
        }
    } else if (m_ == 3) {
      int nphi = angular;
      if (nphi <= 0) {
        // nodes per feature width sqrt(beta)/|x| of the angular integrand
        double spec = 0, w = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 16; ++i)
          for (int j = 0; j < 16; ++j) {
            const double c = (i + 0.5) / 16, st = std::sqrt(1.0 - c * c), ph = 2.0 * special::kPi * j / 16;
            const double u[3] = {st * std::cos(ph), st * std::sin(ph), c};
            const Direction D = make_direction(S_, u);
            for (int k = 0; k < D.d; ++k) spec = std::max(spec, std::abs(D.mu[k]));
            w = std::min(w, D.alpha + std::sqrt(D.beta));
          }
        const double nz = std::ceil(1.25 * (spec + reach) / w);
        nphi = 2 * static_cast<int>(std::clamp(nz, 48.0, 256.0));
      }
      const int nz = std::max(8, nphi / 2);
      auto [z, wz] = special::gauss_legendre(nz);
      for (int i = 0; i < nz; ++i) {
        const double c = 0.5 * (z[i] + 1.0), st = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < nphi; ++j) {
          const double ph = 2.0 * special::kPi * j / nphi;
          const double u[3] = {st * std::cos(ph), st * std::sin(ph), c};
          dirs_.push_back(make_direction(S_, u));
          w_.push_back(0.5 * wz[i] * 2.0 * special::kPi / nphi);
        }
      }
    } else {
      throw Error(ErrorKind::TooLarge, "polar engine supports at most 3 reduced dimensions");
    }
  }

  double operator()(const Eigen::VectorXd& xv) const {
    const double* x = xv.data();
    double half = 0;
    if (m_ == 2)
      half = circle_integral(x);
    else
      for (size_t i = 0; i < dirs_.size(); ++i) half += w_[i] * direction_value(dirs_[i], x, m_);
    return 2.0 * half / std::pow(2.0 * special::kPi, m_);
  }

 private:
  Direction at(double t, bool deriv) const {
    const double u[2] = {std::cos(t), std::sin(t)}, du[2] = {-std::sin(t), std::cos(t)};
    return make_direction(S_, u, deriv ? du : nullptr);
  }

  double branch(double t, int j, const double* x, bool deriv) const {
    const Direction D = at(t, true);
    return deriv ? D.dmu[j] + std::sin(t) * x[0] - std::cos(t) * x[1] : D.mu[j] - std::cos(t) * x[0] - std::sin(t) * x[1];
  }

  double root(double a, double b, int j, const double* x, bool deriv) const {
    const double fa = branch(a, j, x, deriv), fb = branch(b, j, x, deriv);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0) return std::abs(fa) < std::abs(fb) ? a : b;
    boost::uintmax_t it = 60;
    auto tol = [](double l, double r) { return std::abs(r - l) < 1e-14; };
    auto res = boost::math::tools::toms748_solve([&](double t) { return branch(t, j, x, deriv); }, a, b, fa, fb, tol, it);
    return 0.5 * (res.first + res.second);
  }

  // integral over [0, pi) of the direction value; near-singular angles become breakpoints
  double circle_integral(const double* x) const {
    const double dt = special::kPi / N_;
    const double X = spec_ + std::hypot(x[0], x[1]);
    const double thr = 3.0 * scale_ + 20.0 * X / N_;
    const int d = dirs_[0].d;
    std::vector<double> brk;
    auto xval = [&](int i, int j) {
      const double t = dt * i;
      return dirs_[i].mu[j] - std::cos(t) * x[0] - std::sin(t) * x[1];
    };
    auto dval = [&](int i, int j) {
      const double t = dt * i;
      return dirs_[i].dmu[j] + std::sin(t) * x[0] - std::cos(t) * x[1];
    };
    for (int i = 0; i < N_; ++i) {
      for (int j = 0; j < d; ++j) {
        if (dirs_[i].p[j] == 0.0 && dirs_[i + 1].p[j] == 0.0) continue;
        const double x0 = xval(i, j), x1 = xval(i + 1, j);
        if (x0 * x1 <= 0) {
          brk.push_back(root(dt * i, dt * (i + 1), j, x, false));
        } else if (std::min(std::abs(x0), std::abs(x1)) < thr && dval(i, j) * dval(i + 1, j) <= 0) {
          brk.push_back(root(dt * i, dt * (i + 1), j, x, true));
        }
      }
    }
    if (brk.empty()) {
      double s = 0;
      for (int i = 0; i < N_; ++i) s += direction_value(dirs_[i], x, m_);
      return s * dt;
    }
    for (double& t : brk) t = std::fmod(t, special::kPi);
    std::sort(brk.begin(), brk.end());
    std::vector<double> pts;
    for (double t : brk)
      if (pts.empty() || t - pts.back() > 1e-13) pts.push_back(t);
    if (pts.size() > 1 && pts.front() + special::kPi - pts.back() <= 1e-13) pts.pop_back();
    pts.push_back(pts.front() + special::kPi);

    static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    double s = 0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i], b = pts[i + 1];
      if (b - a < 1e-14) continue;
      const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
      s += hw * ts.integrate([&](double v) { return direction_value(at(mid + hw * v, false), x, m_); }, -1.0, 1.0, 1e-9);
    }
    return s;
  }

  PolarSetup S_;
  int m_;
  int N_ = 0;
  std::vector<Direction> dirs_;
  std::vector<double> w_;
  double spec_ = 0, scale_ = 0;
};

// ---- box engines ----

struct BoxResult {
  std::vector<double> values;
  double imag_residue = 0;
};

inline double box_frequency(const PhaseGrid& grid, const std::vector<std::pair<double, double>>& ranges, int k,
                            double centre) {
  const auto& ax = grid.axis(k);
  const double da = std::max(std::abs(ax.max - centre), std::abs(ax.min - centre));
  const double dl = std::max(std::abs(ranges[k].first - centre), std::abs(ranges[k].second - centre));
  return da + dl;
}

inline BoxResult box_direct(const Problem& pb, const PhaseGrid& grid, const std::vector<double>& R,
                            const std::vector<std::pair<double, double>>& ranges, int forced, double memory_limit,
                            int threads) {
  const int n = grid.n();
  std::vector<int> N(n);
  std::vector<double> h(n), centre(n);
  long total = 1;
  for (int k = 0; k < n; ++k) {
    centre[k] = 0.5 * (grid.axis(k).min + grid.axis(k).max);
    const double freq = box_frequency(grid, ranges, k, centre[k]);
    const double hmax = 2.0 * special::kPi / 8.0 / std::max(freq, 1e-300);
    if (forced > 0) {
      N[k] = forced;
      if (N[k] < 3 || 2.0 * R[k] / (N[k] - 1) > hmax)
        throw Error(ErrorKind::UnderResolved, "fewer than 8 nodes per oscillation period");
    } else {
      N[k] = 2 * static_cast<int>(std::ceil(R[k] / hmax)) + 1;
    }
    h[k] = 2.0 * R[k] / (N[k] - 1);
    total *= N[k];
    if (16.0 * total > memory_limit) throw Error(ErrorKind::TooLarge, "quadrature tensor exceeds the memory limit");
  }

  CharEvaluator cf(pb.ops, pb.weight);
  std::vector<cplx> T(total);
  parallel_for(total, threads, [&](long idx) {
    Eigen::VectorXd xi(n);
    long r = idx;
    double w = 1;
    for (int k = n - 1; k >= 0; --k) {
      const int j = static_cast<int>(r % N[k]);
      r /= N[k];
      xi(k) = -R[k] + j * h[k];
      w *= h[k] * ((j == 0 || j == N[k] - 1) ? 0.5 : 1.0);
    }
    double ph = 0;
    for (int k = 0; k < n; ++k) ph += xi(k) * centre[k];
    T[idx] = w * cf(xi.data()) * pb.kernel(xi) * pb.multiplier(xi) * std::polar(1.0, -ph);
  });

  // contract one axis at a time: nodes -> grid points
  std::vector<int> dims = N;
  for (int k = 0; k < n; ++k) {
    const int K = grid.axis(k).count;
    Eigen::MatrixXcd E(K, N[k]);
    for (int a = 0; a < K; ++a)
      for (int j = 0; j < N[k]; ++j) E(a, j) = std::polar(1.0, -(-R[k] + j * h[k]) * (grid.axis(k).at(a) - centre[k]));
    long outer = 1, inner = 1;
    for (int i = 0; i < k; ++i) outer *= dims[i];
    for (int i = k + 1; i < n; ++i) inner *= dims[i];
    if (16.0 * outer * K * inner > memory_limit) throw Error(ErrorKind::TooLarge, "quadrature tensor exceeds the memory limit");
    std::vector<cplx> out(outer * K * inner, 0.0);
    parallel_for(outer, threads, [&](long o) {
      for (int a = 0; a < K; ++a)
        for (int j = 0; j < N[k]; ++j) {
          const cplx e = E(a, j);
          const cplx* src = &T[(o * N[k] + j) * inner];
          cplx* dst = &out[(o * K + a) * inner];
          for (long i = 0; i < inner; ++i) dst[i] += e * src[i];
        }
    });
    T.swap(out);
    dims[k] = K;
  }
  BoxResult res;
  res.values.resize(T.size());
  const double norm = std::pow(2.0 * special::kPi, -n);
  double re = 0, im = 0;
  for (size_t i = 0; i < T.size(); ++i) {
    res.values[i] = norm * T[i].real();
    re = std::max(re, std::abs(T[i].real()));
    im = std::max(im, std::abs(T[i].imag()));
  }
  res.imag_residue = re > 0 ? im / re : 0.0;
  return res;
}

inline int smooth_size(long n) {
  for (long m = std::max(8L, n);; ++m) {
    long r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return static_cast<int>(m);
  }
}

struct FftPlan {
  std::vector<int> M, s, i0;
  std::vector<double> hp, dxi, centre;
  double bytes = 0;
};

inline FftPlan plan_fft(const PhaseGrid& grid, const std::vector<double>& R,
                        const std::vector<std::pair<double, double>>& support) {
  const int n = grid.n();
  FftPlan fp;
  double count = 1;
  for (int k = 0; k < n; ++k) {
    const auto& ax = grid.axis(k);
    const double h = ax.step();
    const int s = std::max(1, static_cast<int>(std::ceil(h * R[k] / special::kPi)));
    const double hp = h / s;
    const double L = std::max({support[k].second - ax.min, ax.max - support[k].first, ax.max - ax.min + h});
    const int M = smooth_size(std::max<long>(static_cast<long>(std::ceil(L / hp)) + 1, (ax.count - 1L) * s + 1));
    const int i0 = (ax.count - 1) / 2;
    fp.M.push_back(M);
    fp.s.push_back(s);
    fp.i0.push_back(i0);
    fp.hp.push_back(hp);
    fp.dxi.push_back(2.0 * special::kPi / (M * hp));
    fp.centre.push_back(ax.min + i0 * h);
    count *= (k == n - 1) ? 2.0 * (M / 2 + 1) : M;
  }
  fp.bytes = 8.0 * count;
  return fp;
}

inline BoxResult box_fft(const Problem& pb, const PhaseGrid& grid, const FftPlan& fp, double memory_limit,
                         int threads) {
  const int n = grid.n();
  if (fp.bytes > memory_limit) throw Error(ErrorKind::TooLarge, "FFT buffer exceeds the memory limit");
  const int Mlast = fp.M[n - 1], half = Mlast / 2 + 1, padded = 2 * half;
  long outer = 1;
  for (int k = 0; k < n - 1; ++k) outer *= fp.M[k];
  const long total = outer * padded;
  double* buf = static_cast<double*>(fftw_malloc(sizeof(double) * total));
  if (!buf) throw Error(ErrorKind::TooLarge, "FFT buffer allocation failed");
  auto* cbuf = reinterpret_cast<fftw_complex*>(buf);

  double scale = 1;
  for (int k = 0; k < n; ++k) scale *= fp.dxi[k] / (2.0 * special::kPi);
  CharEvaluator cf(pb.ops, pb.weight);
  auto freq = [&](int k, int j) { return (j <= fp.M[k] / 2 ? j : j - fp.M[k]) * fp.dxi[k]; };
  auto value = [&](const Eigen::VectorXd& xi) {
    double ph = 0;
    for (int k = 0; k < n; ++k) ph += xi(k) * fp.centre[k];
    return scale * cf(xi.data()) * pb.kernel(xi) * pb.multiplier(xi) * std::polar(1.0, -ph);
  };
  parallel_for(outer, threads, [&](long o) {
    Eigen::VectorXd xi(n);
    long r = o;
    for (int k = n - 2; k >= 0; --k) {
      xi(k) = freq(k, static_cast<int>(r % fp.M[k]));
      r /= fp.M[k];
    }
    for (int j = 0; j < half; ++j) {
      xi(n - 1) = j * fp.dxi[n - 1];
      const cplx F = std::conj(value(xi));
      cbuf[o * half + j][0] = F.real();
      cbuf[o * half + j][1] = F.imag();
    }
  });

  // Hermitian defect on the xi_last = 0 plane, which c2r folds onto itself
  double defect = 0, peak = 0;
  {
    Eigen::VectorXd xi(n), mxi(n);
    const long step = std::max(1L, outer / 4096);
    for (long o = 0; o < outer; o += step) {
      long r = o;
      for (int k = n - 2; k >= 0; --k) {
        xi(k) = freq(k, static_cast<int>(r % fp.M[k]));
        r /= fp.M[k];
      }
      xi(n - 1) = 0;
      mxi = -xi;
      const cplx a = value(xi), b = value(mxi);
      defect = std::max(defect, std::abs(a - std::conj(b)));
      peak = std::max(peak, std::abs(a));
    }
  }

  fftw_plan plan;
  {
    static std::mutex plan_mu;  // planner is not thread safe
    std::lock_guard<std::mutex> lock(plan_mu);
    plan = fftw_plan_dft_c2r(n, fp.M.data(), cbuf, buf, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    static std::mutex plan_mu;
    std::lock_guard<std::mutex> lock(plan_mu);
    fftw_destroy_plan(plan);
  }

  BoxResult res;
  res.values.resize(grid.size());
  std::vector<int> mi(n);
  for (long idx = 0; idx < grid.size(); ++idx) {
    grid.index_to_multi(idx, mi.data());
    long off = 0;
    for (int k = 0; k < n; ++k) {
      long p = (static_cast<long>(mi[k] - fp.i0[k]) * fp.s[k]) % fp.M[k];
      if (p < 0) p += fp.M[k];
      off = k == n - 1 ? off * padded + p : off * fp.M[k] + p;
    }
    res.values[idx] = buf[off];
  }
  fftw_free(buf);
  res.imag_residue = peak > 0 ? defect / peak : 0.0;
  return res;
}

inline std::vector<std::pair<double, double>> ranges_of(const std::vector<ComplexMatrix>& ops) {
  std::vector<std::pair<double, double>> out;
  for (const auto& o : ops) {
    const auto es = linalg::eigh(o);
    out.emplace_back(es.values(0), es.values(es.values.size() - 1));
  }
  return out;
}

inline std::vector<std::pair<double, double>> padded_support(const std::vector<ComplexMatrix>& ops,
                                                             const Regularizer& reg) {
  auto sup = ranges_of(ops);
  const double tail = 10.0 * reg.gaussian_blur() + 200.0 * reg.exponential_width() + 0.05;
  for (auto& s : sup) {
    s.first -= tail;
    s.second += tail;
  }
  return sup;
}

struct PointHash {
  size_t operator()(const std::vector<long long>& v) const {
    size_t h = 1469598103934665603ULL;
    for (long long x : v) h = (h ^ static_cast<size_t>(x)) * 1099511628211ULL;
    return h;
  }
};

// evaluation at arbitrary points through the reduced polar engine
inline std::vector<double> polar_at(const std::vector<ComplexMatrix>& ops, const ComplexMatrix& weight,
                                    const Regularizer& reg, const std::vector<Eigen::VectorXd>& points,
                                    const TransformOptions& opt) {
  const int n = static_cast<int>(ops.size());
  const Reduction red = opt.reduce ? reduce(ops, reg) : identity_reduction(ops);
  const int m = red.m(), q = red.q();
  const int threads = thread_count(opt.threads);

  // reduced kernel blocks
  Problem pb = make_problem(red.ops, weight, reg, -1);
  pb.P = reg.P().rows() ? Eigen::MatrixXd(reg.P() * red.V) : Eigen::MatrixXd(0, m);
  pb.Q = reg.Q().rows() ? Eigen::MatrixXd(reg.Q() * red.V) : Eigen::MatrixXd(0, m);
  Problem pm = pb;
  Eigen::VectorXd svec;
  if (opt.multiplier >= 0) {
    if (opt.multiplier >= n) throw Error(ErrorKind::BadIndex, "multiplier axis out of range");
    pm.has_mult = true;
    pm.e = reg.P().rows() ? Eigen::VectorXd(reg.P().col(opt.multiplier)) : Eigen::VectorXd();
    pm.f = reg.Q().rows() ? Eigen::VectorXd(reg.Q().col(opt.multiplier)) : Eigen::VectorXd();
    if (q > 0 && reg.Q().rows()) svec = red.U.transpose() * reg.Q().transpose() * reg.Q().col(opt.multiplier);
  }
  const bool zeta_term = svec.size() > 0 && svec.cwiseAbs().maxCoeff() > 0;

  // deduplicate reduced coordinates
  std::vector<Eigen::VectorXd> xs;
  std::vector<long> slot(points.size());
  std::unordered_map<std::vector<long long>, long, PointHash> seen;
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != n) throw Error(ErrorKind::DimensionMismatch, "point length differs from n");
    const Eigen::VectorXd x = red.V.transpose() * (points[i] - red.tau);
    std::vector<long long> key(m);
    for (int j = 0; j < m; ++j) key[j] = std::llround(x(j) * 1e11);
    auto [it, fresh] = seen.emplace(key, static_cast<long>(xs.size()));
    if (fresh) xs.push_back(x);
    slot[i] = it->second;
  }

  std::vector<double> wr(xs.size()), wm;
  const double trw = weight.trace().real();
  if (m == 0) {
    std::fill(wr.begin(), wr.end(), trw);
  } else {
    double reach = 0;
    for (const auto& x : xs) reach = std::max(reach, x.norm());
    PolarEngine plain(pb, opt.angular_nodes, reach);
    if (opt.multiplier < 0 || zeta_term) parallel_for(static_cast<long>(xs.size()), threads, [&](long i) { wr[i] = plain(xs[i]); });
  }
  if (opt.multiplier >= 0) {
    wm.assign(xs.size(), 0.0);
    if (m > 0) {
      double reach = 0;
      for (const auto& x : xs) reach = std::max(reach, x.norm());
      PolarEngine mult(pm, opt.angular_nodes, reach);
      parallel_for(static_cast<long>(xs.size()), threads, [&](long i) { wm[i] = mult(xs[i]); });
    }
  }

  Eigen::MatrixXd Sinv;
  double gnorm = 1;
  if (q > 0) {
    Sinv = red.S.inverse();
    gnorm = std::pow(4.0 * special::kPi * reg.epsilon(), -0.5 * q) / std::sqrt(red.S.determinant());
  }
  std::vector<double> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    double g = 1;
    Eigen::VectorXd grad;
    if (q > 0) {
      const Eigen::VectorXd y = red.U.transpose() * (points[i] - red.tau);
      g = gnorm * std::exp(-y.dot(Sinv * y) / (4.0 * reg.epsilon()));
      if (zeta_term) grad = -Sinv * y / (2.0 * reg.epsilon()) * g;
    }
    if (opt.multiplier < 0) {
      out[i] = wr[slot[i]] * g;
    } else {
      out[i] = wm[slot[i]] * g;
      if (zeta_term) out[i] += wr[slot[i]] * 2.0 * reg.epsilon() * svec.dot(grad);
    }
  }
  return out;
}

inline void check_cutoffs(const Regularizer& reg, int n, double xi_cutoff, std::vector<double>& R) {
  R.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    R[k] = xi_cutoff > 0 ? xi_cutoff : reg.cutoff(k, 1e-10);
    if (reg.face_max(k, R[k]) > 1e-10 * (1 + 1e-9))
      throw Error(ErrorKind::CutoffTooSmall, "kernel exceeds 1e-10 at the xi cutoff");
  }
}

}  // namespace detail

// W * G on a grid for the Hermitian weight w (rho, or I for W_I)
inline WignerField regularized_wigner(const ComplexMatrix& weight, const OperatorSet& set, const PhaseGrid& grid,
                                      const Regularizer& reg, const TransformOptions& opt) {
  const int n = set.n();
  if (grid.n() != n || reg.n() != n) throw Error(ErrorKind::DimensionMismatch, "grid, kernel and operator set differ in n");
  if (weight.rows() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "weight and operators differ in dimension");
  std::vector<double> R;
  detail::check_cutoffs(reg, n, opt.xi_cutoff, R);
  const auto ops = CharEvaluator::matrices(set);
  const int threads = detail::thread_count(opt.threads);

  TransformMethod method = opt.method;
  std::optional<detail::FftPlan> plan;
  if (method == TransformMethod::AUTO) {
    const detail::Reduction red = opt.reduce ? detail::reduce(ops, reg) : detail::identity_reduction(ops);
    if (red.m() <= 2) {
      method = TransformMethod::POLAR;
    } else {
      plan = detail::plan_fft(grid, R, detail::padded_support(ops, reg));
      const bool gaussian = reg.pure_gaussian() && red.q() == 0;
      if (gaussian && plan->bytes <= opt.memory_limit)
        method = TransformMethod::BOX_FFT;
      else if (gaussian)
        throw Error(ErrorKind::TooLarge, "box_fft needs " + std::to_string(plan->bytes / 1e9) +
                                             " GB; use a coarser grid or raise memory_limit");
      else if (red.m() == 3)
        method = TransformMethod::POLAR;
      else
        method = plan->bytes <= opt.memory_limit ? TransformMethod::BOX_FFT : TransformMethod::BOX_DIRECT;
    }
  }

  WignerField field;
  field.grid = grid;
  field.reg = reg;
  field.method = to_string(method);
  field.cutoff = R;
  if (method == TransformMethod::POLAR) {
    std::vector<Eigen::VectorXd> pts(grid.size());
    for (long i = 0; i < grid.size(); ++i) pts[i] = grid.point(i);
    field.values = detail::polar_at(ops, weight, reg, pts, opt);
  } else {
    const detail::Problem pb = detail::make_problem(ops, weight, reg, opt.multiplier);
    detail::BoxResult br;
    if (method == TransformMethod::BOX_FFT) {
      if (!plan) plan = detail::plan_fft(grid, R, detail::padded_support(ops, reg));
      br = detail::box_fft(pb, grid, *plan, opt.memory_limit, threads);
    } else {
      br = detail::box_direct(pb, grid, R, detail::ranges_of(ops), opt.nodes, opt.memory_limit, threads);
    }
    field.values = std::move(br.values);
    field.imag_residue = br.imag_residue;
  }
  if (field.imag_residue > 1e-8) throw Error(ErrorKind::ImaginaryResidue, "imaginary part does not cancel");
  for (double v : field.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::ImaginaryResidue, "non-finite field value");
  return field;
}

inline WignerField regularized_wigner(const QuantumState& rho, const OperatorSet& set, const PhaseGrid& grid,
                                      const Regularizer& reg, const TransformOptions& opt) {
  if (rho.dim() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "state and operators differ in dimension");
  return regularized_wigner(rho.matrix(), set, grid, reg, opt);
}

inline WignerField regularized_wigner(const QuantumState& rho, const OperatorSet& set, const PhaseGrid& grid,
                                      const Regularizer& reg, double xi_cutoff) {
  TransformOptions opt;
  opt.xi_cutoff = xi_cutoff;
  return regularized_wigner(rho, set, grid, reg, opt);
}

inline WignerField wigner_identity(const OperatorSet& set, const PhaseGrid& grid, const Regularizer& reg,
                                   TransformOptions opt = {}) {
  opt.multiplier = -1;
  return regularized_wigner(ComplexMatrix::Identity(set.dim(), set.dim()), set, grid, reg, opt);
}

// inverse transform of W_I-hat * (i dG/dxi_k): the boundary term left by integrating by parts
inline WignerField ibp_correction(const OperatorSet& set, const PhaseGrid& grid, const Regularizer& reg, int k,
                                  TransformOptions opt = {}) {
  opt.multiplier = k;
  return regularized_wigner(ComplexMatrix::Identity(set.dim(), set.dim()), set, grid, reg, opt);
}

// Marginal of W over the exact null directions, as a field over x = V^T (a - tau).
// W(a) = W_red(x) g(y) with int g dy = 1, so volumes of W and W_red agree.
struct ReducedField {
  WignerField field;
  Eigen::MatrixXd V, U;
  Eigen::VectorXd tau;

  Eigen::VectorXd embed(const Eigen::VectorXd& x) const { return tau + V * x; }
};

// axes cover the reduced numerical range widened by pad times its length;
// pad < 0 widens by max(0.25, 5 sqrt(eps)) instead
inline ReducedField reduced_wigner(const ComplexMatrix& weight, const OperatorSet& set, const Regularizer& reg,
                                   int count, const TransformOptions& opt = {}, double pad = -1) {
  const int n = set.n();
  if (reg.n() != n) throw Error(ErrorKind::DimensionMismatch, "kernel and operator set differ in n");
  if (weight.rows() != set.dim()) throw Error(ErrorKind::DimensionMismatch, "weight and operators differ in dimension");
  const auto ops = CharEvaluator::matrices(set);
  const detail::Reduction red = detail::reduce(ops, reg);
  const int m = red.m();
  if (m < 1) throw Error(ErrorKind::ConfigError, "operator set has no non-scalar direction");
  if (m > detail::kMaxPolarDim) throw Error(ErrorKind::TooLarge, "reduced dimension exceeds 3");

  std::vector<GridAxis> axes;
  for (auto [lo, hi] : detail::ranges_of(red.ops)) {
    const double w = pad < 0 ? std::max(0.25, 5.0 * std::sqrt(reg.epsilon())) : pad * (hi - lo);
    axes.push_back({lo - w, hi + w, count});
  }
  ReducedField out;
  out.V = red.V;
  out.U = red.U;
  out.tau = red.tau;
  out.field.grid = PhaseGrid(axes);
  out.field.reg = reg;
  out.field.method = "polar_reduced";

  detail::Problem pb = detail::make_problem(red.ops, weight, reg, -1);
  pb.P = reg.P().rows() ? Eigen::MatrixXd(reg.P() * red.V) : Eigen::MatrixXd(0, m);
  pb.Q = reg.Q().rows() ? Eigen::MatrixXd(reg.Q() * red.V) : Eigen::MatrixXd(0, m);
  const PhaseGrid& g = out.field.grid;
  double reach = 0;
  for (const auto& ax : axes) reach += std::max(ax.min * ax.min, ax.max * ax.max);
  const detail::PolarEngine engine(pb, opt.angular_nodes, std::sqrt(reach));
  out.field.values.assign(g.size(), 0.0);
  detail::parallel_for(g.size(), detail::thread_count(opt.threads),
                       [&](long i) { out.field.values[i] = engine(g.point(i)); });
  for (double v : out.field.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::ImaginaryResidue, "non-finite field value");
  return out;
}

// W * G at scattered points (polar engine)
inline std::vector<double> regularized_wigner_at(const ComplexMatrix& weight, const OperatorSet& set,
                                                 const Regularizer& reg, const std::vector<Eigen::VectorXd>& points,
                                                 const TransformOptions& opt = {}) {
  if (reg.n() != set.n()) throw Error(ErrorKind::DimensionMismatch, "kernel and operator set differ in n");
  return detail::polar_at(CharEvaluator::matrices(set), weight, reg, points, opt);
}

struct MarginalReport {
  double first = 0, second = 0, cosine = 0;
  bool second_checked = false;
  double max() const { return std::max({first, second, cosine}); }
};

inline MarginalReport marginal_report(const QuantumState& rho, const OperatorSet& set, const RealVector& dir,
                                      const WignerField& field) {
  const int n = set.n();
  if (dir.size() != n || field.grid.n() != n) throw Error(ErrorKind::DimensionMismatch, "direction length differs from n");
  const double margin = 3.0 * std::sqrt(field.reg.epsilon());
  const auto ranges = set.eigen_ranges();
  for (int k = 0; k < n; ++k)
    if (field.grid.axis(k).min > ranges[k].first - margin || field.grid.axis(k).max < ranges[k].second + margin)
      throw Error(ErrorKind::InsufficientSupport, "grid does not cover the numerical range with margin");

  double s1 = 0, s2 = 0, sc = 0;
  for (long i = 0; i < field.grid.size(); ++i) {
    const double t = dir.dot(field.grid.point(i));
    const double w = field.values[i];
    s1 += w * t;
    s2 += w * t * t;
    sc += w * std::cos(t);
  }
  const double dv = field.grid.cell_volume();
  s1 *= dv;
  s2 *= dv;
  sc *= dv;

  ComplexMatrix h = ComplexMatrix::Zero(set.dim(), set.dim());
  for (int k = 0; k < n; ++k) h += dir(k) * set.op(k).matrix();
  const EigenSystem es = linalg::eigh(h);
  double r1 = 0, r2 = 0, rc = 0;
  for (int j = 0; j < set.dim(); ++j) {
    const double p = (es.vectors.col(j).adjoint() * rho.matrix() * es.vectors.col(j))(0, 0).real();
    const double mu = es.values(j);
    r1 += p * mu;
    r2 += p * mu * mu;
    rc += p * std::cos(mu);
  }
  rc *= field.reg(dir);

  MarginalReport rep;
  rep.first = std::abs(s1 - r1);
  rep.cosine = std::abs(sc - rc);
  if (field.reg.pure_gaussian()) {
    r2 += 2.0 * field.reg.epsilon() * (field.reg.Q() * dir).squaredNorm();
    rep.second = std::abs(s2 - r2);
    rep.second_checked = true;
  }
  return rep;
}

inline double marginal_check(const QuantumState& rho, const OperatorSet& set, const RealVector& dir,
                             const WignerField& field) {
  return marginal_report(rho, set, dir, field).max();
}

}  // namespace wigvol
