#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "charfunc.hpp"
#include "closedform.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "negativity.hpp"
#include "operators.hpp"
#include "regularizer.hpp"
#include "transform.hpp"

namespace wigvol {

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0;
  double tol = 0;
  std::string detail;
};

namespace verify_detail {

inline std::vector<RealVector> random_points(const OperatorSet& set, double pad, int count, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::vector<RealVector> pts;
  const auto ranges = set.eigen_ranges();
  for (int i = 0; i < count; ++i) {
    RealVector a(set.n());
    for (int k = 0; k < set.n(); ++k) {
      std::uniform_real_distribution<double> u(ranges[k].first - pad, ranges[k].second + pad);
      a(k) = u(gen);
    }
    pts.push_back(a);
  }
  return pts;
}

// 90th percentile of |num - cf| / max(|cf|, 1e-3 max|cf|)
inline double p90(const std::vector<double>& num, const std::vector<double>& cf) {
  double mx = 0;
  for (double v : cf) mx = std::max(mx, std::abs(v));
  std::vector<double> rel;
  for (size_t i = 0; i < num.size(); ++i) rel.push_back(std::abs(num[i] - cf[i]) / std::max(std::abs(cf[i]), 1e-3 * mx));
  if (rel.empty()) return 0.0;
  std::sort(rel.begin(), rel.end());
  return rel[rel.size() * 9 / 10];
}

inline QuantumState test_state(const OperatorSet& set) {
  RealVector r(3);
  const bool planar = set.n() == 2 || (set.affine() && !set.affine()->kernel.empty());
  r << 0.3, -0.2, planar ? 0.0 : 0.4;
  return bloch_to_state(r, set.dim());
}

inline double oracle_points(const OperatorSet& set, const QuantumState& rho, double eps, int count, unsigned seed) {
  const ClosedFormCase c = case_for(set);
  const double w = default_mask(eps);
  std::vector<RealVector> pts;
  for (const auto& a : random_points(set, 0.2, count, seed))
    if (outside_singular_band(c, a, w)) pts.push_back(a);
  const auto num = regularized_wigner_at(rho.matrix(), set, family_regularizer(set, eps), pts);
  std::vector<double> cf;
  for (const auto& a : pts) cf.push_back(wigner_closed(c, rho, a, eps));
  return p90(num, cf);
}

inline double oracle_field(const OperatorSet& set, double eps, int count) {
  const ClosedFormCase c = case_for(set);
  const QuantumState rho = QuantumState::maximally_mixed(set.dim());
  const PhaseGrid g = PhaseGrid::default_for(set, eps, count);
  const WignerField f = regularized_wigner(rho, set, g, family_regularizer(set, eps), TransformOptions{});
  std::vector<double> cf(g.size());
  for (long i = 0; i < g.size(); ++i) cf[i] = wigner_closed(c, rho, g.point(i), eps);
  return p90(f.values, cf);
}

// |normalized| / baseline against the closed ratio
inline double ratio_error(const OperatorSet& set, double eps, int count, const TransformOptions& opt = {}) {
  const ClosedFormCase c = case_for(set);
  const Regularizer reg = family_regularizer(set, eps), ref = reference_regularizer(set, eps);
  const QuantumState rho = QuantumState::maximally_mixed(set.dim());
  const double w = default_mask(eps);
  NegativityReport rep;
  if (set.affine() && !set.affine()->kernel.empty()) {
    const ReducedField rf = reduced_wigner(rho.matrix(), set, reg, count, opt, 0.01);
    std::vector<char> keep(rf.field.grid.size());
    for (long i = 0; i < rf.field.grid.size(); ++i) keep[i] = outside_singular_band(c, rf.embed(rf.field.grid.point(i)), w);
    rep = normalized_negativity(rf.field, reg, ref, &keep);
  } else {
    const PhaseGrid g = PhaseGrid::fitted(set, c.m == 2 ? 0.01 : 0.06, count);
    const WignerField f = regularized_wigner(rho, set, g, reg, opt);
    const auto keep = singular_mask(c, g, w);
    rep = normalized_negativity(f, reg, ref, &keep);
  }
  const ClosedNegativity cn = negativity_closed(c, eps);
  return std::abs(std::abs(rep.normalized) / cn.baseline / cn.ratio - 1.0);
}

inline CheckResult run_check(const std::string& name, double tol, const std::function<double()>& f,
                             const std::string& detail = "") {
  CheckResult r{name, false, 0, tol, detail};
  try {
    r.value = f();
    r.pass = std::isfinite(r.value) && r.value <= tol;
  } catch (const std::exception& e) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.detail = e.what();
  }
  return r;
}

}  // namespace verify_detail

inline std::vector<CheckResult> run_verify(bool full, const std::function<void(const CheckResult&)>& report = nullptr) {
  using namespace verify_detail;
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (report) report(r);
    out.push_back(std::move(r));
  };

  add(run_check("realness", 1e-8, [] {
    const OperatorSet set = mub_pauli_set(2);
    const PhaseGrid g = PhaseGrid::default_for(set, 0.05, 33);
    TransformOptions opt;
    opt.method = TransformMethod::BOX_DIRECT;
    return regularized_wigner(test_state(set), set, g, Regularizer::gauss_iso(2, 0.05), opt).imag_residue;
  }, "max|Im| / max|Re|, MUB n=2, box_direct"));

  add(run_check("support_decay", 1e-6, [] {
    const OperatorSet set = mub_pauli_set(2);
    const double eps = 1e-2, d = 7.0 * std::sqrt(2.0 * eps);
    std::vector<RealVector> inner, outer;
    for (int i = 0; i < 64; ++i) {
      const double t = 2.0 * special::kPi * i / 64;
      RealVector a(2), b(2);
      a << 0.9 * std::cos(t), 0.9 * std::sin(t);
      b << (1.0 + d) * (std::abs(std::cos(t)) > std::abs(std::sin(t)) ? (std::cos(t) > 0 ? 1 : -1) : std::cos(t)),
          (1.0 + d) * (std::abs(std::cos(t)) > std::abs(std::sin(t)) ? std::sin(t) : (std::sin(t) > 0 ? 1 : -1));
      inner.push_back(a);
      outer.push_back(b);
    }
    const auto reg = Regularizer::gauss_iso(2, eps);
    const auto rho = test_state(set);
    double mi = 0, mo = 0;
    for (double v : regularized_wigner_at(rho.matrix(), set, reg, inner)) mi = std::max(mi, std::abs(v));
    for (double v : regularized_wigner_at(rho.matrix(), set, reg, outer)) mo = std::max(mo, std::abs(v));
    return mo / mi;
  }, "max|W| outside range + 7 sigma over max|W| inside"));

  add(run_check("commuting_positivity", 1e-6, [] {
    const ComplexMatrix z = pauli(3).matrix();
    const OperatorSet set = custom_set({HermitianOperator(z), HermitianOperator(0.5 * (ComplexMatrix::Identity(2, 2) + z))});
    RealVector r(3);
    r << 0.2, 0.1, 0.5;
    const PhaseGrid g = PhaseGrid::default_for(set, 1e-2, 65);
    const WignerField f = regularized_wigner(bloch_to_state(r, 2), set, g, Regularizer::gauss_iso(2, 1e-2), TransformOptions{});
    return std::max(0.0, -f.min_value()) / f.max_abs();
  }, "-min W / max|W| for {sigma_z, (I+sigma_z)/2}"));

  add(run_check("factorization", 1e-6, [] {
    const OperatorSet set = noisy_pauli_set({0.2, 0.3});
    const QuantumState rho = test_state(set);
    const double eps = 1e-3;
    const Regularizer reg = family_regularizer(set, eps);
    const auto pts = random_points(set, 0.1, 60, 7);
    const auto wr = regularized_wigner_at(rho.matrix(), set, reg, pts);
    const ComplexMatrix I = ComplexMatrix::Identity(2, 2);
    const auto wi = regularized_wigner_at(I, set, reg, pts);
    const SpanDecomposition sd = span_decomposition(rho.matrix(), set);
    std::vector<std::vector<double>> ck;
    for (int k = 0; k < set.n(); ++k) {
      TransformOptions opt;
      opt.multiplier = k;
      ck.push_back(regularized_wigner_at(I, set, reg, pts, opt));
    }
    double err = 0, mx = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
      double v = (sd.w0 + sd.w.dot(pts[i])) * wi[i];
      for (int k = 0; k < set.n(); ++k) v += sd.w(k) * ck[k][i];
      err = std::max(err, std::abs(v - wr[i]));
      mx = std::max(mx, std::abs(wr[i]));
    }
    return err / mx;
  }, "W_rho vs c(a) W_I + sum_k w_k C_k, noisy Pauli n=2"));

  const std::vector<std::pair<std::string, OperatorSet>> n2 = {
      {"mub2", mub_pauli_set(2)},
      {"proj2", noisy_projector_set({{1, 1}, {2, -1}}, 0.3)},
      {"noisy_pauli2", noisy_pauli_set({0.2, 0.4})},
      {"symm2", noisy_pauli_set({0.3, 0.3}, true)},
      {"pair", arb_qubit_pair(0.6)},
      {"gellmann2_N3", gellmann_set(3, 2)},
      {"noisy_gellmann2_N3", noisy_gellmann_set(3, {0.2, 0.3})}};
  for (const auto& [tag, set] : n2)
    add(run_check("oracle_equivalence_" + tag, 0.02, [&, s = set] { return oracle_points(s, test_state(s), 1e-3, 150, 11); },
                  "masked p90 relative error vs closed form, eps=1e-3"));

  add(run_check("ratio_law_proj2", 0.05, [] { return ratio_error(noisy_projector_set({{1, 1}, {2, 1}}, 0.5), 1e-4, 129); },
                "lambda=0.5, eps=1e-4"));

  if (!full) return out;

  const std::vector<std::pair<std::string, OperatorSet>> n3 = {
      {"mub3", mub_pauli_set(3)},
      {"proj3", noisy_projector_set({{1, 1}, {2, 1}, {3, -1}}, 0.3)},
      {"noisy_pauli3", noisy_pauli_set({0.2, 0.4, 0.1})},
      {"symm3", noisy_pauli_set({0.3, 0.3, 0.3}, true)},
      {"triple", arb_qubit_triple(1.0, 0.3, 1.2, 1.5)},
      {"gellmann3_N3", gellmann_set(3, 3)},
      {"noisy_gellmann3_N3", noisy_gellmann_set(3, {0.2, 0.3, 0.1})}};
  for (const auto& [tag, set] : n3)
    add(run_check("oracle_equivalence_" + tag, 0.02, [&, s = set] { return oracle_field(s, 1e-2, 49); },
                  "p90 relative error vs closed form, rho=I/d, eps=1e-2"));
  const std::vector<std::pair<std::string, OperatorSet>> mixed = {
      {"proj_mixed3", noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, 0.3)},
      {"proj4", noisy_projector_set({{1, 1}, {1, -1}, {2, 1}, {2, -1}}, 0.3)}};
  for (const auto& [tag, set] : mixed)
    add(run_check("oracle_equivalence_" + tag, 0.02, [&, s = set] { return oracle_points(s, test_state(s), 1e-3, 150, 13); },
                  "masked p90 relative error vs closed form, eps=1e-3"));

  struct RatioCase {
    std::string tag;
    std::function<OperatorSet(double)> make;
    double eps;
    int count;
  };
  const std::vector<RatioCase> ratios = {
      {"proj2", [](double l) { return noisy_projector_set({{1, 1}, {2, 1}}, l); }, 1e-5, 257},
      {"proj3", [](double l) { return noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, l); }, 1e-4, 129},
      {"proj_mixed3", [](double l) { return noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, l); }, 1e-4, 257},
      {"proj4", [](double l) { return noisy_projector_set({{1, 1}, {1, -1}, {2, 1}, {2, -1}}, l); }, 1e-4, 257},
      {"noisy_pauli2", [](double l) { return noisy_pauli_set({l, 0.5 * l}); }, 1e-5, 257},
      {"noisy_pauli3", [](double l) { return noisy_pauli_set({l, 0.5 * l, 0.25 * l}); }, 1e-4, 129},
      {"pair", [](double l) { return arb_qubit_pair(1.0 - 0.5 * l); }, 1e-5, 257}};
  for (const auto& rc : ratios)
    for (double l : {0.0, 0.5})
      add(run_check("ratio_law_" + rc.tag + "_l" + format_double(l).substr(0, 3), 0.05,
                    [&] { return ratio_error(rc.make(l), rc.eps, rc.count); }, "numeric / closed ratio - 1"));

  auto erfc_check = [](const OperatorSet& set, double eps, double formula) {
    const PhaseGrid g = PhaseGrid::fitted(set, 0.06, 129);
    const WignerField f = regularized_wigner(QuantumState::maximally_mixed(2), set, g, family_regularizer(set, eps), TransformOptions{});
    const NegativityReport rep = normalized_negativity(f, f.reg, reference_regularizer(set, eps));
    return std::abs(rep.normalized / formula - 1.0);
  };
  add(run_check("erfc_projector", 0.05, [&] {
    return erfc_check(noisy_projector_set({{1, 1}, {2, 1}, {3, 1}}, 0.5), 1e-3, projector_negativity_erfc(0.5, 1e-3));
  }, "lambda=0.5, eps=1e-3"));
  add(run_check("erfc_equal_noise", 0.05, [&] {
    return erfc_check(noisy_pauli_set({0.5, 0.5, 0.5}, true), 1e-3, symmetric_negativity_erfc(0.5, 1e-3));
  }, "lambda=0.5, eps=1e-3"));
  return out;
}

}  // namespace wigvol
