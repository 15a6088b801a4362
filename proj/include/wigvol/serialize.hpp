#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "linalg.hpp"
#include "operators.hpp"

namespace wigvol {

using Json = nlohmann::ordered_json;

// Operator-set document:
//   {"family": "NOISY_PROJ",
//    "params": {"lambda": .., "lambdas": [..], "beta": .., "theta1": .., "phi1": .., "theta2": .., "phi2": ..,
//               "signs": [[axis, sign], ..], "N": .., "n": ..},
//    "dim": d,
//    "matrices": [[[re, im], ...d*d row-major...], ...]}   (CUSTOM only)

namespace serialize_detail {

template <class T>
T get(const Json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::ConfigError, std::string("field '") + key + "' has the wrong type");
  }
}

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json a = Json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) a.push_back({m(r, c).real(), m(r, c).imag()});
  return a;
}

inline ComplexMatrix matrix_from_json(const Json& a, int d) {
  if (!a.is_array() || static_cast<int>(a.size()) != d * d)
    throw Error(ErrorKind::ConfigError, "matrix needs " + std::to_string(d * d) + " [re, im] entries");
  ComplexMatrix m(d, d);
  for (int i = 0; i < d * d; ++i) {
    const Json& e = a[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw Error(ErrorKind::ConfigError, "matrix entries must be [re, im] pairs");
    m(i / d, i % d) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

}  // namespace serialize_detail

inline Json params_to_json(const FamilyParams& p) {
  Json j;
  j["lambda"] = p.lambda;
  j["lambdas"] = p.lambdas;
  j["beta"] = p.beta;
  j["theta1"] = p.theta1;
  j["phi1"] = p.phi1;
  j["theta2"] = p.theta2;
  j["phi2"] = p.phi2;
  Json s = Json::array();
  for (const auto& a : p.signs) s.push_back({a.axis, a.sign});
  j["signs"] = s;
  j["N"] = p.N;
  j["n"] = p.n;
  return j;
}

inline FamilyParams params_from_json(const Json& j) {
  using serialize_detail::get;
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "params must be an object");
  FamilyParams p;
  p.lambda = get(j, "lambda", p.lambda);
  p.lambdas = get(j, "lambdas", p.lambdas);
  p.beta = get(j, "beta", p.beta);
  p.theta1 = get(j, "theta1", p.theta1);
  p.phi1 = get(j, "phi1", p.phi1);
  p.theta2 = get(j, "theta2", p.theta2);
  p.phi2 = get(j, "phi2", p.phi2);
  p.N = get(j, "N", p.N);
  p.n = get(j, "n", p.n);
  if (j.contains("signs")) {
    if (!j["signs"].is_array()) throw Error(ErrorKind::ConfigError, "signs must be a list of [axis, sign]");
    for (const auto& e : j["signs"]) {
      if (!e.is_array() || e.size() != 2) throw Error(ErrorKind::ConfigError, "signs must be a list of [axis, sign]");
      p.signs.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  }
  return p;
}

// number of operators implied by the params of a built-in family
inline int family_size(Family f, const FamilyParams& p) {
  switch (f) {
    case Family::NOISY_PROJ:
    case Family::NOISY_PROJ_MIXED: return static_cast<int>(p.signs.size());
    case Family::ARB_QUBIT_TRIPLE: return 3;
    case Family::ARB_QUBIT_PAIR: return 2;
    default: return p.n > 0 ? p.n : static_cast<int>(p.lambdas.size());
  }
}

// builds a built-in family from its params
inline OperatorSet make_set(Family f, const FamilyParams& p) {
  const int n = family_size(f, p);
  switch (f) {
    case Family::MUB_PAULI: return mub_pauli_set(n);
    case Family::NOISY_PROJ:
    case Family::NOISY_PROJ_MIXED: {
      OperatorSet s = noisy_projector_set(p.signs, p.lambda);
      if (s.family() != f)
        throw Error(ErrorKind::ConfigError, std::string("signs describe a ") + to_string(s.family()) + " set, not " + to_string(f));
      return s;
    }
    case Family::NOISY_PAULI: return noisy_pauli_set(p.lambdas);
    case Family::NOISY_PAULI_SYMM: return noisy_pauli_set(p.lambdas, true);
    case Family::ARB_QUBIT_TRIPLE: return arb_qubit_triple(p.theta1, p.phi1, p.theta2, p.phi2);
    case Family::ARB_QUBIT_PAIR: return arb_qubit_pair(p.beta);
    case Family::GELLMANN: return gellmann_set(p.N, n);
    case Family::NOISY_GELLMANN: return noisy_gellmann_set(p.N, p.lambdas);
    case Family::CUSTOM: break;
  }
  throw Error(ErrorKind::ConfigError, "CUSTOM sets need explicit matrices");
}

inline Json operator_set_to_json(const OperatorSet& set) {
  Json j;
  j["family"] = to_string(set.family());
  j["params"] = params_to_json(set.params());
  j["dim"] = set.dim();
  if (set.family() == Family::CUSTOM) {
    Json ms = Json::array();
    for (const auto& op : set.ops()) ms.push_back(serialize_detail::matrix_to_json(op.matrix()));
    j["matrices"] = ms;
  }
  return j;
}

inline OperatorSet operator_set_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("family")) throw Error(ErrorKind::ConfigError, "operator set needs a 'family' field");
  const Family f = family_from_string(j["family"].get<std::string>());
  if (f == Family::CUSTOM) {
    const int d = serialize_detail::get(j, "dim", 0);
    if (d < 1) throw Error(ErrorKind::ConfigError, "CUSTOM set needs 'dim'");
    if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty())
      throw Error(ErrorKind::ConfigError, "CUSTOM set needs a non-empty 'matrices' list");
    std::vector<HermitianOperator> ops;
    for (const auto& m : j["matrices"]) ops.emplace_back(serialize_detail::matrix_from_json(m, d));
    return custom_set(ops);
  }
  const FamilyParams p = params_from_json(j.contains("params") ? j["params"] : Json::object());
  return make_set(f, p);
}

}  // namespace wigvol
