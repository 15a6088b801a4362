#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "closedform.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "negativity.hpp"
#include "operators.hpp"
#include "regularizer.hpp"
#include "serialize.hpp"
#include "transform.hpp"

namespace wigvol {

// ---- configuration ----

struct GridConfig {
  std::string mode = "default";  // default | fitted | axes
  int count = 0;                 // 0: per-n default
  double pad = 0.01;             // fitted: fraction of each range
  std::vector<GridAxis> axes;
};

struct RegularizerConfig {
  std::string kernel = "family";     // family | GAUSS_ISO | EXP_ISO
  std::string reference = "family";  // family | GAUSS_ISO | EXP_ISO
  double epsilon = 1e-3;
};

struct MaskConfig {
  bool enabled = true;
  double width = -1;  // < 0: 3 sqrt(eps)
};

struct SweepConfig {
  std::string variable;  // lambda | epsilon | dimension | beta
  std::vector<double> values;
  int index = -1;        // lambda sweeps: operator index, -1 for all
};

struct RunConfig {
  std::vector<Json> operators;  // one operator-set document per curve
  Json state = "mixed";
  GridConfig grid;
  RegularizerConfig regularizer;
  MaskConfig mask;
  TransformOptions transform;
  bool marginal = true;  // integrate sets with scalar directions over the exact marginal
  SweepConfig sweep;
  std::string out;
  int threads = 0;
};

namespace experiments_detail {

[[noreturn]] inline void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ConfigError, field + ": " + what);
}

template <class T>
T read(const Json& j, const std::string& section, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(section + "." + key, "has the wrong type");
  }
}

inline void check_keys(const Json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(section, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      bad(section + "." + it.key(), "unknown field");
}

inline std::string param_field(ErrorKind k) {
  switch (k) {
    case ErrorKind::BadNoise: return "operators.params.lambda";
    case ErrorKind::BadBeta: return "operators.params.beta";
    case ErrorKind::BadDim: return "operators.params.N";
    case ErrorKind::BadIndex: return "operators.params";
    case ErrorKind::DegenerateTriple: return "operators.params.theta/phi";
    default: return "operators";
  }
}

}  // namespace experiments_detail

// kinds that exit with code 2
inline bool is_config_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::BadNoise:
    case ErrorKind::BadBeta:
    case ErrorKind::BadDim:
    case ErrorKind::BadIndex:
    case ErrorKind::DegenerateTriple:
    case ErrorKind::NotAState:
    case ErrorKind::NonHermitianInput:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::UnsupportedState:
    case ErrorKind::UnknownCase:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::NoAffineMap:
      return true;
    default:
      return false;
  }
}

inline RunConfig parse_config(const Json& doc) {
  using experiments_detail::bad;
  using experiments_detail::read;
  RunConfig c;
  experiments_detail::check_keys(doc, "config",
                                 {"operators", "state", "grid", "regularizer", "mask", "transform", "sweep", "out", "threads"});
  if (doc.contains("operators")) {
    const Json& ops = doc["operators"];
    if (ops.is_array()) {
      if (ops.empty()) bad("operators", "list is empty");
      for (const auto& o : ops) c.operators.push_back(o);
    } else {
      c.operators.push_back(ops);
    }
  } else {
    c.operators.push_back(Json{{"family", "MUB_PAULI"}, {"params", {{"n", 2}}}});
  }
  if (doc.contains("state")) c.state = doc["state"];
  if (doc.contains("grid")) {
    const Json& g = doc["grid"];
    experiments_detail::check_keys(g, "grid", {"mode", "count", "pad", "axes"});
    c.grid.mode = read(g, "grid", "mode", c.grid.mode);
    c.grid.count = read(g, "grid", "count", c.grid.count);
    c.grid.pad = read(g, "grid", "pad", c.grid.pad);
    if (g.contains("axes")) {
      c.grid.mode = "axes";
      for (const auto& a : g["axes"]) {
        if (!a.is_array() || a.size() != 3) bad("grid.axes", "each axis is [min, max, count]");
        c.grid.axes.push_back({a[0].get<double>(), a[1].get<double>(), a[2].get<int>()});
      }
    }
    if (c.grid.mode != "default" && c.grid.mode != "fitted" && c.grid.mode != "axes")
      bad("grid.mode", "must be default, fitted or axes");
    if (c.grid.count != 0 && c.grid.count < 8) bad("grid.count", "must be at least 8");
    if (!(c.grid.pad >= 0)) bad("grid.pad", "must be >= 0");
  }
  if (doc.contains("regularizer")) {
    const Json& r = doc["regularizer"];
    experiments_detail::check_keys(r, "regularizer", {"kernel", "reference", "epsilon"});
    c.regularizer.kernel = read(r, "regularizer", "kernel", c.regularizer.kernel);
    c.regularizer.reference = read(r, "regularizer", "reference", c.regularizer.reference);
    c.regularizer.epsilon = read(r, "regularizer", "epsilon", c.regularizer.epsilon);
  }
  for (const auto* k : {&c.regularizer.kernel, &c.regularizer.reference})
    if (*k != "family" && *k != "GAUSS_ISO" && *k != "EXP_ISO")
      bad(k == &c.regularizer.kernel ? "regularizer.kernel" : "regularizer.reference", "must be family, GAUSS_ISO or EXP_ISO");
  if (!(c.regularizer.epsilon > 0)) bad("regularizer.epsilon", "must be > 0");
  if (doc.contains("mask")) {
    const Json& m = doc["mask"];
    experiments_detail::check_keys(m, "mask", {"enabled", "width"});
    c.mask.enabled = read(m, "mask", "enabled", c.mask.enabled);
    c.mask.width = read(m, "mask", "width", c.mask.width);
  }
  if (doc.contains("transform")) {
    const Json& t = doc["transform"];
    experiments_detail::check_keys(t, "transform", {"method", "xi_cutoff", "nodes", "angular_nodes", "reduce", "marginal", "memory_limit"});
    try {
      c.transform.method = transform_method_from_string(read(t, "transform", "method", std::string("auto")));
    } catch (const Error& e) {
      bad("transform.method", e.what());
    }
    c.transform.xi_cutoff = read(t, "transform", "xi_cutoff", 0.0);
    c.transform.nodes = read(t, "transform", "nodes", 0);
    c.transform.angular_nodes = read(t, "transform", "angular_nodes", 0);
    c.transform.reduce = read(t, "transform", "reduce", true);
    c.transform.memory_limit = read(t, "transform", "memory_limit", c.transform.memory_limit);
    c.marginal = read(t, "transform", "marginal", true);
  }
  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    experiments_detail::check_keys(s, "sweep", {"variable", "values", "index"});
    c.sweep.variable = read(s, "sweep", "variable", std::string());
    c.sweep.values = read(s, "sweep", "values", std::vector<double>{});
    c.sweep.index = read(s, "sweep", "index", -1);
  }
  c.out = read(doc, "config", "out", std::string());
  c.threads = read(doc, "config", "threads", 0);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

inline void check_sweep(const SweepConfig& s) {
  using experiments_detail::bad;
  if (s.variable != "lambda" && s.variable != "epsilon" && s.variable != "dimension" && s.variable != "beta")
    bad("sweep.variable", "must be lambda, epsilon, dimension or beta");
  if (s.values.empty()) bad("sweep.values", "list is empty");
  for (double v : s.values) {
    if ((s.variable == "lambda") && !(v >= 0 && v <= 1)) bad("sweep.values", "lambda must lie in [0,1]");
    if (s.variable == "epsilon" && !(v > 0)) bad("sweep.values", "epsilon must be > 0");
    if (s.variable == "dimension" && !(v >= 2 && v == std::floor(v))) bad("sweep.values", "dimension must be an integer >= 2");
    if (s.variable == "beta" && !(v > 0 && v <= 1)) bad("sweep.values", "beta must lie in (0,1]");
  }
}

// operator-set document with one swept value applied
inline Json apply_value(Json doc, const std::string& variable, double v, int index) {
  using experiments_detail::bad;
  if (variable.empty() || variable == "epsilon") return doc;
  const Family f = family_from_string(doc.value("family", std::string("CUSTOM")));
  Json& p = doc["params"];
  if (!p.is_object()) p = Json::object();
  if (variable == "lambda") {
    if (f == Family::NOISY_PROJ || f == Family::NOISY_PROJ_MIXED) {
      p["lambda"] = v;
    } else if (f == Family::NOISY_PAULI || f == Family::NOISY_PAULI_SYMM || f == Family::NOISY_GELLMANN) {
      if (!p.contains("lambdas") || !p["lambdas"].is_array() || p["lambdas"].empty())
        bad("operators.params.lambdas", "a lambda sweep needs the lambdas list");
      if (index >= static_cast<int>(p["lambdas"].size())) bad("sweep.index", "out of range");
      for (size_t k = 0; k < p["lambdas"].size(); ++k)
        if (index < 0 || static_cast<int>(k) == index) p["lambdas"][k] = v;
    } else {
      bad("sweep.variable", std::string(to_string(f)) + " has no noise parameter");
    }
  } else if (variable == "beta") {
    if (f != Family::ARB_QUBIT_PAIR) bad("sweep.variable", "beta sweeps need ARB_QUBIT_PAIR");
    p["beta"] = v;
  } else if (variable == "dimension") {
    if (f != Family::GELLMANN && f != Family::NOISY_GELLMANN) bad("sweep.variable", "dimension sweeps need a Gell-Mann family");
    p["N"] = static_cast<int>(v);
  }
  return doc;
}

inline OperatorSet build_set(const Json& doc) {
  try {
    return operator_set_from_json(doc);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, experiments_detail::param_field(e.kind()) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("operators: ") + e.what());
  }
}

inline QuantumState build_state(const Json& s, const OperatorSet& set) {
  const int d = set.dim();
  try {
    if (s.is_string()) {
      if (s.get<std::string>() != "mixed") experiments_detail::bad("state", "must be \"mixed\" or an object");
      return QuantumState::maximally_mixed(d);
    }
    experiments_detail::check_keys(s, "state", {"bloch", "matrix"});
    if (s.contains("bloch")) {
      const auto v = s["bloch"].get<std::vector<double>>();
      return bloch_to_state(Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size())), d);
    }
    if (s.contains("matrix")) return QuantumState(serialize_detail::matrix_from_json(s["matrix"], d));
  } catch (const nlohmann::json::exception& e) {
    experiments_detail::bad("state", e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    experiments_detail::bad("state", e.what());
  }
  experiments_detail::bad("state", "needs bloch or matrix");
}

inline Regularizer pick_kernel(const std::string& name, const OperatorSet& set, double eps, bool reference) {
  if (name == "GAUSS_ISO") return Regularizer::gauss_iso(set.n(), eps);
  if (name == "EXP_ISO") return Regularizer::exp_iso(set.n(), eps);
  if (set.family() == Family::CUSTOM) return Regularizer::gauss_iso(set.n(), eps);
  return reference ? reference_regularizer(set, eps) : family_regularizer(set, eps);
}

inline PhaseGrid build_grid(const GridConfig& g, const OperatorSet& set, double eps) {
  if (g.mode == "axes") {
    if (static_cast<int>(g.axes.size()) != set.n()) experiments_detail::bad("grid.axes", "needs one axis per operator");
    return PhaseGrid(g.axes);
  }
  if (g.mode == "fitted") return PhaseGrid::fitted(set, g.pad, g.count > 0 ? g.count : PhaseGrid::default_count(set.n()));
  return PhaseGrid::default_for(set, eps, g.count);
}

// ---- one negativity evaluation ----

struct PointResult {
  std::string family;
  int n = 0, N = 0;
  std::vector<double> lambdas;
  double epsilon = 0;
  NegativityReport report;
  bool has_closed = false;
  ClosedNegativity closed;
  double baseline = 0;
  double mask_width = 0;
  std::string method;
  std::string grid;
  std::string params;
};

inline std::vector<double> noise_of(const OperatorSet& set) {
  const auto& p = set.params();
  switch (set.family()) {
    case Family::NOISY_PROJ:
    case Family::NOISY_PROJ_MIXED: return {p.lambda};
    case Family::NOISY_PAULI:
    case Family::NOISY_PAULI_SYMM:
    case Family::NOISY_GELLMANN:
    case Family::MUB_PAULI:
    case Family::GELLMANN: return p.lambdas;
    default: return {};
  }
}

inline std::string params_tag(const OperatorSet& set) {
  const auto& p = set.params();
  std::ostringstream os;
  switch (set.family()) {
    case Family::ARB_QUBIT_PAIR: os << "beta=" << format_double(p.beta); break;
    case Family::ARB_QUBIT_TRIPLE:
      os << "theta1=" << format_double(p.theta1) << ";phi1=" << format_double(p.phi1) << ";theta2=" << format_double(p.theta2)
         << ";phi2=" << format_double(p.phi2);
      break;
    case Family::NOISY_PROJ:
    case Family::NOISY_PROJ_MIXED:
      os << "signs=";
      for (size_t k = 0; k < p.signs.size(); ++k) os << (k ? ";" : "") << (p.signs[k].sign > 0 ? '+' : '-') << p.signs[k].axis;
      break;
    default: os << "-"; break;
  }
  return os.str();
}

inline PointResult evaluate_point(const OperatorSet& set, const QuantumState& rho, const RunConfig& cfg, double eps,
                                  int threads) {
  PointResult r;
  r.family = to_string(set.family());
  r.n = set.n();
  r.N = set.dim();
  r.lambdas = noise_of(set);
  r.epsilon = eps;
  r.params = params_tag(set);
  bool scalar = true;
  for (int k = 0; k < set.n() && scalar; ++k) {
    const ComplexMatrix& a = set.op(k).matrix();
    const cplx t = a.trace() / double(set.dim());
    scalar = (a - t * ComplexMatrix::Identity(set.dim(), set.dim())).cwiseAbs().maxCoeff() < 1e-12;
  }
  if (scalar) {
    // every operator is a multiple of I: a point mass, nothing negative to regularize
    r.report.epsilon = eps;
    r.report.family = r.family;
    r.report.kernel = r.report.reference = "-";
    r.method = "point_mass";
    r.grid = "-";
    if (set.family() != Family::CUSTOM) {
      r.has_closed = true;
      r.closed.absolute = 0.0;
    }
    return r;
  }
  const Regularizer reg = pick_kernel(cfg.regularizer.kernel, set, eps, false);
  const Regularizer ref = pick_kernel(cfg.regularizer.reference, set, eps, true);
  std::optional<ClosedFormCase> c;
  if (set.family() != Family::CUSTOM) c = case_for(set);
  const bool shell = c && has_singular_shell(*c) && cfg.mask.enabled;
  r.mask_width = shell ? (cfg.mask.width < 0 ? default_mask(eps) : cfg.mask.width) : 0.0;
  TransformOptions opt = cfg.transform;
  opt.threads = threads;

  const bool scalar_dirs = set.affine() && !set.affine()->kernel.empty();
  std::vector<char> keep;
  if (cfg.marginal && scalar_dirs && cfg.grid.mode != "axes") {
    const int count = cfg.grid.count > 0 ? cfg.grid.count : 257;
    const double pad = cfg.grid.mode == "fitted" ? cfg.grid.pad : -1.0;
    const ReducedField rf = reduced_wigner(rho.matrix(), set, reg, count, opt, pad);
    if (shell) {
      keep.resize(rf.field.grid.size());
      for (long i = 0; i < rf.field.grid.size(); ++i)
        keep[i] = outside_singular_band(*c, rf.embed(rf.field.grid.point(i)), r.mask_width) ? 1 : 0;
    }
    r.report = normalized_negativity(rf.field, reg, ref, shell ? &keep : nullptr);
    r.method = rf.field.method;
    r.grid = "marginal" + std::to_string(rf.field.grid.n()) + "d:" + std::to_string(count);
  } else {
    const PhaseGrid g = build_grid(cfg.grid, set, eps);
    const WignerField f = regularized_wigner(rho, set, g, reg, opt);
    if (shell) keep = singular_mask(*c, g, r.mask_width);
    r.report = normalized_negativity(f, reg, ref, shell ? &keep : nullptr);
    r.method = f.method;
    r.grid = cfg.grid.mode + ":" + std::to_string(g.axis(0).count);
  }
  r.report.family = r.family;
  if (c) {
    r.has_closed = true;
    r.closed = negativity_closed(*c, eps);
    r.baseline = r.closed.baseline;
  }
  return r;
}

// ---- sweeps ----

inline const char* kSweepHeader =
    "family,n,N,lambda,epsilon,raw,norm_factor,normalized,closed_ratio,closed_absolute,mask_fraction,"
    "baseline,numeric_ratio,mask_width,kernel,reference,method,grid,params,group,variable,value";

struct SweepRow {
  PointResult point;
  int group = 0;
  std::string variable;
  double value = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> summary;
  bool monotone = true;
};

inline std::string join_lambdas(const std::vector<double>& l) {
  std::string s;
  for (size_t k = 0; k < l.size(); ++k) s += (k ? ":" : "") + format_double(l[k]);
  return s.empty() ? "-" : s;
}

inline std::string csv_row(const SweepRow& row) {
  const PointResult& p = row.point;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double ratio = p.baseline > 0 ? std::abs(p.report.normalized) / p.baseline : nan;
  std::ostringstream os;
  os << p.family << ',' << p.n << ',' << p.N << ',' << join_lambdas(p.lambdas) << ',' << format_double(p.epsilon) << ','
     << format_double(p.report.raw) << ',' << format_double(p.report.norm_factor) << ','
     << format_double(p.report.normalized) << ',' << format_double(p.has_closed ? p.closed.ratio : nan) << ','
     << format_double(p.has_closed && p.closed.absolute ? *p.closed.absolute : nan) << ','
     << format_double(p.report.mask_fraction) << ',' << format_double(p.baseline) << ',' << format_double(ratio) << ','
     << format_double(p.mask_width) << ',' << p.report.kernel << ',' << p.report.reference << ',' << p.method << ','
     << p.grid << ',' << p.params << ',' << row.group << ',' << row.variable << ',' << format_double(row.value);
  return os.str();
}

// magnitudes along one group, in sweep order
inline bool monotone_ok(const std::string& variable, const std::vector<double>& values, const std::vector<double>& mags,
                        double floor = 0.05) {
  std::vector<size_t> idx(values.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
  for (size_t k = 1; k < idx.size(); ++k) {
    const double prev = mags[idx[k - 1]], cur = mags[idx[k]];
    if (variable == "epsilon") {
      if (cur > prev * (1 + 1e-9)) return false;
    } else if (variable == "beta") {
      if (!(cur * (1 - floor) > prev)) return false;
    } else {
      if (!(cur < prev * (1 - floor))) return false;
    }
  }
  return true;
}

inline SweepResult run_sweep(const RunConfig& cfg) {
  check_sweep(cfg.sweep);
  const auto& sw = cfg.sweep;
  struct Task {
    int group;
    double value;
  };
  std::vector<Task> tasks;
  for (int g = 0; g < static_cast<int>(cfg.operators.size()); ++g)
    for (double v : sw.values) tasks.push_back({g, v});

  // build everything up front so config errors surface before any work
  std::vector<OperatorSet> sets;
  std::vector<QuantumState> states;
  std::vector<double> eps;
  for (const auto& t : tasks) {
    sets.push_back(build_set(apply_value(cfg.operators[t.group], sw.variable, t.value, sw.index)));
    states.push_back(build_state(cfg.state, sets.back()));
    eps.push_back(sw.variable == "epsilon" ? t.value : cfg.regularizer.epsilon);
  }

  const int threads = detail::thread_count(cfg.threads);
  const int outer = static_cast<int>(std::min<size_t>(threads, tasks.size()));
  const int inner = std::max(1, threads / std::max(1, outer));
  SweepResult res;
  res.rows.resize(tasks.size());
  detail::parallel_for(static_cast<long>(tasks.size()), outer, [&](long i) {
    res.rows[i].point = evaluate_point(sets[i], states[i], cfg, eps[i], inner);
    res.rows[i].group = tasks[i].group;
    res.rows[i].variable = sw.variable;
    res.rows[i].value = tasks[i].value;
  });

  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_group;
  for (const auto& r : res.rows) {
    by_group[r.group].first.push_back(r.value);
    by_group[r.group].second.push_back(std::abs(r.point.report.normalized));
  }
  for (const auto& [g, vm] : by_group) {
    const bool ok = monotone_ok(sw.variable, vm.first, vm.second);
    res.monotone = res.monotone && ok;
    res.summary.push_back("# monotone=" + std::string(ok ? "pass" : "fail") + " group=" + std::to_string(g) +
                          " variable=" + sw.variable + " points=" + std::to_string(vm.first.size()) +
                          " noise_floor=0.05");
  }
  bool mixed = false;
  for (const auto& r : res.rows)
    if (r.point.n != res.rows.front().point.n || r.point.report.kernel.substr(0, 3) != res.rows.front().point.report.kernel.substr(0, 3))
      mixed = true;
  if (mixed) res.summary.push_back("# comparison=qualitative");
  return res;
}

inline void write_sweep_csv(const SweepResult& res, std::ostream& os) {
  os << kSweepHeader << '\n';
  for (const auto& r : res.rows) os << csv_row(r) << '\n';
  for (const auto& s : res.summary) os << s << '\n';
}

// ---- plotting ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_sweep_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
      continue;
    }
    if (t.header.empty())
      t.header = split_csv(line);
    else
      t.rows.push_back(split_csv(line));
  }
  if (t.header.empty()) throw Error(ErrorKind::SchemaMismatch, "CSV is empty");
  for (const char* need : {"family", "n", "N", "epsilon", "normalized", "closed_absolute", "group", "variable", "value"})
    if (t.column(need) < 0) throw Error(ErrorKind::SchemaMismatch, std::string("CSV lacks column '") + need + "'");
  if (t.rows.empty()) throw Error(ErrorKind::SchemaMismatch, "CSV has no data rows");
  for (const auto& r : t.rows)
    if (r.size() != t.header.size()) throw Error(ErrorKind::SchemaMismatch, "row width differs from the header");
  return t;
}

// gnuplot script with the data inlined; one curve pair per group
inline std::string plot_script(const CsvTable& t, bool log_scale, const std::string& output = "negativity.png") {
  const int cg = t.column("group"), cv = t.column("value"), cn = t.column("normalized"), cc = t.column("closed_absolute");
  const int cf = t.column("family"), cnn = t.column("n"), cN = t.column("N");
  const std::string variable = t.rows.front()[t.column("variable")];
  std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
  std::vector<std::string> order;
  for (const auto& r : t.rows) {
    if (!groups.count(r[cg])) order.push_back(r[cg]);
    groups[r[cg]].push_back(&r);
  }
  std::ostringstream os;
  os << "# negativity vs " << variable << "\n";
  for (const auto& c : t.comments) os << c << "\n";
  os << "set terminal pngcairo size 900,600\n";
  os << "set output '" << output << "'\n";
  os << "set xlabel '" << (variable == "lambda" ? "noise lambda" : variable == "epsilon" ? "regularising parameter epsilon" : variable) << "'\n";
  os << "set ylabel '|normalized negative volume|'\n";
  os << "set key outside right\n";
  if (log_scale) os << "set logscale y\n";
  if (variable == "epsilon") os << "set logscale x\n";
  for (size_t gi = 0; gi < order.size(); ++gi) {
    os << "$G" << gi << " << EOD\n";
    os << "value normalized closed_absolute\n";
    for (const auto* r : groups[order[gi]]) os << (*r)[cv] << ' ' << (*r)[cn] << ' ' << (*r)[cc] << '\n';
    os << "EOD\n";
  }
  os << "plot \\\n";
  for (size_t gi = 0; gi < order.size(); ++gi) {
    const auto& r = *groups[order[gi]].front();
    const std::string label = r[cf] + " n=" + r[cnn] + " N=" + r[cN];
    os << "  $G" << gi << " using \"value\":(abs(column(\"normalized\"))) with linespoints title '" << label << " numeric', \\\n";
    os << "  $G" << gi << " using \"value\":(abs(column(\"closed_absolute\"))) with lines dashtype 2 title '" << label
       << " closed'" << (gi + 1 < order.size() ? ", \\" : "") << "\n";
  }
  return os.str();
}

// ---- field output ----

inline Json field_metadata(const WignerField& f, const OperatorSet& set, const QuantumState& rho, double mask_width,
                           double mask_frac) {
  Json j;
  j["operators"] = operator_set_to_json(set);
  j["epsilon"] = f.reg.epsilon();
  j["kernel"] = f.reg.describe();
  j["method"] = f.method;
  Json axes = Json::array();
  for (const auto& a : f.grid.axes()) axes.push_back({a.min, a.max, a.count});
  j["grid"] = axes;
  j["cutoff"] = f.cutoff;
  j["mask"] = {{"width", mask_width}, {"fraction", mask_frac}};
  j["imag_residue"] = f.imag_residue;
  const auto r = state_to_bloch(rho);
  j["state_bloch"] = std::vector<double>(r.data(), r.data() + r.size());
  return j;
}

}  // namespace wigvol
