#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "wigvol/experiments.hpp"

using namespace wigvol;

namespace {

std::string error_text(const std::function<void()>& fn, ErrorKind* kind = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  ADD_FAILURE() << "no error raised";
  return "";
}

RunConfig small_sweep(const std::string& body) {
  Json doc = Json::parse(body);
  if (!doc.contains("grid")) doc["grid"] = {{"mode", "fitted"}, {"count", 65}, {"pad", 0.05}};
  return parse_config(doc);
}

std::string sweep_csv(const RunConfig& cfg) {
  std::ostringstream os;
  write_sweep_csv(run_sweep(cfg), os);
  return os.str();
}

std::vector<std::string> header_columns() { return split_csv(kSweepHeader); }

// every column a plot command reads must exist in the header
void expect_plotted_columns_exist(const CsvTable& t, const std::string& script) {
  size_t pos = 0;
  int seen = 0;
  while ((pos = script.find("column(\"", pos)) != std::string::npos) {
    pos += 8;
    const std::string name = script.substr(pos, script.find('"', pos) - pos);
    EXPECT_GE(t.column(name), 0) << name;
    ++seen;
  }
  pos = 0;
  while ((pos = script.find("using \"", pos)) != std::string::npos) {
    pos += 7;
    const std::string name = script.substr(pos, script.find('"', pos) - pos);
    EXPECT_GE(t.column(name), 0) << name;
    ++seen;
  }
  EXPECT_GT(seen, 0);
}

}  // namespace

TEST(Config, Defaults) {
  const RunConfig c = parse_config(Json::object());
  ASSERT_EQ(c.operators.size(), 1u);
  EXPECT_EQ(c.operators[0]["family"], "MUB_PAULI");
  EXPECT_EQ(c.grid.mode, "default");
  EXPECT_EQ(c.regularizer.kernel, "family");
  EXPECT_EQ(c.regularizer.epsilon, 1e-3);
  EXPECT_TRUE(c.mask.enabled);
}

TEST(Config, UnknownFieldIsNamed) {
  EXPECT_NE(error_text([] { parse_config(Json::parse(R"({"grid": {"cnt": 5}})")); }).find("grid.cnt"), std::string::npos);
  EXPECT_NE(error_text([] { parse_config(Json::parse(R"({"colour": 1})")); }).find("config.colour"), std::string::npos);
}

TEST(Config, WrongTypeIsNamed) {
  ErrorKind k{};
  const std::string msg = error_text([] { parse_config(Json::parse(R"({"regularizer": {"epsilon": "small"}})")); }, &k);
  EXPECT_EQ(k, ErrorKind::ConfigError);
  EXPECT_NE(msg.find("regularizer.epsilon"), std::string::npos);
}

TEST(Config, BadNoiseNamesField) {
  ErrorKind k{};
  const std::string msg =
      error_text([] { build_set(Json::parse(R"({"family": "NOISY_PROJ", "params": {"signs": [[1,1],[2,1]], "lambda": 1.5}})")); },
                 &k);
  EXPECT_EQ(k, ErrorKind::ConfigError);
  EXPECT_TRUE(is_config_error(k));
  EXPECT_NE(msg.find("operators.params.lambda"), std::string::npos);
}

TEST(Config, SweepValidation) {
  SweepConfig s;
  s.variable = "lambda";
  s.values = {0.1, 1.2};
  EXPECT_NE(error_text([&] { check_sweep(s); }).find("sweep.values"), std::string::npos);
  s.variable = "temperature";
  EXPECT_NE(error_text([&] { check_sweep(s); }).find("sweep.variable"), std::string::npos);
  s.variable = "dimension";
  s.values = {2.5};
  EXPECT_THROW(check_sweep(s), Error);
}

TEST(Config, ApplyValue) {
  const Json pauli = Json::parse(R"({"family": "NOISY_PAULI", "params": {"lambdas": [0.1, 0.2, 0.3]}})");
  EXPECT_EQ(apply_value(pauli, "lambda", 0.5, -1)["params"]["lambdas"], Json::parse("[0.5, 0.5, 0.5]"));
  EXPECT_EQ(apply_value(pauli, "lambda", 0.5, 1)["params"]["lambdas"], Json::parse("[0.1, 0.5, 0.3]"));
  EXPECT_THROW(apply_value(pauli, "lambda", 0.5, 3), Error);
  EXPECT_THROW(apply_value(pauli, "beta", 0.5, -1), Error);
  const Json gm = Json::parse(R"({"family": "GELLMANN", "params": {"N": 2, "n": 2}})");
  EXPECT_EQ(build_set(apply_value(gm, "dimension", 5, -1)).dim(), 5);
}

TEST(Config, States) {
  const OperatorSet s = mub_pauli_set(2);
  EXPECT_LT((build_state("mixed", s).matrix() - ComplexMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-15);
  const QuantumState b = build_state(Json::parse(R"({"bloch": [0, 0, 1]})"), s);
  EXPECT_NEAR(b.matrix()(0, 0).real(), 1.0, 1e-15);
  const QuantumState m = build_state(Json::parse(R"({"matrix": [[1,0],[0,0],[0,0],[0,0]]})"), s);
  EXPECT_NEAR(m.matrix()(0, 0).real(), 1.0, 1e-15);
  EXPECT_NE(error_text([&] { build_state(Json::parse(R"({"bloch": [2, 0, 0]})"), s); }).find("state"), std::string::npos);
  EXPECT_THROW(build_state("pure", s), Error);
}

TEST(Serialize, RoundTripEveryFamily) {
  const std::vector<OperatorSet> sets = {mub_pauli_set(3),
                                         noisy_projector_set({{1, 1}, {2, -1}}, 0.3),
                                         noisy_projector_set({{1, 1}, {2, 1}, {2, -1}}, 0.2),
                                         noisy_pauli_set({0.1, 0.2, 0.3}),
                                         noisy_pauli_set({0.4, 0.4}, true),
                                         arb_qubit_triple(1.0, 0.3, 1.2, 1.5),
                                         arb_qubit_pair(0.6),
                                         gellmann_set(4, 3),
                                         noisy_gellmann_set(3, {0.1, 0.2}),
                                         custom_set({pauli(1), HermitianOperator(pauli(2).matrix() * 0.5)})};
  for (const auto& s : sets) {
    const Json j = operator_set_to_json(s);
    const OperatorSet back = operator_set_from_json(Json::parse(j.dump()));
    EXPECT_EQ(back.family(), s.family()) << j.dump();
    ASSERT_EQ(back.n(), s.n());
    for (int k = 0; k < s.n(); ++k) EXPECT_LT((back.op(k).matrix() - s.op(k).matrix()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(operator_set_to_json(back).dump(), j.dump());
  }
}

TEST(Serialize, CustomNeedsMatrices) {
  EXPECT_THROW(operator_set_from_json(Json::parse(R"({"family": "CUSTOM", "dim": 2})")), Error);
  EXPECT_THROW(operator_set_from_json(Json::parse(R"({"family": "CUSTOM", "dim": 2, "matrices": [[[1,0]]]})")), Error);
  EXPECT_THROW(operator_set_from_json(Json::parse(R"({"params": {}})")), Error);
}

TEST(Serialize, MismatchedSigns) {
  EXPECT_THROW(build_set(Json::parse(R"({"family": "NOISY_PROJ", "params": {"signs": [[2,1],[2,-1]]}})")), Error);
}

TEST(Monotone, Rules) {
  EXPECT_TRUE(monotone_ok("lambda", {0, 0.5, 1}, {1.0, 0.5, 0.0}));
  EXPECT_FALSE(monotone_ok("lambda", {0, 0.5}, {1.0, 0.97}));
  EXPECT_TRUE(monotone_ok("lambda", {0.5, 0}, {0.5, 1.0}));
  EXPECT_TRUE(monotone_ok("epsilon", {1e-3, 1e-2}, {2.0, 2.0}));
  EXPECT_FALSE(monotone_ok("epsilon", {1e-3, 1e-2}, {2.0, 2.1}));
  EXPECT_TRUE(monotone_ok("beta", {0.25, 1.0}, {0.25, 1.0}));
  EXPECT_TRUE(monotone_ok("dimension", {2, 3, 4}, {1.0, 0.66, 0.5}));
}

TEST(Csv, RowMatchesHeader) {
  SweepRow row;
  row.point.family = "MUB_PAULI";
  row.point.lambdas = {0.1, 0.2};
  row.variable = "lambda";
  EXPECT_EQ(split_csv(csv_row(row)).size(), header_columns().size());
  EXPECT_EQ(join_lambdas({}), "-");
  EXPECT_EQ(join_lambdas({0.5, 0.25}), format_double(0.5) + ":" + format_double(0.25));
}

TEST(Csv, EmptyAndMalformed) {
  ErrorKind k{};
  std::istringstream empty("");
  error_text([&] { read_sweep_csv(empty); }, &k);
  EXPECT_EQ(k, ErrorKind::SchemaMismatch);
  std::istringstream header_only(std::string(kSweepHeader) + "\n");
  error_text([&] { read_sweep_csv(header_only); }, &k);
  EXPECT_EQ(k, ErrorKind::SchemaMismatch);
  std::istringstream missing("family,n\nX,2\n");
  EXPECT_NE(error_text([&] { read_sweep_csv(missing); }, &k).find("N"), std::string::npos);
  EXPECT_EQ(k, ErrorKind::SchemaMismatch);
}

TEST(Sweep, LambdaSweepIsMonotoneAndDeterministic) {
  const RunConfig cfg = small_sweep(R"({
    "operators": {"family": "NOISY_PROJ", "params": {"signs": [[1,1],[2,1]]}},
    "regularizer": {"epsilon": 1e-2},
    "sweep": {"variable": "lambda", "values": [0, 0.3, 0.6]}})");
  const SweepResult res = run_sweep(cfg);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_TRUE(res.monotone);
  for (const auto& r : res.rows) {
    EXPECT_LT(r.point.report.normalized, 0.0);
    EXPECT_GT(r.point.mask_width, 0.0);
    EXPECT_NEAR(r.point.closed.ratio, std::pow(1 - r.value, 2) / 4, 1e-12);
  }
  EXPECT_EQ(sweep_csv(cfg), sweep_csv(cfg));
}

TEST(Sweep, ThreadCountDoesNotChangeOutput) {
  RunConfig cfg = small_sweep(R"({
    "operators": {"family": "NOISY_PAULI", "params": {"lambdas": [0, 0]}},
    "regularizer": {"epsilon": 1e-2},
    "sweep": {"variable": "lambda", "values": [0, 0.4]}})");
  cfg.threads = 1;
  const std::string a = sweep_csv(cfg);
  cfg.threads = 2;
  EXPECT_EQ(a, sweep_csv(cfg));
}

TEST(Sweep, MixedComparisonIsFlagged) {
  const RunConfig cfg = small_sweep(R"({
    "operators": [{"family": "NOISY_PAULI", "params": {"lambdas": [0, 0]}},
                  {"family": "NOISY_PAULI", "params": {"lambdas": [0, 0, 0]}}],
    "regularizer": {"epsilon": 1e-2},
    "grid": {"mode": "fitted", "count": 33, "pad": 0.1},
    "sweep": {"variable": "lambda", "values": [0, 0.5]}})");
  const SweepResult res = run_sweep(cfg);
  bool flagged = false;
  for (const auto& s : res.summary) flagged = flagged || s == "# comparison=qualitative";
  EXPECT_TRUE(flagged);
}

TEST(Plot, ThreeSweepKinds) {
  const std::vector<std::string> configs = {
      R"({"operators": {"family": "NOISY_PROJ", "params": {"signs": [[1,1],[2,1]]}},
          "regularizer": {"epsilon": 1e-2}, "sweep": {"variable": "lambda", "values": [0, 0.5]}})",
      R"({"operators": {"family": "NOISY_PAULI", "params": {"lambdas": [0.2, 0.2]}},
          "sweep": {"variable": "epsilon", "values": [3e-2, 1e-2]}})",
      R"({"operators": {"family": "GELLMANN", "params": {"N": 2, "n": 2}},
          "regularizer": {"epsilon": 1e-2}, "sweep": {"variable": "dimension", "values": [2, 3]}})"};
  for (const auto& body : configs) {
    const RunConfig cfg = small_sweep(body);
    std::istringstream in(sweep_csv(cfg));
    const CsvTable t = read_sweep_csv(in);
    EXPECT_EQ(t.header, header_columns());
    EXPECT_EQ(t.rows.size(), cfg.sweep.values.size());
    const std::string plain = plot_script(t, false), logged = plot_script(t, true);
    expect_plotted_columns_exist(t, plain);
    EXPECT_EQ(plain.find("set logscale y"), std::string::npos);
    EXPECT_NE(logged.find("set logscale y"), std::string::npos);
    EXPECT_EQ(plain.find("set logscale x") != std::string::npos, cfg.sweep.variable == "epsilon");
    EXPECT_NE(plain.find("# monotone="), std::string::npos);
  }
}

TEST(FieldOutput, CsvAndMetadata) {
  const OperatorSet s = mub_pauli_set(2);
  const PhaseGrid g = PhaseGrid::default_for(s, 1e-2, 17);
  const QuantumState rho = build_state(Json::parse(R"({"bloch": [0.3, -0.2, 0]})"), s);
  const WignerField f = regularized_wigner(rho, s, g, Regularizer::exp_iso(2, 1e-2), TransformOptions{});
  std::ostringstream os;
  write_field_csv(f, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a1,a2,w");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, g.size());
  const Json meta = field_metadata(f, s, rho, 0.3, 0.1);
  EXPECT_EQ(meta["operators"]["family"], "MUB_PAULI");
  EXPECT_EQ(meta["epsilon"], 1e-2);
  EXPECT_EQ(meta["grid"].size(), 2u);
  EXPECT_NEAR(meta["state_bloch"][0].get<double>(), 0.3, 1e-15);
}

TEST(Sweep, FullNoiseIsPointMass) {
  const RunConfig cfg = small_sweep(R"({
    "operators": {"family": "NOISY_PROJ", "params": {"signs": [[1,1],[2,1],[3,1]]}},
    "regularizer": {"epsilon": 1e-2},
    "sweep": {"variable": "lambda", "values": [0.5, 1.0]}})");
  const SweepResult res = run_sweep(cfg);
  EXPECT_TRUE(res.monotone);
  const PointResult& p = res.rows[1].point;
  EXPECT_EQ(p.method, "point_mass");
  EXPECT_EQ(p.report.normalized, 0.0);
  EXPECT_EQ(p.closed.ratio, 0.0);
  EXPECT_EQ(split_csv(csv_row(res.rows[1])).size(), header_columns().size());
}
