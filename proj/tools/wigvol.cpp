#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wigvol/experiments.hpp"
#include "wigvol/verify.hpp"

using namespace wigvol;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  int threads = 0;
  double epsilon = -1;
  std::vector<double> lambda;
};

RunConfig load(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? parse_config(Json::object()) : load_config(o.config);
  if (!o.out.empty()) cfg.out = o.out;
  if (o.threads > 0) cfg.threads = o.threads;
  if (o.epsilon >= 0) {
    if (!(o.epsilon > 0)) throw Error(ErrorKind::ConfigError, "--epsilon: must be > 0");
    cfg.regularizer.epsilon = o.epsilon;
  }
  return cfg;
}

// --lambda: one value for every operator, or one per operator
Json with_lambda(Json doc, const std::vector<double>& l) {
  if (l.empty()) return doc;
  const Family f = family_from_string(doc.value("family", std::string("CUSTOM")));
  Json& p = doc["params"];
  if (!p.is_object()) p = Json::object();
  if (f == Family::NOISY_PROJ || f == Family::NOISY_PROJ_MIXED) {
    if (l.size() != 1) throw Error(ErrorKind::ConfigError, "--lambda: projector sets take one value");
    p["lambda"] = l[0];
  } else if (f == Family::NOISY_PAULI || f == Family::NOISY_PAULI_SYMM || f == Family::NOISY_GELLMANN) {
    const size_t n = p.contains("lambdas") && p["lambdas"].is_array() ? p["lambdas"].size() : l.size();
    if (l.size() == 1)
      p["lambdas"] = std::vector<double>(n, l[0]);
    else
      p["lambdas"] = l;
  } else {
    throw Error(ErrorKind::ConfigError, std::string("--lambda: ") + to_string(f) + " has no noise parameter");
  }
  return doc;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::ConfigError, "cannot write '" + path + "'");
  return os;
}

int cmd_wigner(const Overrides& o) {
  RunConfig cfg = load(o);
  const OperatorSet set = build_set(with_lambda(cfg.operators.front(), o.lambda));
  const QuantumState rho = build_state(cfg.state, set);
  const double eps = cfg.regularizer.epsilon;
  const Regularizer reg = pick_kernel(cfg.regularizer.kernel, set, eps, false);
  const PhaseGrid grid = build_grid(cfg.grid, set, eps);
  TransformOptions opt = cfg.transform;
  opt.threads = cfg.threads;
  const WignerField f = regularized_wigner(rho, set, grid, reg, opt);

  double width = 0, frac = 0;
  if (set.family() != Family::CUSTOM && cfg.mask.enabled) {
    const ClosedFormCase c = case_for(set);
    if (has_singular_shell(c)) {
      width = cfg.mask.width < 0 ? default_mask(eps) : cfg.mask.width;
      frac = mask_fraction(singular_mask(c, grid, width));
    }
  }
  const std::string path = cfg.out.empty() ? "wigner.csv" : cfg.out;
  {
    std::ofstream os = open_out(path);
    write_field_csv(f, os);
  }
  {
    std::ofstream os = open_out(path + ".meta.json");
    os << field_metadata(f, set, rho, width, frac).dump(2) << '\n';
  }
  std::fprintf(stderr, "wrote %s (%ld points, method %s, min %.6g, max %.6g)\n", path.c_str(), grid.size(),
               f.method.c_str(), f.min_value(), f.max_abs());
  return 0;
}

int cmd_sweep(const Overrides& o) {
  RunConfig cfg = load(o);
  if (!o.lambda.empty()) {
    if (cfg.sweep.variable == "lambda")
      cfg.sweep.values = o.lambda;
    else
      for (auto& doc : cfg.operators) doc = with_lambda(doc, o.lambda);
  }
  const SweepResult res = run_sweep(cfg);
  std::ostringstream text;
  write_sweep_csv(res, text);
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << text.str();
  } else {
    std::ofstream os = open_out(cfg.out);
    os << text.str();
  }
  for (const auto& s : res.summary) std::fprintf(stderr, "%s\n", s.c_str());
  return 0;
}

int cmd_plot(const std::string& csv, const std::string& out, bool log_scale) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open '" + csv + "'");
  const CsvTable t = read_sweep_csv(in);
  const std::string path = out.empty() ? csv + ".gp" : out;
  std::string png = path;
  if (png.size() > 3 && png.substr(png.size() - 3) == ".gp") png.resize(png.size() - 3);
  std::ofstream os = open_out(path);
  os << plot_script(t, log_scale, png + ".png");
  std::fprintf(stderr, "wrote %s\n", path.c_str());
  return 0;
}

int cmd_verify(const std::string& level, double inject) {
  if (level != "quick" && level != "full") throw Error(ErrorKind::ConfigError, "verify level must be quick or full");
  if (inject != 1.0) closedform_detail::fault_scale() = inject;
  int failed = 0;
  const auto results = run_verify(level == "full", [&](const CheckResult& r) {
    std::printf("invariant=%s status=%s value=%.6e tol=%.1e%s%s\n", r.name.c_str(), r.pass ? "pass" : "fail", r.value,
                r.tol, r.detail.empty() ? "" : " detail=", r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  });
  std::printf("verify level=%s status=%s checks=%zu failed=%d\n", level.c_str(), failed ? "fail" : "pass", results.size(),
              failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wigvol: regularized Wigner distributions and their negative volume"};
  app.require_subcommand(1);
  Overrides o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config document");
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--threads", o.threads, "worker threads (fallback: WIGVOL_THREADS)");
    sub->add_option("--epsilon", o.epsilon, "regularising parameter");
    sub->add_option("--lambda", o.lambda, "noise parameter(s)");
  };
  CLI::App* wig = app.add_subcommand("wigner", "write a Wigner field CSV and its metadata");
  common(wig);
  CLI::App* sweep = app.add_subcommand("sweep", "negativity sweep over lambda, epsilon, dimension or beta");
  common(sweep);
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  std::string level = "quick";
  double inject = 1.0;
  verify->add_option("level,--level", level, "quick or full");
  verify->add_option("--threads", o.threads, "worker threads");
  verify->add_option("--inject-closedform-scale", inject)->group("");
  CLI::App* plot = app.add_subcommand("plot", "gnuplot script from a sweep CSV");
  std::string csv;
  bool log_scale = false;
  plot->add_option("csv", csv, "sweep CSV")->required();
  plot->add_option("--out", o.out, "script path");
  plot->add_flag("--log", log_scale, "logarithmic negativity axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (o.threads > 0) setenv("WIGVOL_THREADS", std::to_string(o.threads).c_str(), 1);
    if (*wig) return cmd_wigner(o);
    if (*sweep) return cmd_sweep(o);
    if (*plot) return cmd_plot(csv, o.out, log_scale);
    if (*verify) return cmd_verify(level, inject);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (is_config_error(e.kind())) return 2;
    if (is_numeric_guard(e.kind())) return 3;
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
