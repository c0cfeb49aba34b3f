// topoinv command-line driver.
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "topoinv/certify.hpp"
#include "topoinv/io.hpp"
#include "topoinv/pipeline.hpp"

using namespace topoinv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertifyFailed = 1;
constexpr int kExitPrecondition = 2;
constexpr int kExitUnsnapped = 3;
constexpr int kExitIo = 4;

struct Common {
  std::string model;
  std::string model_file;
  std::vector<std::string> params;
  int grid = 0;
  int grid_t = 0;
  unsigned seed = 0;
  std::string out;
  bool json_output = false;
  CLI::Option* seed_opt = nullptr;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io:
    case ErrorKind::ParseError:
    case ErrorKind::SchemaError:
      return kExitIo;
    default:
      return kExitPrecondition;
  }
}

void emit_error(const std::string& kind, const std::string& message, int code) {
  const json e{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << e.dump() << "\n";
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--model", c.model, "builtin model (haldane, kane_mele, bhz, flat_two_band, atomic)");
  sub->add_option("--model-file", c.model_file, "model JSON file");
  sub->add_option("--param", c.params, "parameter override k=v (repeatable)");
  sub->add_option("--grid", c.grid, "momentum grid (power of two, 16..1024)");
  sub->add_option("--grid-t", c.grid_t, "interval grid of 3D quadratures (power of two, 16..1024)");
  c.seed_opt = sub->add_option("--seed", c.seed, "seed for random bases and gauges");
  sub->add_option("--out", c.out, "output path");
  sub->add_flag("--json", c.json_output, "machine-readable output");
}

int checked_grid(int value, int fallback, const char* what) {
  const int g = value == 0 ? fallback : value;
  if (!is_power_of_two(g) || g < 16 || g > 1024) {
    throw Error(ErrorKind::BadConfig, std::string(what) + " must be a power of two in [16, 1024], got " + std::to_string(g));
  }
  return g;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::BadConfig, "expected k=v, got '" + item + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() - eq - 1 || !std::isfinite(v)) {
      throw Error(ErrorKind::BadConfig, "bad value in '" + item + "'");
    }
    out[item.substr(0, eq)] = v;
  }
  return out;
}

struct ResolvedModel {
  BlochHamiltonianSpec spec;
  json description;
};

ResolvedModel resolve_model(const Common& c) {
  if (!c.model.empty() && !c.model_file.empty()) throw Error(ErrorKind::BadConfig, "give either --model or --model-file");
  if (c.model.empty() && c.model_file.empty()) throw Error(ErrorKind::BadConfig, "no model given");
  if (!c.model_file.empty()) {
    if (!c.params.empty()) throw Error(ErrorKind::BadConfig, "--param applies to builtin models only");
    auto spec = load_model(c.model_file);
    return {spec, {{"file", c.model_file}, {"name", spec.name}, {"parameters", spec.parameters}}};
  }
  const auto overrides = parse_params(c.params);
  const auto defaults = default_parameters(c.model);
  for (const auto& [k, v] : overrides) {
    if (!defaults.count(k)) throw Error(ErrorKind::BadConfig, "model " + c.model + " has no parameter '" + k + "'");
  }
  auto spec = builtin_model_with_defaults(c.model, overrides);
  return {spec, {{"name", c.model}, {"parameters", spec.parameters}}};
}

void write_report(const Common& c, const json& report) {
  if (!c.out.empty()) write_text(c.out, report.dump(2) + "\n");
  if (c.json_output) std::cout << report.dump(2) << "\n";
}

std::string fmt(double x) { return format_double(x); }

int cmd_chern(const Common& c) {
  ChernOptions o;
  o.grid = checked_grid(c.grid, 64, "--grid");
  o.grid_t = checked_grid(c.grid_t, 32, "--grid-t");
  const auto m = resolve_model(c);
  const auto r = run_chern(m.spec, o);
  json report{{"command", "chern"}, {"model", m.description}, {"grid", o.grid}, {"grid_t", o.grid_t}, {"seed", c.seed},
              {"result", r.to_json()}};
  write_report(c, report);
  if (!c.json_output) {
    std::cout << "chern = " << r.chern.integer() << " (raw " << fmt(r.chern.raw.real()) << ", residual "
              << fmt(r.chern.residual) << ")\n"
              << "wz_check = " << (r.wz_pass ? "pass" : "fail") << " (S_WZ = " << fmt(r.wz.action) << ", residual "
              << fmt(r.wz_residual) << ")\n";
  }
  return r.chern.ok() && r.wz_pass ? kExitOk : kExitUnsnapped;
}

int cmd_fkm(const Common& c) {
  FkmOptions o;
  o.grid = checked_grid(c.grid, 128, "--grid");
  o.grid_t = checked_grid(c.grid_t, 32, "--grid-t");
  o.seed = c.seed;
  const auto m = resolve_model(c);
  const auto r = run_fkm(m.spec, o);
  json report{{"command", "fkm"}, {"model", m.description}, {"grid", o.grid}, {"grid_t", o.grid_t}, {"seed", c.seed},
              {"result", r.to_json()}};
  write_report(c, report);
  if (!c.json_output) {
    std::cout << "delta = " << r.delta.delta.integer() << " (raw " << fmt(r.delta.delta.raw.real()) << ", residual "
              << fmt(r.delta.delta.residual) << ")\n"
              << "kappa = " << r.kappa.kappa.integer() << " (raw " << fmt(r.kappa.kappa.raw.real()) << ", residual "
              << fmt(r.kappa.kappa.residual) << ")\n"
              << "agreement = " << (r.agree ? "agree" : "disagree") << "\n"
              << "sqrt Berry phase T0 = " << fmt(r.delta.t0.sqrt_berry.raw.real()) << ", Tpi = "
              << fmt(r.delta.tpi.sqrt_berry.raw.real()) << "\n";
  }
  return r.snapped() && r.agree ? kExitOk : kExitUnsnapped;
}

ParameterRange parse_range(const std::string& s) {
  // name=start:stop:count
  const auto eq = s.find('=');
  const auto c1 = s.find(':', eq == std::string::npos ? 0 : eq);
  const auto c2 = c1 == std::string::npos ? c1 : s.find(':', c1 + 1);
  if (eq == std::string::npos || eq == 0 || c1 == std::string::npos || c2 == std::string::npos) {
    throw Error(ErrorKind::BadConfig, "expected name=start:stop:count, got '" + s + "'");
  }
  ParameterRange r;
  r.name = s.substr(0, eq);
  try {
    r.start = std::stod(s.substr(eq + 1, c1 - eq - 1));
    r.stop = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    r.count = std::stoi(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadConfig, "bad range '" + s + "'");
  }
  return r;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& ranges, const std::vector<std::string>& invariants,
              unsigned workers) {
  if (!c.model_file.empty()) throw Error(ErrorKind::BadConfig, "sweeps need a builtin --model");
  if (c.model.empty()) throw Error(ErrorKind::BadConfig, "no model given");
  SweepJob job;
  job.model = c.model;
  job.base_parameters = parse_params(c.params);
  for (const auto& r : ranges) job.ranges.push_back(parse_range(r));
  job.grid = checked_grid(c.grid, 64, "--grid");
  job.grid_t = checked_grid(c.grid_t, 32, "--grid-t");
  job.invariants = invariants;
  for (const auto& i : invariants) {
    if (i != "chern" && i != "delta" && i != "kappa") throw Error(ErrorKind::BadConfig, "unknown invariant '" + i + "'");
  }
  job.output = c.out;
  const auto result = run_sweep(job, c.seed, workers);
  json config{{"command", "sweep"},
              {"model", job.model},
              {"base_parameters", job.base_parameters},
              {"grid", job.grid},
              {"grid_t", job.grid_t},
              {"invariants", job.invariants},
              {"seed", c.seed},
              {"fermi_level", 0.0}};
  json rj = json::array();
  for (const auto& r : job.ranges) rj.push_back({{"name", r.name}, {"start", r.start}, {"stop", r.stop}, {"count", r.count}});
  config["ranges"] = rj;
  config["parameter_columns"] = result.parameter_names;
  if (!c.out.empty()) {
    save_results(c.out, result.parameter_names, result.rows, config);
  } else if (!c.json_output) {
    std::cout << results_csv(result.parameter_names, result.rows);
  }
  if (c.json_output) {
    json rows = json::array();
    for (const auto& r : result.rows) {
      json row{{"model", r.model}, {"residual_max", r.residual_max}, {"status", r.status}};
      for (std::size_t i = 0; i < r.parameter_values.size(); ++i) row[result.parameter_names[i]] = r.parameter_values[i];
      if (r.chern) row["chern"] = *r.chern;
      if (r.delta) row["delta"] = *r.delta;
      if (r.kappa) row["kappa"] = *r.kappa;
      if (r.berry_phase_t0) row["berry_phase_T0"] = *r.berry_phase_t0;
      if (r.berry_phase_tpi) row["berry_phase_Tpi"] = *r.berry_phase_tpi;
      rows.push_back(row);
    }
    std::cout << json{{"config", config}, {"rows", rows}}.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_certify(const Common& c) {
  CertifyOptions o;
  o.grid = checked_grid(c.grid, 64, "--grid");
  o.grid_t = checked_grid(c.grid_t, 64, "--grid-t");
  if (c.seed_opt->count() > 0) o.seed = c.seed;
  const auto report = run_certify(o, [&](const CriterionResult& r) {
    if (c.json_output) return;
    std::printf("%s criterion %d: %s | measured %.3e threshold %.1e | %.1f s | %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.measured, r.threshold, r.seconds, r.detail.c_str());
    std::fflush(stdout);
  });
  write_report(c, report.to_json());
  return report.pass() ? kExitOk : kExitCertifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topoinv: Chern, Fu-Kane-Mele and Wess-Zumino invariants of Bloch bands"};
  app.require_subcommand(1);
  Common chern, fkm, sweep, certify;
  std::vector<std::string> ranges, invariants{"chern", "delta", "kappa"};
  unsigned workers = 0;

  auto* c_chern = app.add_subcommand("chern", "Chern number with the WZ cross-check");
  add_common(c_chern, chern);
  auto* c_fkm = app.add_subcommand("fkm", "delta and K invariants of a time-reversal symmetric model");
  add_common(c_fkm, fkm);
  auto* c_sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
  add_common(c_sweep, sweep);
  c_sweep->add_option("--range", ranges, "name=start:stop:count (repeatable)")->required();
  c_sweep->add_option("--invariants", invariants, "subset of chern, delta, kappa");
  c_sweep->add_option("--workers", workers, "worker threads (0 = hardware concurrency)");
  auto* c_certify = app.add_subcommand("certify", "run the certification suite");
  add_common(c_certify, certify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    emit_error("Usage", e.what(), kExitPrecondition);
    return kExitPrecondition;
  }

  try {
    if (c_chern->parsed()) return cmd_chern(chern);
    if (c_fkm->parsed()) return cmd_fkm(fkm);
    if (c_sweep->parsed()) return cmd_sweep(sweep, ranges, invariants, workers);
    return cmd_certify(certify);
  } catch (const GapClosure& e) {
    emit_error(to_string(e.kind()), e.what(), kExitPrecondition);
    return kExitPrecondition;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    emit_error(to_string(e.kind()), e.what(), code);
    return code;
  }
}
