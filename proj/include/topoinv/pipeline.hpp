#pragma once

#include <atomic>
#include <chrono>
#include <thread>

#include "topoinv/berry.hpp"
#include "topoinv/io.hpp"
#include "topoinv/models.hpp"
#include "topoinv/wz.hpp"

namespace topoinv {

inline json to_json(const InvariantResult& r) {
  const char* status = r.status == SnapStatus::Snapped ? "Snapped" : r.status == SnapStatus::Unsnapped ? "Unsnapped" : "NotApplicable";
  return {{"kind", to_string(r.kind)},
          {"raw", {r.raw.real(), r.raw.imag()}},
          {"snapped", {r.snapped.real(), r.snapped.imag()}},
          {"residual", r.residual},
          {"status", status},
          {"grid", r.grid}};
}

inline json to_json(const WZValue& v) {
  return {{"action", v.action},
          {"reduced", v.reduced},
          {"modulus", v.modulus == Modulus::TwoPi ? "2pi" : "4pi"},
          {"amplitude", {v.amplitude.real(), v.amplitude.imag()}},
          {"residual", v.residual}};
}

/// Smallest gap at the Fermi level: scan of the n x n grid, then a few rounds
/// of local grid refinement around the coarse minimum.
inline double min_gap(const BlochHamiltonianSpec& h, double fermi, int n, int rounds = 4) {
  auto gap = [&](double k1, double k2) { return detail::occupied_spectrum(h, k1, k2, fermi).gap; };
  double g = std::numeric_limits<double>::infinity(), b1 = 0.0, b2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double k1 = periodic_node(i, n), k2 = periodic_node(j, n), v = gap(k1, k2);
      if (v < g) g = v, b1 = k1, b2 = k2;
    }
  double width = kTwoPi / n;
  for (int r = 0; r < rounds; ++r) {
    const double c1 = b1, c2 = b2;
    for (int i = -5; i <= 5; ++i)
      for (int j = -5; j <= 5; ++j) {
        const double k1 = c1 + width * i / 5.0, k2 = c2 + width * j / 5.0, v = gap(k1, k2);
        if (v < g) g = v, b1 = k1, b2 = k2;
      }
    width /= 5.0;
  }
  return g;
}

// ---------------------------------------------------------------------------
// chern
// ---------------------------------------------------------------------------

struct ChernOptions {
  int grid = 64;    // 2D curvature grid and momentum grid of the WZ quadrature
  int grid_t = 32;  // Simpson intervals in t
};

struct ChernReport {
  InvariantResult chern;
  WZValue wz;            // S_WZ of the extension exp(i pi t P)
  double wz_residual = 0.0;  // |exp(i S) - (-1)^C|
  bool wz_pass = false;
  double gap = 0.0;

  json to_json() const {
    return {{"chern", topoinv::to_json(chern)},
            {"wz", topoinv::to_json(wz)},
            {"wz_residual", wz_residual},
            {"wz_check", wz_pass ? "pass" : "fail"},
            {"min_gap", gap}};
  }
};

inline ChernReport run_chern(const BlochHamiltonianSpec& spec, const ChernOptions& opts,
                             const Tolerances& tol = default_tolerances()) {
  ChernReport r;
  const auto family = make_projector_family(spec, 0.0);
  r.gap = min_gap(spec, 0.0, opts.grid);
  r.chern = chern_number(berry_curvature(family, opts.grid), tol);
  auto grid = std::make_shared<const ProjectorGrid>(family, opts.grid);
  r.wz = wz_action_extension(up_extension(grid), {opts.grid, opts.grid_t}, tol);
  const double sign = r.chern.integer() % 2 == 0 ? 1.0 : -1.0;
  r.wz_residual = std::abs(r.wz.amplitude - sign);
  r.wz_pass = r.chern.ok() && r.wz_residual < tol.snap;
  return r;
}

// ---------------------------------------------------------------------------
// fkm
// ---------------------------------------------------------------------------

struct FkmOptions {
  int grid = 128;   // loop grid of delta, 2D grid of both invariants
  int grid_t = 32;  // Simpson intervals of the direct 3D check
  unsigned seed = 0;
};

struct FkmReport {
  DeltaReport delta;
  KappaReport kappa;
  bool agree = false;

  bool snapped() const { return delta.delta.ok() && kappa.kappa.ok(); }

  json to_json() const {
    auto loop = [](const LoopPhases& p) {
      return json{{"base_point", p.base_point},
                  {"connection_integral", p.integral},
                  {"berry_phase", topoinv::to_json(p.berry)},
                  {"sqrt_berry_phase", topoinv::to_json(p.sqrt_berry)},
                  {"imag_contamination", p.imag_contamination},
                  {"kramers_residual", p.kramers_residual}};
    };
    json j{{"delta", topoinv::to_json(delta.delta)},
           {"kappa", topoinv::to_json(kappa.kappa)},
           {"agree", agree},
           {"T0", loop(delta.t0)},
           {"Tpi", loop(delta.tpi)},
           {"ebz_curvature", delta.ebz_curvature},
           {"chern", topoinv::to_json(delta.chern)},
           {"sqrt_wz_T0", topoinv::to_json(kappa.t0.value)},
           {"sqrt_wz_Tpi", topoinv::to_json(kappa.tpi.value)},
           {"reduced_3d", kappa.reduced_3d}};
    if (kappa.direct_3d) {
      j["direct_3d"] = *kappa.direct_3d;
      j["direct_relative_discrepancy"] = *kappa.relative_discrepancy;
    }
    return j;
  }
};

inline FkmReport run_fkm(const BlochHamiltonianSpec& spec, const FkmOptions& opts,
                         const Tolerances& tol = default_tolerances()) {
  const auto family = make_projector_family(spec, 0.0);
  const TRSOperator theta(family.dim());
  FkmReport r;
  DeltaOptions d;
  d.n = opts.grid;
  if (opts.seed != 0) d.basis_seed = opts.seed;
  r.delta = delta_invariant(family, theta, d, tol);
  KappaOptions k;
  k.n_loop = 2 * opts.grid;
  k.n2d = opts.grid;
  k.n3d = opts.grid / 2;
  k.n_t = opts.grid_t;
  r.kappa = kappa_invariant(family, theta, k, tol);
  r.agree = r.snapped() && r.kappa.kappa.integer() == (r.delta.delta.integer() == 1 ? -1 : 1);
  return r;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

namespace detail {

inline ResultRow sweep_point(const SweepJob& job, const std::map<std::string, double>& params,
                             const std::vector<std::string>& names, unsigned seed, const Tolerances& tol) {
  ResultRow row;
  row.model = job.model;
  for (const auto& n : names) row.parameter_values.push_back(params.at(n));
  auto wants = [&](const char* what) { return std::find(job.invariants.begin(), job.invariants.end(), what) != job.invariants.end(); };
  std::vector<std::string> notes;
  try {
    const auto spec = builtin_model(job.model, params);
    const auto family = make_projector_family(spec, 0.0);
    const TRSOperator theta(family.dim());
    const bool trs = family.dim() % 2 == 0 && check_trs(family, theta, 32, tol).ok;
    if (wants("chern")) {
      auto c = chern_number(berry_curvature(family, job.grid), tol);
      row.chern = c.integer();
      row.residual_max = std::max(row.residual_max, c.residual);
      if (!c.ok()) notes.push_back("Unsnapped(chern)");
    }
    if (trs && (wants("delta") || wants("kappa"))) {
      DeltaOptions d;
      d.n = job.grid;
      if (seed != 0) d.basis_seed = seed;
      auto rep = delta_invariant(family, theta, d, tol);
      row.berry_phase_t0 = rep.t0.berry.phase();
      row.berry_phase_tpi = rep.tpi.berry.phase();
      if (wants("delta")) {
        row.delta = rep.delta.integer();
        row.residual_max = std::max(row.residual_max, rep.delta.residual);
        if (!rep.delta.ok()) notes.push_back("Unsnapped(delta)");
      }
      if (wants("kappa")) {
        KappaOptions k;
        k.n_loop = 2 * job.grid;
        k.n2d = job.grid;
        k.direct = false;
        auto kap = kappa_invariant(family, theta, k, tol);
        row.kappa = static_cast<int>(kap.kappa.integer());
        row.residual_max = std::max(row.residual_max, kap.kappa.residual);
        if (!kap.kappa.ok()) notes.push_back("Unsnapped(kappa)");
      }
    } else {
      for (double a : {0.0, kPi}) {
        auto r = transport_loop(LoopFamily::at_k1(family, a), 2 * job.grid, tol);
        const double phase = std::arg(wilson_holonomy(r).determinant());
        (a == 0.0 ? row.berry_phase_t0 : row.berry_phase_tpi) = phase;
      }
      if (wants("delta") || wants("kappa")) notes.push_back("NotTRS");
    }
  } catch (const Error& e) {
    notes.push_back(to_string(e.kind()));
  }
  if (!notes.empty()) {
    row.status.clear();
    for (std::size_t i = 0; i < notes.size(); ++i) row.status += (i ? ";" : "") + notes[i];
  }
  return row;
}

}  // namespace detail

struct SweepResult {
  std::vector<std::string> parameter_names;
  std::vector<ResultRow> rows;
};

/// Evaluates every point of the job on `workers` threads. Rows come back in
/// the order of SweepJob::points() regardless of scheduling.
inline SweepResult run_sweep(SweepJob job, unsigned seed = 0, unsigned workers = 0,
                             const Tolerances& tol = default_tolerances()) {
  // Unset parameters take the model defaults; throws UnknownModel.
  const auto defaults = default_parameters(job.model);
  for (const auto& [name, value] : defaults) job.base_parameters.try_emplace(name, value);
  for (const auto& r : job.ranges) {
    if (!defaults.count(r.name)) throw Error(ErrorKind::BadConfig, "model " + job.model + " has no parameter '" + r.name + "'");
  }
  const auto points = job.points();
  SweepResult out;
  for (const auto& [name, value] : points.front()) out.parameter_names.push_back(name);
  out.rows.resize(points.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(points.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      out.rows[i] = detail::sweep_point(job, points[i], out.parameter_names, seed, tol);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace topoinv
