#pragma once

#include <chrono>
#include <functional>
#include <random>

#include "topoinv/oracles/lattice.hpp"
#include "topoinv/pipeline.hpp"

namespace topoinv {

struct CertifyOptions {
  int grid = 64;      // 3D momentum grid; the 2D grid is 2x and loop grids 4x this
  int grid_t = 64;    // Simpson intervals in t
  unsigned seed = 2024;

  int grid2d() const { return 2 * grid; }
  int loop() const { return 4 * grid; }
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst residual
  double threshold = 0.0;
  double seconds = 0.0;
  std::string detail;
  json data = json::object();
};

struct CertifyReport {
  CertifyOptions options;
  std::vector<CriterionResult> criteria;

  bool pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.pass; });
  }

  json to_json() const {
    json list = json::array();
    for (const auto& c : criteria) {
      list.push_back({{"id", c.id},
                      {"name", c.name},
                      {"pass", c.pass},
                      {"measured", c.measured},
                      {"threshold", c.threshold},
                      {"seconds", c.seconds},
                      {"detail", c.detail},
                      {"data", c.data}});
    }
    return {{"grid", options.grid}, {"grid_t", options.grid_t}, {"seed", options.seed}, {"pass", pass()}, {"criteria", list}};
  }
};

namespace certify {

inline double lattice_distance(double x, double period) { return std::abs(x - period * std::round(x / period)); }

inline ProjectorFamily family_of(const std::string& name, const std::map<std::string, double>& p = {}) {
  return make_projector_family(builtin_model_with_defaults(name, p), 0.0);
}

inline oracles::HamiltonianFn hamiltonian_of(const std::string& name, const std::map<std::string, double>& p = {}) {
  auto h = builtin_model_with_defaults(name, p);
  return [h](double k1, double k2) { return h.at(k1, k2); };
}

struct NamedModel {
  std::string label;
  std::string name;
  std::map<std::string, double> params;
};

inline std::vector<NamedModel> chern_models() {
  return {{"haldane(topological)", "haldane", {}}, {"haldane(trivial)", "haldane", {{"M", 2.5}}}, {"kane_mele", "kane_mele", {}}};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// |exp(i S_WZ[U_P]) - (-1)^C| with the extension exp(i pi t P).
inline double up_residual(const ProjectorFamily& f, long chern, int n, int n_t) {
  auto grid = std::make_shared<const ProjectorGrid>(f, n);
  const auto v = wz_action_extension(up_extension(grid), {n, n_t});
  return std::abs(v.amplitude - (chern % 2 == 0 ? 1.0 : -1.0));
}

/// |WZ amplitude of phi - Berry phase of the transported frame| on one loop.
inline double phi_berry_residual(const LoopFamily& loop, int n, double* link_residual = nullptr) {
  const auto amp = wz_amplitude_phi(loop, nullptr, n);
  const auto r = transport_loop(loop, n);
  const auto spec = hermitian_spectrum(r.p0);
  const Mat basis = spec.vectors.rightCols(loop.family().rank());
  const auto berry = berry_phase(berry_connection(build_frame(r, basis)));
  if (link_residual) *link_residual = std::abs(amp.value.amplitude - link_berry_phase(loop, n));
  return std::abs(amp.value.amplitude - berry.raw);
}

/// Worst |sqrt WZ amplitude - sqrt Berry phase| over the TRS frame and
/// `gauges` random TRS re-gaugings of it.
inline double sqrt_residual(const LoopFamily& loop, const TRSOperator& theta, int n, int gauges, unsigned seed) {
  const auto amp = wz_amplitude_phi(loop, &theta, n);
  TrsFrameOptions o;
  o.n = n;
  const auto frame = build_trs_frame(loop, theta, o).frame;
  double worst = std::abs(amp.value.amplitude - berry_phase_sqrt(berry_connection(frame)).raw);
  const int m = loop.family().rank();
  for (int g = 0; g < gauges; ++g) {
    const auto gauge = random_trs_gauge(static_cast<int>(frame.vectors.size()), m, seed + static_cast<unsigned>(g));
    const auto moved = gauge_transform(frame, gauge);
    worst = std::max(worst, std::abs(amp.value.amplitude - berry_phase_sqrt(berry_connection(moved)).raw));
  }
  return worst;
}

/// |direct - reduced| / max(1, |reduced|) for the Phi 3-form over [0,1] x EBZ.
inline double phi_discrepancy(const ProjectorFamily& f, int n3d, int n_t, int n2d, double* direct_out = nullptr,
                              double* reduced_out = nullptr) {
  auto grid = std::make_shared<const ProjectorGrid>(f, n3d);
  const double direct = 12.0 * kPi * integrate_chi(phi_extension(grid), {n3d, n_t, true});
  const double reduced = 12.0 * kPi * curvature_integral_ebz(berry_curvature(f, n2d));
  if (direct_out) *direct_out = direct;
  if (reduced_out) *reduced_out = reduced;
  return std::abs(direct - reduced) / std::max(1.0, std::abs(reduced));
}

struct HomotopyTrial {
  std::array<int, 4> windings;  // n_g, m_g, n_h, m_h
  TrigHermitian g0, g1, h0, h1;
};

inline std::vector<HomotopyTrial> homotopy_trials(int count, unsigned seed, int dim = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> w(-2, 2);
  std::vector<HomotopyTrial> out;
  for (int i = 0; i < count; ++i) {
    HomotopyTrial t;
    for (auto& x : t.windings) x = w(rng);
    const unsigned base = seed + 100u * static_cast<unsigned>(i);
    t.g0 = random_trig_hermitian(dim, base + 1);
    t.g1 = random_trig_hermitian(dim, base + 2);
    t.h0 = random_trig_hermitian(dim, base + 3);
    t.h1 = random_trig_hermitian(dim, base + 4);
    out.push_back(std::move(t));
  }
  return out;
}

/// PW and APW along s in {0, 1/4, ..., 1}.
inline std::pair<std::vector<double>, std::vector<double>> homotopy_values(const HomotopyTrial& t, const Quadrature3D& q,
                                                                           int points = 5) {
  const int dim = t.g0.dim;
  const auto ng = normal_form_field(t.windings[0], t.windings[1], dim);
  const auto nh = normal_form_field(t.windings[2], t.windings[3], dim);
  std::vector<double> pw, apw;
  for (int i = 0; i < points; ++i) {
    const double s = static_cast<double>(i) / (points - 1);
    const auto g = exp_extension(ng, TrigHermitian::blend(t.g0, t.g1, s));
    const auto h = exp_extension(nh, TrigHermitian::blend(t.h0, t.h1, s));
    pw.push_back(pw_functional(g, h, q).value);
    apw.push_back(apw_functional(g, h, q).value);
  }
  return {pw, apw};
}

inline double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

/// Max over U_P extensions of the distance of S[alt] - S[exp(i pi t P)] to 2 pi Z.
inline double extension_residual(const ProjectorFamily& f, int n, int n_t, json* data = nullptr) {
  auto grid = std::make_shared<const ProjectorGrid>(f, n);
  const Quadrature3D q{n, n_t};
  const double base = wz_action_extension(up_extension(grid), q).action;
  struct Alt {
    const char* name;
    ExtensionField ext;
  };
  const std::vector<Alt> alts{
      {"exp(-i pi t P)", projector_exponential_extension(grid, -kPi)},
      {"exp(3 i pi t P)", projector_exponential_extension(grid, 3.0 * kPi)},
      {"exp(i pi t(2-t) P)", extension_reparametrized(up_extension(grid), [](double t) { return t * (2.0 - t); },
                                                      [](double t) { return 2.0 - 2.0 * t; })}};
  double worst = 0.0;
  for (const auto& a : alts) {
    const double s = wz_action_extension(a.ext, q).action;
    worst = std::max(worst, lattice_distance(s - base, kTwoPi));
    if (data) (*data)[a.name] = {{"action", s}, {"difference_over_2pi", (s - base) / kTwoPi}};
  }
  if (data) (*data)["exp(i pi t P)"] = base;
  return worst;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

inline CriterionResult wz_chern(const CertifyOptions& o) {
  CriterionResult c{1, "WZ action of U_P against (-1)^Chern", false, 0.0, 1e-5};
  bool ok = true;
  double slowest = 0.0;
  for (const auto& m : chern_models()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f = family_of(m.name, m.params);
    const auto chern = chern_number(berry_curvature(f, o.grid2d()));
    const long oracle = std::lround(oracles::fhs_chern(hamiltonian_of(m.name, m.params), 0.0, o.grid2d()));
    const double r = up_residual(f, chern.integer(), o.grid, o.grid_t);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    c.measured = std::max(c.measured, r);
    ok = ok && chern.ok() && chern.integer() == oracle && r < c.threshold && secs < 60.0;
    c.data[m.label] = {{"chern", chern.integer()}, {"oracle", oracle}, {"residual", r}, {"seconds", secs}};
  }
  c.pass = ok;
  c.detail = "grid " + std::to_string(o.grid) + "^2 x " + std::to_string(o.grid_t) + ", slowest model " + format_double(slowest) + " s";
  return c;
}

inline CriterionResult phi_berry(const CertifyOptions& o) {
  CriterionResult c{2, "WZ amplitude of phi equals the Berry phase", false, 0.0, 1e-6};
  double link = 0.0;
  for (const char* name : {"haldane", "kane_mele", "flat_two_band"}) {
    const auto f = family_of(name);
    for (double a : {0.0, kPi}) {
      double l = 0.0;
      const double r = phi_berry_residual(LoopFamily::at_k1(f, a), o.loop(), &l);
      c.measured = std::max(c.measured, r);
      link = std::max(link, l);
      c.data[std::string(name) + (a == 0.0 ? "/T0" : "/Tpi")] = {{"residual", r}, {"overlap_oracle", l}};
    }
  }
  c.pass = c.measured < c.threshold && link < 1e-6;
  c.detail = "loop grid " + std::to_string(o.loop()) + ", overlap oracle " + format_double(link);
  return c;
}

inline CriterionResult sqrt_channel(const CertifyOptions& o) {
  CriterionResult c{3, "square roots of WZ amplitude and Berry phase", false, 0.0, 1e-6};
  const auto f = family_of("kane_mele");
  const TRSOperator theta(4);
  for (double a : {0.0, kPi}) {
    const double r = sqrt_residual(LoopFamily::at_k1(f, a), theta, o.loop(), 10, o.seed);
    c.measured = std::max(c.measured, r);
    c.data[a == 0.0 ? "T0" : "Tpi"] = r;
  }
  c.pass = c.measured < c.threshold;
  c.detail = "kane_mele, frame plus 10 random TRS gauges per loop";
  return c;
}

inline CriterionResult fkm_sweep(const CertifyOptions& o) {
  CriterionResult c{4, "K = (-1)^delta on a kane_mele sweep", false, 0.0, 1e-3};
  const TRSOperator theta(4);
  const double lso = default_parameters("kane_mele").at("lambda_so");
  int used = 0, topo = 0, triv = 0, disagreements = 0;
  json points = json::array();
  for (int i = 0; i <= 32; ++i) {
    const double lv = lso * 8.0 * i / 32.0;
    const std::map<std::string, double> p{{"lambda_v", lv}};
    const auto spec = builtin_model_with_defaults("kane_mele", p);
    const double gap = min_gap(spec, 0.0, 96);
    json pt{{"lambda_v", lv}, {"gap", gap}};
    if (gap < 0.1) {
      pt["excluded"] = "gap below 0.1";
      points.push_back(pt);
      continue;
    }
    const auto f = make_projector_family(spec, 0.0);
    DeltaOptions d;
    d.n = o.loop() / 2;
    const auto delta = delta_invariant(f, theta, d);
    KappaOptions k;
    k.n_loop = o.loop();
    k.n2d = o.grid2d();
    k.direct = false;
    const auto kappa = kappa_invariant(f, theta, k).kappa;
    const int oracle = oracles::fh_z2(hamiltonian_of("kane_mele", p), 0.0, 32);
    const bool agree = delta.delta.ok() && kappa.ok() && kappa.integer() == (delta.delta.integer() == 1 ? -1 : 1) &&
                       delta.delta.integer() == oracle;
    c.measured = std::max({c.measured, delta.delta.residual, kappa.residual});
    ++used;
    (delta.delta.integer() == 1 ? topo : triv)++;
    if (!agree) ++disagreements;
    pt["delta"] = delta.delta.integer();
    pt["kappa"] = kappa.integer();
    pt["oracle"] = oracle;
    pt["residuals"] = {delta.delta.residual, kappa.residual};
    points.push_back(pt);
  }
  c.data["points"] = points;
  c.pass = disagreements == 0 && used >= 20 && topo > 0 && triv > 0 && c.measured < c.threshold;
  c.detail = std::to_string(used) + " gapped points (" + std::to_string(topo) + " topological, " + std::to_string(triv) +
             " trivial), " + std::to_string(disagreements) + " disagreements";
  return c;
}

inline CriterionResult phi_reduction(const CertifyOptions& o) {
  CriterionResult c{5, "direct 3D Phi integral against its 2D reduction", false, 0.0, 1e-5};
  for (const auto& m : std::vector<NamedModel>{{"kane_mele", "kane_mele", {}},
                                              {"kane_mele(trivial)", "kane_mele", {{"lambda_v", 1.5}}},
                                              {"haldane", "haldane", {}}}) {
    double direct = 0.0, reduced = 0.0;
    const double r = phi_discrepancy(family_of(m.name, m.params), o.grid, o.grid_t, o.grid2d(), &direct, &reduced);
    c.measured = std::max(c.measured, r);
    c.data[m.label] = {{"direct", direct}, {"reduced", reduced}, {"relative", r}};
  }
  c.pass = c.measured < c.threshold;
  c.detail = "relative to max(1, |reduced|), " + std::to_string(o.grid) + "^2 x " + std::to_string(o.grid_t) + " vs " +
             std::to_string(o.grid2d()) + "^2";
  return c;
}

inline CriterionResult apw_normal_forms(const CertifyOptions& o) {
  CriterionResult c{6, "APW on normal forms and equivariant fields", false, 0.0, 1e-6};
  const Quadrature3D q{8, 2};
  double eq_lattice = 0.0;
  int pairs = 0;
  for (int ng = -3; ng <= 3; ++ng)
    for (int mg = -3; mg <= 3; ++mg)
      for (int nh = -3; nh <= 3; ++nh)
        for (int mh = -3; mh <= 3; ++mh) {
          const double cross = ng * mh - mg * nh;
          const auto g = constant_extension(normal_form_field(ng, mg, 2));
          const auto h = constant_extension(normal_form_field(nh, mh, 2));
          c.measured = std::max(c.measured, std::abs(apw_functional(g, h, q).value + kTwoPi * cross));
          const auto ge = constant_extension(normal_form_field(ng, mg, 2, true));
          const auto he = constant_extension(normal_form_field(nh, mh, 2, true));
          const double ve = apw_functional(ge, he, q).value;
          c.measured = std::max(c.measured, std::abs(ve + 2.0 * kTwoPi * cross));
          eq_lattice = std::max(eq_lattice, lattice_distance(ve, 2.0 * kTwoPi));
          ++pairs;
        }
  // Equivariant fields that are not normal forms.
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> w(-2, 2);
  double random_lattice = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int a = w(rng), b = w(rng), cc = w(rng), d = w(rng);
    const auto g = exp_extension(normal_form_field(a, b, 2, true), random_trig_hermitian(2, o.seed + 7u * i + 1, 1, 0.5, true));
    const auto h = exp_extension(normal_form_field(cc, d, 2, true), random_trig_hermitian(2, o.seed + 7u * i + 2, 1, 0.5, true));
    const double v = apw_functional(g, h, {24, o.grid_t}).value;
    random_lattice = std::max(random_lattice, lattice_distance(v, 2.0 * kTwoPi));
  }
  c.measured = std::max({c.measured, eq_lattice, random_lattice});
  c.pass = c.measured < c.threshold;
  c.data = {{"pairs", pairs}, {"equivariant_normal_lattice", eq_lattice}, {"equivariant_random_lattice", random_lattice}};
  c.detail = std::to_string(pairs) + " winding pairs, 10 random equivariant pairs in 4 pi Z within " + format_double(random_lattice);
  return c;
}

inline CriterionResult pw_anomaly(const CertifyOptions&) {
  CriterionResult c{7, "PW anomaly on normal forms", false, 0.0, 1e-6};
  const Quadrature3D q{8, 2};
  double other_sign = 0.0;
  int odd = 0, odd_off_lattice = 0;
  for (int ng = -3; ng <= 3; ++ng)
    for (int mg = -3; mg <= 3; ++mg)
      for (int nh = -3; nh <= 3; ++nh)
        for (int mh = -3; mh <= 3; ++mh) {
          const double cross = ng * mh - mg * nh;
          const double v = pw_functional(constant_extension(normal_form_field(ng, mg, 2)),
                                         constant_extension(normal_form_field(nh, mh, 2)), q).value;
          c.measured = std::max(c.measured, std::abs(v + kPi * cross));
          // The opposite-sign expression pi * cross agrees modulo 2 pi.
          other_sign = std::max(other_sign, lattice_distance(v - kPi * cross, kTwoPi));
          if (std::lround(cross) % 2 != 0) {
            ++odd;
            if (lattice_distance(v, kTwoPi) > kPi - 1e-6) ++odd_off_lattice;
          }
        }
  c.pass = c.measured < c.threshold && odd > 0 && odd_off_lattice == odd;
  c.data = {{"odd_pairs", odd}, {"odd_not_in_2piZ", odd_off_lattice}, {"opposite_sign_mod_2pi", other_sign}};
  c.detail = "PW = -pi(n_g m_h - m_g n_h); " + std::to_string(odd_off_lattice) + "/" + std::to_string(odd) +
             " odd pairs at distance pi from 2 pi Z";
  return c;
}

inline CriterionResult homotopy_invariance(const CertifyOptions& o) {
  CriterionResult c{8, "PW and APW along homotopies", false, 0.0, 1e-5};
  const Quadrature3D q{20, o.grid_t / 2};
  double to_normal = 0.0;
  for (const auto& t : homotopy_trials(20, o.seed)) {
    const auto [pw, apw] = homotopy_values(t, q);
    c.measured = std::max({c.measured, spread(pw), spread(apw)});
    const double cross = t.windings[0] * t.windings[3] - t.windings[1] * t.windings[2];
    for (double v : pw) to_normal = std::max(to_normal, std::abs(v + kPi * cross));
    for (double v : apw) to_normal = std::max(to_normal, std::abs(v + kTwoPi * cross));
  }
  c.pass = c.measured < c.threshold;
  c.data = {{"max_distance_to_normal_form_value", to_normal}};
  c.detail = "20 trials x 5 points, grid 20^2 x " + std::to_string(q.n_t) + ", distance to normal-form value " + format_double(to_normal);
  return c;
}

inline CriterionResult equivariant_winding(const CertifyOptions& o) {
  CriterionResult c{9, "equivariant loop fields have even winding", false, 0.0, 1e-8};
  int odd = 0;
  json hist = json::object();
  for (int i = 0; i < 100; ++i) {
    const int dim = 2 * (1 + i % 3);
    const auto w = winding_samples(random_equivariant_loop(dim, 1024, o.seed + static_cast<unsigned>(i)));
    c.measured = std::max(c.measured, w.residual);
    if (w.value % 2 != 0) ++odd;
    const auto key = std::to_string(w.value);
    hist[key] = hist.value(key, 0) + 1;
  }
  c.pass = odd == 0 && c.measured < c.threshold;
  c.data = {{"winding_histogram", hist}, {"odd", odd}};
  c.detail = "100 fields (dims 2, 4, 6), " + std::to_string(odd) + " odd";
  return c;
}

inline CriterionResult extension_independence(const CertifyOptions& o) {
  CriterionResult c{10, "extensions of U_P differ by 2 pi Z", false, 0.0, 1e-5};
  for (const auto& m : std::vector<NamedModel>{{"haldane", "haldane", {}}, {"kane_mele", "kane_mele", {}}}) {
    json d;
    c.measured = std::max(c.measured, extension_residual(family_of(m.name, m.params), o.grid, o.grid_t, &d));
    c.data[m.label] = d;
  }
  c.pass = c.measured < c.threshold;
  c.detail = "three alternative extensions per model";
  return c;
}

/// Residual series under grid doubling: r(2N) <= max(r(N) / 10, 1e-8).
struct Series {
  std::string name;
  std::vector<int> grids;
  std::vector<double> residuals;

  /// Worst r(2N) / max(r(N) / 10, 1e-8); at most 1 when converging.
  double worst_ratio() const {
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < residuals.size(); ++i)
      w = std::max(w, residuals[i + 1] / std::max(residuals[i] / 10.0, 1e-8));
    return w;
  }
  bool converges() const { return worst_ratio() <= 1.0; }
};

inline CriterionResult convergence(const CertifyOptions& o) {
  CriterionResult c{11, "residuals converge under grid doubling", false, 0.0, 1.0};
  std::vector<Series> series;
  const int g = o.grid, gt = o.grid_t;
  const auto haldane = family_of("haldane");
  const auto km = family_of("kane_mele");
  const long ch = chern_number(berry_curvature(haldane, o.grid2d())).integer();
  auto doubling = [](int top) { return std::vector<int>{top / 4, top / 2, top}; };

  auto run = [&](std::string name, std::vector<int> grids, const std::function<double(int)>& f) {
    Series s{std::move(name), grids, {}};
    for (int n : grids) s.residuals.push_back(f(n));
    series.push_back(std::move(s));
  };
  run("1: U_P residual vs momentum grid", doubling(g), [&](int n) { return up_residual(haldane, ch, n, gt); });
  run("1: U_P residual vs t grid", doubling(gt / 4), [&](int n) { return up_residual(haldane, ch, g, n); });
  run("2: phi/Berry residual vs loop grid", doubling(o.loop()),
      [&](int n) { return phi_berry_residual(LoopFamily::at_k1(haldane, 0.0), n); });
  run("3: sqrt residual vs loop grid", doubling(o.loop()),
      [&](int n) { return sqrt_residual(LoopFamily::at_k1(km, kPi), TRSOperator(4), n, 2, o.seed); });
  run("4: delta snap residual vs loop grid", doubling(o.loop() / 4), [&](int n) {
    DeltaOptions d;
    d.n = n;
    return delta_invariant(km, TRSOperator(4), d).delta.residual;
  });
  run("5: Phi discrepancy vs 3D momentum grid", doubling(g), [&](int n) { return phi_discrepancy(km, n, gt, o.grid2d()); });
  run("8: APW quadrature error vs t grid", doubling(gt / 2), [&](int n) {
    const auto t = homotopy_trials(1, o.seed).front();
    const auto ng = normal_form_field(t.windings[0], t.windings[1], 2);
    const auto nh = normal_form_field(t.windings[2], t.windings[3], 2);
    const double cross = t.windings[0] * t.windings[3] - t.windings[1] * t.windings[2];
    return std::abs(apw_functional(exp_extension(ng, t.g0), exp_extension(nh, t.h0), {20, n}).value + kTwoPi * cross);
  });
  run("10: extension residual vs t grid", doubling(gt / 2), [&](int n) { return extension_residual(haldane, g, n); });

  bool ok = true;
  json data = json::array();
  std::string failing;
  for (const auto& s : series) {
    const bool conv = s.converges();
    ok = ok && conv;
    if (!conv) failing += (failing.empty() ? "" : "; ") + s.name;
    c.measured = std::max(c.measured, s.worst_ratio());
    data.push_back({{"name", s.name}, {"grids", s.grids}, {"residuals", s.residuals}, {"converges", conv}});
  }
  c.data = data;
  c.pass = ok;
  c.detail = ok ? std::to_string(series.size()) + " series converge" : "not converging: " + failing;
  return c;
}

}  // namespace certify

using CriterionFn = std::function<CriterionResult(const CertifyOptions&)>;

inline std::vector<CriterionFn> certify_criteria() {
  using namespace certify;
  return {wz_chern, phi_berry, sqrt_channel, fkm_sweep, phi_reduction, apw_normal_forms,
          pw_anomaly, homotopy_invariance, equivariant_winding, extension_independence, convergence};
}

/// Runs every criterion; failures (including thrown errors) are recorded,
/// never propagated. `on_result` sees each criterion as it completes.
inline CertifyReport run_certify(const CertifyOptions& opts,
                                 const std::function<void(const CriterionResult&)>& on_result = {}) {
  CertifyReport report;
  report.options = opts;
  const auto all = certify_criteria();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = all[i](opts);
    } catch (const std::exception& e) {
      r.id = static_cast<int>(i) + 1;
      r.name = "criterion " + std::to_string(i + 1);
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = certify::seconds_since(t0);
    if (on_result) on_result(r);
    report.criteria.push_back(std::move(r));
  }
  return report;
}

}  // namespace topoinv
