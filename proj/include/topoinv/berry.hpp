#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topoinv/config.hpp"
#include "topoinv/core.hpp"
#include "topoinv/error.hpp"
#include "topoinv/linalg.hpp"
#include "topoinv/transport.hpp"

namespace topoinv {

// ---------------------------------------------------------------------------
// Invariant results
// ---------------------------------------------------------------------------

enum class InvariantKind { Chern, Delta, Kappa, BerryPhase, SqrtBerryPhase, WZAmplitude, SqrtWZAmplitude };

inline const char* to_string(InvariantKind k) {
  switch (k) {
    case InvariantKind::Chern: return "chern";
    case InvariantKind::Delta: return "delta";
    case InvariantKind::Kappa: return "kappa";
    case InvariantKind::BerryPhase: return "berry_phase";
    case InvariantKind::SqrtBerryPhase: return "sqrt_berry_phase";
    case InvariantKind::WZAmplitude: return "wz_amplitude";
    case InvariantKind::SqrtWZAmplitude: return "sqrt_wz_amplitude";
  }
  return "unknown";
}

enum class SnapStatus { Snapped, Unsnapped, NotApplicable };

/// A computed invariant: raw value, snapped value and their distance.
/// Unsnapped results are ordinary values, never exceptions.
struct InvariantResult {
  InvariantKind kind = InvariantKind::Chern;
  cplx raw;
  cplx snapped;
  double residual = 0.0;
  SnapStatus status = SnapStatus::NotApplicable;
  int grid = 0;

  bool ok() const { return status != SnapStatus::Unsnapped; }
  long integer() const { return std::lround(snapped.real()); }
  double phase() const { return std::arg(snapped); }
};

/// Nearest integer; `mod2` reduces the snapped value after snapping.
inline InvariantResult snap_integer(InvariantKind kind, double raw, int grid, bool mod2 = false,
                                    const Tolerances& tol = default_tolerances()) {
  InvariantResult r;
  r.kind = kind;
  r.raw = raw;
  r.grid = grid;
  const double nearest = std::round(raw);
  r.residual = std::abs(raw - nearest);
  double value = nearest;
  if (mod2) value = static_cast<double>(((std::lround(nearest) % 2) + 2) % 2);
  r.snapped = value;
  r.status = r.residual < tol.snap ? SnapStatus::Snapped : SnapStatus::Unsnapped;
  return r;
}

/// Nearest of {+1, -1} for a unit complex number.
inline InvariantResult snap_sign(InvariantKind kind, cplx raw, int grid, const Tolerances& tol = default_tolerances()) {
  InvariantResult r;
  r.kind = kind;
  r.raw = raw;
  r.grid = grid;
  r.snapped = raw.real() >= 0 ? 1.0 : -1.0;
  r.residual = std::abs(raw - r.snapped);
  r.status = r.residual < tol.snap ? SnapStatus::Snapped : SnapStatus::Unsnapped;
  return r;
}

inline InvariantResult unit_phase(InvariantKind kind, cplx raw, int grid) {
  InvariantResult r;
  r.kind = kind;
  r.raw = raw;
  r.grid = grid;
  r.snapped = raw / std::abs(raw);
  r.residual = std::abs(raw - r.snapped);
  r.status = SnapStatus::NotApplicable;
  return r;
}

// ---------------------------------------------------------------------------
// Connection and phases
// ---------------------------------------------------------------------------

enum class ConnectionMethod { Spectral, Central4, Analytic };

struct ConnectionSamples {
  std::vector<double> k;
  std::vector<double> a;
  double imag_contamination = 0.0;  // max |Re tr(E* dE)|
  bool trs_frame = false;
  ConnectionMethod method = ConnectionMethod::Spectral;

  /// Periodic trapezoid of A over the loop.
  double integral() const {
    double s = 0.0;
    for (double v : a) s += v;
    return s * kTwoPi / static_cast<double>(a.size());
  }
};

/// A = -i tr(E* dE/dk). Frame derivatives come from the periodic spectral or
/// fourth-order stencil, or from the frame's analytic derivatives.
inline ConnectionSamples berry_connection(const BlochFrame& frame, ConnectionMethod method = ConnectionMethod::Spectral) {
  ConnectionSamples c;
  c.k = frame.k;
  c.trs_frame = frame.trs_flag;
  c.method = method;
  std::vector<Mat> de;
  if (method == ConnectionMethod::Analytic) {
    if (!frame.has_derivatives()) throw Error(ErrorKind::BadConfig, "frame carries no analytic derivatives");
    de = frame.derivatives;
  } else {
    de = periodic_derivative(frame.vectors, method == ConnectionMethod::Spectral ? Stencil::Spectral : Stencil::Central4);
  }
  c.a.resize(frame.vectors.size());
  for (std::size_t j = 0; j < frame.vectors.size(); ++j) {
    const cplx tr = (frame.vectors[j].adjoint() * de[j]).trace();
    const cplx a = -kI * tr;
    c.a[j] = a.real();
    c.imag_contamination = std::max(c.imag_contamination, std::abs(a.imag()));
  }
  return c;
}

inline InvariantResult berry_phase(const ConnectionSamples& c) {
  return unit_phase(InvariantKind::BerryPhase, std::exp(-kI * c.integral()), static_cast<int>(c.a.size()));
}

inline InvariantResult berry_phase_sqrt(const ConnectionSamples& c) {
  if (!c.trs_frame) throw Error(ErrorKind::NotTRSFrame, "square-root Berry phase needs a time-reversal symmetric frame");
  return unit_phase(InvariantKind::SqrtBerryPhase, std::exp(-0.5 * kI * c.integral()), static_cast<int>(c.a.size()));
}

/// Gauge-invariant overlap product conj(prod det(V_j* V_{j+1})) over the loop,
/// with one Richardson step between n and 2n points. Independent of frames.
inline cplx link_berry_phase(const LoopFamily& loop, int n) {
  auto product = [&](int pts) {
    std::vector<Mat> v(static_cast<std::size_t>(pts));
    const int m = loop.rank();
    for (int j = 0; j < pts; ++j) {
      auto spec = hermitian_spectrum(loop(periodic_node(j, pts)));
      v[static_cast<std::size_t>(j)] = spec.vectors.rightCols(m);
    }
    cplx z = 1.0;
    for (int j = 0; j < pts; ++j) {
      const cplx d = (v[static_cast<std::size_t>(j)].adjoint() * v[static_cast<std::size_t>((j + 1) % pts)]).determinant();
      z *= d / std::abs(d);
    }
    return std::conj(z);
  };
  const cplx coarse = product(n), fine = product(2 * n);
  const double diff = std::arg(fine / coarse);
  return fine * std::exp(kI * (diff / 3.0));
}

// ---------------------------------------------------------------------------
// Curvature and Chern number
// ---------------------------------------------------------------------------

struct CurvatureField {
  int n = 0;                   // n x n grid, row-major in (k1, k2)
  std::vector<double> omega;
  double imag_contamination = 0.0;

  double at(int i, int j) const { return omega[static_cast<std::size_t>(((i % n + n) % n) * n + ((j % n + n) % n))]; }
};

/// Omega = -i Tr(P [d1 P, d2 P]) on the periodic n x n grid.
inline CurvatureField berry_curvature(const ProjectorFamily& family, int n) {
  if (family.domain() == Domain::Loop) throw Error(ErrorKind::BadDims, "curvature needs a 2D family");
  CurvatureField f;
  f.n = n;
  f.omega.resize(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k1 = periodic_node(i, n), k2 = periodic_node(j, n);
      const Mat p = family(k1, k2);
      const auto g = family.gradient(k1, k2);
      const cplx w = -kI * (p * commutator(g[0], g[1])).trace();
      f.omega[static_cast<std::size_t>(i * n + j)] = w.real();
      f.imag_contamination = std::max(f.imag_contamination, std::abs(w.imag()));
    }
  }
  return f;
}

inline double curvature_integral(const CurvatureField& f) {
  double s = 0.0;
  for (double v : f.omega) s += v;
  const double h = kTwoPi / f.n;
  return s * h * h;
}

/// Integral of Omega over the half zone k1 in [0, pi].
inline double curvature_integral_ebz(const CurvatureField& f) {
  const auto w = half_period_weights(f.n);
  const double h = kTwoPi / f.n;
  double s = 0.0;
  for (int i = 0; i < f.n; ++i) {
    double row = 0.0;
    for (int j = 0; j < f.n; ++j) row += f.at(i, j);
    s += w[static_cast<std::size_t>(i)] * row * h;
  }
  return s;
}

inline InvariantResult chern_number(const CurvatureField& f, const Tolerances& tol = default_tolerances()) {
  return snap_integer(InvariantKind::Chern, curvature_integral(f) / kTwoPi, f.n, false, tol);
}

// ---------------------------------------------------------------------------
// Gauges
// ---------------------------------------------------------------------------

struct GaugeField {
  std::vector<double> k;
  std::vector<Mat> u;
  bool trs_flag = false;

  /// max ||u(-k) - J^{-1} conj(u(k)) J|| on the grid.
  double trs_residual() const {
    const int n = static_cast<int>(u.size());
    const Mat j = symplectic_matrix(u.front().rows());
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
      const Mat& mirror = u[static_cast<std::size_t>((n - i) % n)];
      r = std::max(r, norm(mirror - j.transpose() * u[static_cast<std::size_t>(i)].conjugate() * j));
    }
    return r;
  }
  double unitarity() const {
    double r = 0.0;
    for (const auto& x : u) r = std::max(r, unitarity_residual(x));
    return r;
  }
};

/// E'(k) = E(k) u(k). The transformed frame carries no analytic derivatives.
inline BlochFrame gauge_transform(const BlochFrame& frame, const GaugeField& gauge) {
  if (gauge.u.size() != frame.vectors.size()) throw Error(ErrorKind::DimensionMismatch, "gauge and frame grids differ");
  if (gauge.u.front().rows() != frame.rank()) throw Error(ErrorKind::DimensionMismatch, "gauge rank differs from frame rank");
  BlochFrame out;
  out.k = frame.k;
  out.trs_flag = frame.trs_flag && gauge.trs_flag;
  out.vectors.resize(frame.vectors.size());
  for (std::size_t j = 0; j < frame.vectors.size(); ++j) out.vectors[j] = frame.vectors[j] * gauge.u[j];
  return out;
}

inline GaugeField constant_gauge(int n, const Mat& u, bool trs = false) {
  GaugeField g;
  for (int j = 0; j < n; ++j) {
    g.k.push_back(periodic_node(j, n));
    g.u.push_back(u);
  }
  g.trs_flag = trs;
  return g;
}

/// f_w(k) = diag(e^{iwk}, e^{iwk}, 1, ..., 1), a TRS gauge with det-winding 2w.
inline GaugeField winding_trs_gauge(int n, int m, int w) {
  if (m < 2 || m % 2 != 0) throw Error(ErrorKind::BadDims, "TRS gauges need even rank");
  GaugeField g;
  g.trs_flag = true;
  for (int j = 0; j < n; ++j) {
    const double k = periodic_node(j, n);
    Mat u = Mat::Identity(m, m);
    u(0, 0) = u(1, 1) = std::exp(kI * (w * k));
    g.k.push_back(k);
    g.u.push_back(u);
  }
  return g;
}

struct RandomGaugeOptions {
  int harmonics = 3;
  double amplitude = 0.6;
  int winding = 0;  // half the det-winding for TRS gauges
};

namespace detail {

inline Mat random_hermitian(int m, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> d;
  Mat x(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) x(a, b) = cplx(d(rng), d(rng));
  return scale * 0.5 * (x + x.adjoint());
}

}  // namespace detail

/// Smooth random gauge u(k) = f_w(k) exp(i K(k)) with K a random Hermitian
/// trigonometric polynomial. With `trs`, K(-k) = -J^{-1} conj(K(k)) J, which
/// makes u(-k) = J^{-1} conj(u(k)) J.
inline GaugeField random_gauge(int n, int m, unsigned seed, bool trs, const RandomGaugeOptions& opts = {}) {
  if (trs && (m < 2 || m % 2 != 0)) throw Error(ErrorKind::BadDims, "TRS gauges need even rank");
  std::mt19937_64 rng(seed);
  const Mat j = trs ? symplectic_matrix(m) : Mat::Identity(m, m);
  auto theta_m = [&](const Mat& y) { return Mat(j.transpose() * y.conjugate() * j); };
  std::vector<Mat> a, b;
  for (int l = 0; l <= opts.harmonics; ++l) {
    const double scale = opts.amplitude / (1.0 + l);
    Mat x = detail::random_hermitian(m, rng, scale), y = detail::random_hermitian(m, rng, scale);
    if (trs) {
      a.push_back(0.5 * (x - theta_m(x)));
      b.push_back(0.5 * (y + theta_m(y)));
    } else {
      a.push_back(x);
      b.push_back(y);
    }
  }
  GaugeField g;
  g.trs_flag = trs;
  for (int i = 0; i < n; ++i) {
    const double k = periodic_node(i, n);
    Mat kk = Mat::Zero(m, m);
    for (int l = 0; l <= opts.harmonics; ++l) {
      kk += a[static_cast<std::size_t>(l)] * std::cos(l * k) + b[static_cast<std::size_t>(l)] * std::sin(l * k);
    }
    Mat u = expi_hermitian(kk);
    if (opts.winding != 0) {
      Mat f = Mat::Identity(m, m);
      f(0, 0) = std::exp(kI * (opts.winding * k));
      if (trs) f(1, 1) = f(0, 0);
      u = f * u;
    }
    g.k.push_back(k);
    g.u.push_back(u);
  }
  return g;
}

inline GaugeField random_trs_gauge(int n, int m, unsigned seed, const RandomGaugeOptions& opts = {}) {
  return random_gauge(n, m, seed, true, opts);
}

// ---------------------------------------------------------------------------
// The obstruction invariant
// ---------------------------------------------------------------------------

struct LoopPhases {
  double integral = 0.0;  // closed integral of A in the TRS frame
  InvariantResult berry;
  InvariantResult sqrt_berry;
  double base_point = 0.0;
  double imag_contamination = 0.0;
  double kramers_residual = 0.0;
};

struct DeltaReport {
  InvariantResult delta;
  LoopPhases t0, tpi;
  double ebz_curvature = 0.0;
  CurvatureField curvature;
  InvariantResult chern;
};

struct DeltaOptions {
  int n = 128;
  ConnectionMethod method = ConnectionMethod::Spectral;
  std::optional<unsigned> basis_seed;
};

inline LoopPhases loop_phases(const ProjectorFamily& family, const TRSOperator& theta, double a, const DeltaOptions& opts,
                              const Tolerances& tol = default_tolerances()) {
  const auto loop = LoopFamily::at_k1(family, a);
  TrsFrameOptions fo;
  fo.n = opts.n;
  fo.basis_seed = opts.basis_seed;
  auto trs = build_trs_frame(loop, theta, fo, tol);
  auto conn = berry_connection(trs.frame, opts.method);
  LoopPhases out;
  out.integral = conn.integral();
  out.berry = berry_phase(conn);
  out.sqrt_berry = berry_phase_sqrt(conn);
  out.base_point = trs.base_point;
  out.imag_contamination = conn.imag_contamination;
  out.kramers_residual = frame_report(trs.frame, loop).kramers;
  return out;
}

/// delta = (1/2pi)(oint_{T_pi} A - oint_{T_0} A - int_EBZ Omega) mod 2, with A
/// from time-reversal symmetric frames and loops oriented by increasing k2.
inline DeltaReport delta_invariant(const ProjectorFamily& family, const TRSOperator& theta, const DeltaOptions& opts = {},
                                   const Tolerances& tol = default_tolerances()) {
  if (family.dim() != theta.dim()) throw Error(ErrorKind::DimensionMismatch, "family dimension differs from theta");
  auto trs = check_trs(family, theta, std::min(opts.n, 64), tol);
  if (!trs.ok) throw Error(ErrorKind::NotTRS, "family violates time reversal by " + std::to_string(trs.max_violation));
  DeltaReport r;
  r.t0 = loop_phases(family, theta, 0.0, opts, tol);
  r.tpi = loop_phases(family, theta, kPi, opts, tol);
  r.curvature = berry_curvature(family, opts.n);
  r.ebz_curvature = curvature_integral_ebz(r.curvature);
  r.chern = chern_number(r.curvature, tol);
  const double raw = (r.tpi.integral - r.t0.integral - r.ebz_curvature) / kTwoPi;
  r.delta = snap_integer(InvariantKind::Delta, raw, opts.n, true, tol);
  return r;
}

}  // namespace topoinv
