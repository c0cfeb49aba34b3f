#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topoinv/berry.hpp"
#include "topoinv/config.hpp"
#include "topoinv/core.hpp"
#include "topoinv/error.hpp"
#include "topoinv/linalg.hpp"
#include "topoinv/transport.hpp"

namespace topoinv {

// ---------------------------------------------------------------------------
// Field jets
// ---------------------------------------------------------------------------

/// Value of a U(N)-valued field and its partial derivatives in (t, k1, k2).
/// Surface fields leave d[0] at zero.
struct Jet {
  Mat g;
  std::array<Mat, 3> d;

  static Jet constant(const Mat& g) {
    const auto n = g.rows();
    return {g, {Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)}};
  }
};

inline Jet jet_product(const Jet& a, const Jet& b) {
  Jet r;
  r.g = a.g * b.g;
  for (int i = 0; i < 3; ++i) r.d[static_cast<std::size_t>(i)] = a.d[static_cast<std::size_t>(i)] * b.g + a.g * b.d[static_cast<std::size_t>(i)];
  return r;
}

/// Inverse of a unitary jet.
inline Jet jet_inverse(const Jet& a) {
  Jet r;
  r.g = a.g.adjoint();
  for (int i = 0; i < 3; ++i) r.d[static_cast<std::size_t>(i)] = -r.g * a.d[static_cast<std::size_t>(i)] * r.g;
  return r;
}

inline Jet jet_adjoint(const Jet& g, const Jet& h) { return jet_product(jet_product(g, h), jet_inverse(g)); }

/// Field on the torus: (k1, k2) -> jet.
struct SurfaceField {
  int dim = 0;
  std::function<Jet(double, double)> at;
};

/// Field on [0, 1] x T^2, curried so that k-dependent work (spectra,
/// projectors) is done once per momentum.
struct ExtensionField {
  int dim = 0;
  std::function<std::function<Jet(double)>(double, double)> at_k;

  Jet at(double t, double k1, double k2) const { return at_k(k1, k2)(t); }

  SurfaceField end() const {
    auto self = *this;
    return {dim, [self](double k1, double k2) {
              Jet j = self.at(1.0, k1, k2);
              j.d[0].setZero();
              return j;
            }};
  }
};

inline SurfaceField surface_product(const SurfaceField& a, const SurfaceField& b) {
  return {a.dim, [a, b](double k1, double k2) { return jet_product(a.at(k1, k2), b.at(k1, k2)); }};
}
inline SurfaceField surface_inverse(const SurfaceField& a) {
  return {a.dim, [a](double k1, double k2) { return jet_inverse(a.at(k1, k2)); }};
}

/// t-independent extension of a surface field. Valid as an extension only
/// when the field takes mutually commuting values (see check_extension).
inline ExtensionField constant_extension(const SurfaceField& f) {
  return {f.dim, [f](double k1, double k2) {
            Jet j = f.at(k1, k2);
            j.d[0].setZero();
            return std::function<Jet(double)>([j](double) { return j; });
          }};
}

inline ExtensionField extension_product(const ExtensionField& a, const ExtensionField& b) {
  if (a.dim != b.dim) throw Error(ErrorKind::DimensionMismatch, "extension dimensions differ");
  return {a.dim, [a, b](double k1, double k2) {
            auto fa = a.at_k(k1, k2);
            auto fb = b.at_k(k1, k2);
            return std::function<Jet(double)>([fa, fb](double t) { return jet_product(fa(t), fb(t)); });
          }};
}

inline ExtensionField extension_inverse(const ExtensionField& a) {
  return {a.dim, [a](double k1, double k2) {
            auto fa = a.at_k(k1, k2);
            return std::function<Jet(double)>([fa](double t) { return jet_inverse(fa(t)); });
          }};
}

/// t -> g_t h_t g_t^{-1}.
inline ExtensionField extension_adjoint(const ExtensionField& g, const ExtensionField& h) {
  if (g.dim != h.dim) throw Error(ErrorKind::DimensionMismatch, "extension dimensions differ");
  return {g.dim, [g, h](double k1, double k2) {
            auto fg = g.at_k(k1, k2);
            auto fh = h.at_k(k1, k2);
            return std::function<Jet(double)>([fg, fh](double t) { return jet_adjoint(fg(t), fh(t)); });
          }};
}

/// Reparametrizes the interval direction by tau(t) with tau(0) = 0, tau(1) = 1.
inline ExtensionField extension_reparametrized(const ExtensionField& a, std::function<double(double)> tau,
                                               std::function<double(double)> dtau) {
  return {a.dim, [a, tau, dtau](double k1, double k2) {
            auto fa = a.at_k(k1, k2);
            return std::function<Jet(double)>([fa, tau, dtau](double t) {
              Jet j = fa(tau(t));
              j.d[0] *= dtau(t);
              return j;
            });
          }};
}

// ---------------------------------------------------------------------------
// Sampled fields
// ---------------------------------------------------------------------------

/// Surface field sampled on the periodic n x n grid.
struct FieldGrid {
  int n = 0;
  std::vector<Mat> samples;  // row-major in (k1, k2)
  double unitarity = 0.0;
  double periodicity = 0.0;

  bool valid(const Tolerances& tol = default_tolerances()) const {
    return unitarity <= 1e-10 && periodicity <= tol.periodicity;
  }
};

inline FieldGrid sample_surface(const SurfaceField& f, int n) {
  FieldGrid g;
  g.n = n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k1 = periodic_node(i, n), k2 = periodic_node(j, n);
      const Mat v = f.at(k1, k2).g;
      g.unitarity = std::max(g.unitarity, unitarity_residual(v));
      if (i == 0) g.periodicity = std::max(g.periodicity, norm(v - f.at(k1 + kTwoPi, k2).g));
      if (j == 0) g.periodicity = std::max(g.periodicity, norm(v - f.at(k1, k2 + kTwoPi).g));
      g.samples.push_back(v);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Projector-based fields
// ---------------------------------------------------------------------------

/// P and dP cached on the periodic n x n grid; off-grid points fall back to
/// the family.
class ProjectorGrid {
 public:
  ProjectorGrid(const ProjectorFamily& family, int n) : family_(family), n_(n) {
    p_.resize(static_cast<std::size_t>(n * n));
    d_.resize(p_.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double k1 = periodic_node(i, n), k2 = periodic_node(j, n);
        p_[static_cast<std::size_t>(i * n + j)] = family(k1, k2);
        d_[static_cast<std::size_t>(i * n + j)] = family.gradient(k1, k2);
      }
    }
  }

  int n() const { return n_; }
  const ProjectorFamily& family() const { return family_; }

  /// (P, dP/dk1, dP/dk2) at k.
  std::tuple<Mat, Mat, Mat> at(double k1, double k2) const {
    auto index = [&](double k) -> int {
      const double x = (k + kPi) / kTwoPi * n_;
      const double r = std::round(x);
      if (std::abs(x - r) > 1e-9) return -1;
      return ((static_cast<int>(r) % n_) + n_) % n_;
    };
    const int i = index(k1), j = index(k2);
    if (i >= 0 && j >= 0) {
      const auto s = static_cast<std::size_t>(i * n_ + j);
      return {p_[s], d_[s][0], d_[s][1]};
    }
    auto g = family_.gradient(k1, k2);
    return {family_(k1, k2), g[0], g[1]};
  }

 private:
  ProjectorFamily family_;
  int n_;
  std::vector<Mat> p_;
  std::vector<std::array<Mat, 2>> d_;
};

/// 1 + (exp(i a tau(t)) - 1) P(k) = exp(i a tau(t) P(k)). With a = pi this is
/// the standard extension of U_P = 1 - 2P; a = 2 pi gives Phi.
inline ExtensionField projector_exponential_extension(std::shared_ptr<const ProjectorGrid> grid, double a) {
  const int dim = grid->family().dim();
  return {dim, [grid, a, dim](double k1, double k2) {
            auto [p, d1, d2] = grid->at(k1, k2);
            return std::function<Jet(double)>([p, d1, d2, a, dim](double t) {
              const cplx e = std::exp(kI * (a * t));
              Jet j;
              j.g = Mat::Identity(dim, dim) + (e - 1.0) * p;
              j.d[0] = (kI * a * e) * p;
              j.d[1] = (e - 1.0) * d1;
              j.d[2] = (e - 1.0) * d2;
              return j;
            });
          }};
}

inline ExtensionField up_extension(std::shared_ptr<const ProjectorGrid> grid) {
  return projector_exponential_extension(std::move(grid), kPi);
}

inline ExtensionField phi_extension(std::shared_ptr<const ProjectorGrid> grid) {
  return projector_exponential_extension(std::move(grid), kTwoPi);
}

// ---------------------------------------------------------------------------
// Normal forms and random fields
// ---------------------------------------------------------------------------

/// diag(e^{i(n k1 + m k2)}, 1, ..., 1), or with the phase repeated on the
/// first Kramers pair when equivariant (det-windings 2n, 2m).
inline SurfaceField normal_form_field(int n, int m, int dim, bool equivariant = false) {
  if (dim < 1 || (equivariant && dim % 2 != 0)) throw Error(ErrorKind::BadDims, "normal form needs dim >= 1 (even if equivariant)");
  const int slots = equivariant ? 2 : 1;
  return {dim, [n, m, dim, slots](double k1, double k2) {
            Jet j = Jet::constant(Mat::Identity(dim, dim));
            const cplx e = std::exp(kI * (n * k1 + m * k2));
            for (int s = 0; s < slots; ++s) {
              j.g(s, s) = e;
              j.d[1](s, s) = kI * double(n) * e;
              j.d[2](s, s) = kI * double(m) * e;
            }
            return j;
          }};
}

/// Hermitian trigonometric polynomial H(k) = sum_v C_v e^{i k.v}, C_{-v} = C_v*.
struct TrigHermitian {
  int dim = 0;
  std::vector<std::pair<std::array<int, 2>, Mat>> coeffs;

  Mat value(double k1, double k2) const {
    Mat h = Mat::Zero(dim, dim);
    for (const auto& [v, c] : coeffs) h += c * std::exp(kI * (k1 * v[0] + k2 * v[1]));
    return h;
  }
  std::array<Mat, 2> gradient(double k1, double k2) const {
    std::array<Mat, 2> g{Mat::Zero(dim, dim), Mat::Zero(dim, dim)};
    for (const auto& [v, c] : coeffs) {
      const cplx e = std::exp(kI * (k1 * v[0] + k2 * v[1]));
      g[0] += (kI * double(v[0]) * e) * c;
      g[1] += (kI * double(v[1]) * e) * c;
    }
    return g;
  }

  /// (1 - s) a + s b, coefficient-wise.
  static TrigHermitian blend(const TrigHermitian& a, const TrigHermitian& b, double s) {
    TrigHermitian r{a.dim, {}};
    for (const auto& [v, c] : a.coeffs) r.coeffs.push_back({v, (1.0 - s) * c});
    for (const auto& [v, c] : b.coeffs) r.coeffs.push_back({v, s * c});
    return r;
  }
};

/// Random smooth Hermitian field with harmonics |v_i| <= harmonics. When
/// equivariant, H(-k) = -Theta(H(k)) so that exp(iH) is Theta-equivariant.
inline TrigHermitian random_trig_hermitian(int dim, unsigned seed, int harmonics = 1, double amplitude = 0.5,
                                           bool equivariant = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  TrigHermitian h{dim, {}};
  std::optional<TRSOperator> theta;
  if (equivariant) theta.emplace(dim);
  for (int p = -harmonics; p <= harmonics; ++p) {
    for (int q = -harmonics; q <= harmonics; ++q) {
      // One representative per {v, -v}; v = 0 gets a Hermitian matrix.
      if (p < 0 || (p == 0 && q < 0)) continue;
      Mat c(dim, dim);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) c(a, b) = cplx(d(rng), d(rng));
      c *= amplitude / (1.0 + std::abs(p) + std::abs(q)) / std::sqrt(double(dim));
      if (p == 0 && q == 0) c = 0.5 * (c + c.adjoint());
      if (theta) c = 0.5 * (c - theta->conjugate(c));
      h.coeffs.push_back({{p, q}, c});
      if (p != 0 || q != 0) h.coeffs.push_back({{-p, -q}, c.adjoint()});
    }
  }
  return h;
}

/// Extension t -> N(k) exp(i t H(k)) of the field N exp(iH); the t = 0 end is
/// the abelian (diagonal) normal form N.
inline ExtensionField exp_extension(const SurfaceField& normal, const TrigHermitian& h) {
  if (normal.dim != h.dim) throw Error(ErrorKind::DimensionMismatch, "normal form and generator dimensions differ");
  return {h.dim, [normal, h](double k1, double k2) {
            const Jet nj = normal.at(k1, k2);
            const auto spec = hermitian_spectrum(h.value(k1, k2));
            const auto grad = h.gradient(k1, k2);
            return std::function<Jet(double)>([nj, spec, grad](double t) {
              const auto e1 = expi_hermitian_jet(spec, grad[0], t);
              const auto e2 = expi_hermitian_jet(spec, grad[1], t);
              Jet ej;
              ej.g = e1.value;
              ej.d = {e1.dt, e1.dx, e2.dx};
              Jet n = nj;
              n.d[0].setZero();
              return jet_product(n, ej);
            });
          }};
}

// ---------------------------------------------------------------------------
// Windings
// ---------------------------------------------------------------------------

struct WindingResult {
  double raw = 0.0;
  long value = 0;
  double residual = 0.0;
  SnapStatus status = SnapStatus::Snapped;
};

inline WindingResult snap_winding(double raw, const Tolerances& tol = default_tolerances()) {
  WindingResult w;
  w.raw = raw;
  w.value = std::lround(raw);
  w.residual = std::abs(raw - static_cast<double>(w.value));
  w.status = w.residual < tol.snap ? SnapStatus::Snapped : SnapStatus::Unsnapped;
  return w;
}

/// (1/2 pi i) oint Tr(f^{-1} df) by the periodic trapezoid rule, for a loop
/// field given as k -> (f, df/dk).
inline WindingResult winding(const std::function<std::pair<Mat, Mat>(double)>& f, int n,
                             const Tolerances& tol = default_tolerances()) {
  cplx s = 0.0;
  for (int j = 0; j < n; ++j) {
    auto [v, dv] = f(periodic_node(j, n));
    s += (v.adjoint() * dv).trace();
  }
  return snap_winding((s * (kTwoPi / n) / (kTwoPi * kI)).real(), tol);
}

/// Winding of sampled loop values by accumulating arg det increments.
inline WindingResult winding_samples(const std::vector<Mat>& samples, const Tolerances& tol = default_tolerances()) {
  double total = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    total += std::arg(samples[(j + 1) % samples.size()].determinant() / samples[j].determinant());
  }
  return snap_winding(total / kTwoPi, tol);
}

struct WindingPair {
  WindingResult n;  // along k1 at k2 = 0
  WindingResult m;  // along k2 at k1 = 0
};

inline WindingPair winding_pair(const SurfaceField& f, int grid = 64, const Tolerances& tol = default_tolerances()) {
  WindingPair w;
  w.n = winding([&](double k) { auto j = f.at(k, 0.0); return std::make_pair(j.g, j.d[1]); }, grid, tol);
  w.m = winding([&](double k) { auto j = f.at(0.0, k); return std::make_pair(j.g, j.d[2]); }, grid, tol);
  return w;
}

/// Random Theta-equivariant loop field f(-k) = Theta(f(k)) built by
/// reflection: on [0, pi], f = exp(iK_a) diag(e^{i n_j k}) exp(iK_b) with the
/// two entries of each Kramers pair of equal parity and K(k) Theta-odd at
/// k = 0, pi; the other half is Theta(f(-k)).
inline std::vector<Mat> random_equivariant_loop(int dim, int n, unsigned seed, int max_winding = 3) {
  if (dim % 2 != 0) throw Error(ErrorKind::BadDims, "equivariant loops need even dimension");
  TRSOperator theta(dim);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wind(-max_winding, max_winding);
  std::normal_distribution<double> d;
  auto herm = [&]() {
    Mat x(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) x(a, b) = cplx(d(rng), d(rng));
    return Mat(0.4 * (x + x.adjoint()));
  };
  auto odd = [&]() {
    Mat x = herm();
    return Mat(0.5 * (x - theta.conjugate(x)));  // Theta(K) = -K
  };
  const Mat ka = odd(), kb = odd(), ra = herm(), rb = herm();
  std::vector<int> w(static_cast<std::size_t>(dim));
  for (int p = 0; p < dim; p += 2) {
    const int a = wind(rng);
    int b = wind(rng);
    if ((a - b) % 2 != 0) b += (b < max_winding ? 1 : -1);
    w[static_cast<std::size_t>(p)] = a;
    w[static_cast<std::size_t>(p + 1)] = b;
  }
  auto half = [&](double k) {
    Mat diag = Mat::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) diag(a, a) = std::exp(kI * (w[static_cast<std::size_t>(a)] * k));
    return Mat(expi_hermitian(ka + std::sin(k) * ra) * diag * expi_hermitian(kb + std::sin(k) * rb));
  };
  std::vector<Mat> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double k = periodic_node(j, n);
    out[static_cast<std::size_t>(j)] = k >= 0 ? half(k) : theta.conjugate(half(-k));
  }
  // The node k = -pi is identified with pi; use the half-loop value there.
  out[0] = half(kPi);
  return out;
}

// ---------------------------------------------------------------------------
// Wess-Zumino actions
// ---------------------------------------------------------------------------

enum class Modulus { TwoPi, FourPi };

struct WZValue {
  double action = 0.0;      // raw representative
  double reduced = 0.0;     // in [0, modulus)
  Modulus modulus = Modulus::TwoPi;
  cplx amplitude = 1.0;     // exp(i action), or exp(i action / 2) for FourPi
  double residual = 0.0;    // quadrature diagnostics (imaginary contamination)
};

inline WZValue make_wz_value(double action, Modulus modulus, double residual = 0.0) {
  WZValue v;
  v.action = action;
  v.modulus = modulus;
  const double m = modulus == Modulus::TwoPi ? kTwoPi : 2.0 * kTwoPi;
  v.reduced = action - m * std::floor(action / m);
  v.amplitude = modulus == Modulus::TwoPi ? std::exp(kI * action) : std::exp(0.5 * kI * action);
  v.residual = residual;
  return v;
}

struct Quadrature3D {
  int n = 64;        // points per momentum direction
  int n_t = 64;      // Simpson intervals in t (even)
  bool ebz = false;  // integrate k1 over [0, pi] only
};

/// (1/4 pi) Tr(X_t [X_1, X_2]) with X_a = g^{-1} d_a g: the coefficient of
/// the 3-form (1/12 pi) Tr(g^{-1} dg)^3 in dt dk1 dk2.
inline cplx chi_density(const Jet& j) {
  const Mat gi = j.g.adjoint();
  const Mat x0 = gi * j.d[0], x1 = gi * j.d[1], x2 = gi * j.d[2];
  return (x0 * commutator(x1, x2)).trace() / (4.0 * kPi);
}

/// Max over pairs of ||[g_a, r]|| for random combinations r of the end-0
/// values: vanishes iff the values commute (generically).
inline double reference_end_residual(const ExtensionField& ext, int n) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> d;
  std::vector<Mat> vals;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vals.push_back(ext.at(0.0, periodic_node(i, n), periodic_node(j, n)).g);
  double worst = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    Mat r = Mat::Zero(ext.dim, ext.dim);
    for (const auto& v : vals) r += d(rng) * v;
    r /= std::sqrt(double(vals.size()));
    for (const auto& v : vals) worst = std::max(worst, norm(commutator(v, r)));
  }
  return worst;
}

/// Throws NotAnExtension unless the t = 0 end takes mutually commuting values
/// (a constant end is the common case).
inline void check_extension(const ExtensionField& ext, int n, const Tolerances& tol = default_tolerances()) {
  const double r = reference_end_residual(ext, std::min(n, 16));
  if (r > tol.extension) throw Error(ErrorKind::NotAnExtension, "t = 0 end does not commute (" + std::to_string(r) + ")");
}

/// Raw 3D integral of the chi density; imag_out receives the largest
/// imaginary part seen (a consistency diagnostic).
inline double integrate_chi(const ExtensionField& ext, const Quadrature3D& q, double* imag_out = nullptr) {
  const auto wt = simpson_weights(q.n_t);
  const std::vector<double> w1 = q.ebz ? half_period_weights(q.n) : std::vector<double>(static_cast<std::size_t>(q.n), kTwoPi / q.n);
  const double h2 = kTwoPi / q.n;
  double total = 0.0, imag = 0.0;
  for (int i = 0; i < q.n; ++i) {
    const double k1 = periodic_node(i, q.n);
    if (q.ebz && std::abs(w1[static_cast<std::size_t>(i)]) < 1e-300) continue;
    for (int j = 0; j < q.n; ++j) {
      auto f = ext.at_k(k1, periodic_node(j, q.n));
      double col = 0.0;
      for (int it = 0; it <= q.n_t; ++it) {
        const cplx c = chi_density(f(static_cast<double>(it) / q.n_t));
        col += wt[static_cast<std::size_t>(it)] * c.real();
        imag = std::max(imag, std::abs(c.imag()));
      }
      total += w1[static_cast<std::size_t>(i)] * h2 * col;
    }
  }
  if (imag_out) *imag_out = imag;
  return total;
}

/// S_WZ of the t = 1 end of `ext`, by Simpson in t and the periodic trapezoid
/// in k. Mod-2 pi representative in the result.
inline WZValue wz_action_extension(const ExtensionField& ext, const Quadrature3D& q = {},
                                   const Tolerances& tol = default_tolerances()) {
  if (q.ebz) throw Error(ErrorKind::BadConfig, "WZ actions integrate over the whole torus");
  check_extension(ext, q.n, tol);
  double imag = 0.0;
  const double s = integrate_chi(ext, q, &imag);
  return make_wz_value(s, Modulus::TwoPi, imag);
}

// ---------------------------------------------------------------------------
// Surface pullbacks
// ---------------------------------------------------------------------------

/// Coefficient of dk1 dk2 in (g x h)*alpha = -Tr(g^{-1}dg dh h^{-1}).
inline cplx alpha_density(const Jet& g, const Jet& h) {
  const Mat gi = g.g.adjoint(), hi = h.g.adjoint();
  const Mat x1 = gi * g.d[1], x2 = gi * g.d[2];
  const Mat d1 = h.d[1] * hi, d2 = h.d[2] * hi;
  return -(x1 * d2 - x2 * d1).trace();
}

/// Coefficient of dx1 dx2 in (g x h)*beta
///   = -Tr{h X h^{-1} X + X (h^{-1}dh + dh h^{-1})},  X = g^{-1}dg,
/// for the coordinate pair (a, b) of the jets.
inline cplx beta_density(const Jet& g, const Jet& h, int a = 1, int b = 2) {
  const Mat gi = g.g.adjoint(), hi = h.g.adjoint();
  const Mat xa = gi * g.d[static_cast<std::size_t>(a)], xb = gi * g.d[static_cast<std::size_t>(b)];
  const Mat za = hi * h.d[static_cast<std::size_t>(a)] + h.d[static_cast<std::size_t>(a)] * hi;
  const Mat zb = hi * h.d[static_cast<std::size_t>(b)] + h.d[static_cast<std::size_t>(b)] * hi;
  const Mat hxa = h.g * xa * hi, hxb = h.g * xb * hi;
  return -(hxa * xb - hxb * xa + xa * zb - xb * za).trace();
}

inline double integrate_surface(const std::function<cplx(double, double)>& density, int n, double* imag_out = nullptr) {
  const double h = kTwoPi / n;
  double s = 0.0, imag = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const cplx v = density(periodic_node(i, n), periodic_node(j, n));
      s += v.real();
      imag = std::max(imag, std::abs(v.imag()));
    }
  }
  if (imag_out) *imag_out = imag;
  return s * h * h;
}

inline double alpha_integral(const SurfaceField& g, const SurfaceField& h, int n) {
  return integrate_surface([&](double k1, double k2) { return alpha_density(g.at(k1, k2), h.at(k1, k2)); }, n);
}

inline double beta_integral(const SurfaceField& g, const SurfaceField& h, int n) {
  return integrate_surface([&](double k1, double k2) { return beta_density(g.at(k1, k2), h.at(k1, k2)); }, n);
}

/// dS_WZ/ds = (1/4 pi) int Tr{g^{-1} g' (g^{-1} dg)^2} for a homotopy with
/// s-derivative g_dot.
inline double wz_derivative(const SurfaceField& g, const std::function<Mat(double, double)>& g_dot, int n) {
  return integrate_surface(
      [&](double k1, double k2) {
        const Jet j = g.at(k1, k2);
        const Mat gi = j.g.adjoint();
        const Mat y = gi * g_dot(k1, k2), x1 = gi * j.d[1], x2 = gi * j.d[2];
        return cplx((y * commutator(x1, x2)).trace() / (4.0 * kPi));
      },
      n);
}

struct PWResult {
  double value = 0.0;
  double s_product = 0.0, s_g = 0.0, s_h = 0.0;
  double alpha_term = 0.0;  // (1/4 pi) int alpha
};

/// PW[g, h] = S[gh] - S[g] - S[h] - (1/4 pi) int (g x h)*alpha, with the
/// extension of gh taken as the pointwise product unless supplied.
inline PWResult pw_functional(const ExtensionField& g, const ExtensionField& h, const Quadrature3D& q,
                              std::optional<ExtensionField> gh = std::nullopt, const Tolerances& tol = default_tolerances()) {
  const ExtensionField prod = gh ? *gh : extension_product(g, h);
  PWResult r;
  r.s_product = wz_action_extension(prod, q, tol).action;
  r.s_g = wz_action_extension(g, q, tol).action;
  r.s_h = wz_action_extension(h, q, tol).action;
  r.alpha_term = alpha_integral(g.end(), h.end(), q.n) / (4.0 * kPi);
  r.value = r.s_product - r.s_g - r.s_h - r.alpha_term;
  return r;
}

struct APWResult {
  double value = 0.0;
  double s_adjoint = 0.0, s_h = 0.0;
  double beta_term = 0.0;  // (1/4 pi) int beta
};

/// APW[g, h] = S[g h g^{-1}] - S[h] - (1/4 pi) int (g x h)*beta.
inline APWResult apw_functional(const ExtensionField& g, const ExtensionField& h, const Quadrature3D& q,
                                std::optional<ExtensionField> ghg = std::nullopt, const Tolerances& tol = default_tolerances()) {
  const ExtensionField adj = ghg ? *ghg : extension_adjoint(g, h);
  APWResult r;
  r.s_adjoint = wz_action_extension(adj, q, tol).action;
  r.s_h = wz_action_extension(h, q, tol).action;
  r.beta_term = beta_integral(g.end(), h.end(), q.n) / (4.0 * kPi);
  r.value = r.s_adjoint - r.s_h - r.beta_term;
  return r;
}

// ---------------------------------------------------------------------------
// Amplitudes of phi = exp(2 pi i t P(k)) and the K invariant
// ---------------------------------------------------------------------------

struct PhiAmplitude {
  WZValue value;           // mod 2 pi, or mod 4 pi with the square-root amplitude
  double base_point = 0.0;
  std::vector<Mat> w;      // trivialization used
  std::vector<Mat> w_log;
  Mat p_base;
};

namespace detail {

inline double reduced_phi_action(const std::vector<Mat>& w_log, const Mat& p0, double* imag_out) {
  cplx s = 0.0;
  for (const auto& x : w_log) s += (p0 * x).trace();
  s *= kTwoPi / static_cast<double>(w_log.size());
  const cplx action = kI * s;  // S = i oint Tr{P0 W^{-1} dW}
  if (imag_out) *imag_out = std::abs(action.imag());
  return action.real();
}

}  // namespace detail

/// S_WZ[phi] for phi(t, k) = exp(2 pi i t P(k)) on a loop, via the reduction
/// S = i oint Tr{P(k0) W^{-1} dW} with the analytic W-derivative. With theta the
/// symmetric W is used and the value is read mod 4 pi.
inline PhiAmplitude wz_amplitude_phi(const LoopFamily& loop, const TRSOperator* theta = nullptr, int n = 256,
                                     const Tolerances& tol = default_tolerances()) {
  PhiAmplitude out;
  double imag = 0.0;
  if (theta == nullptr) {
    auto r = transport_loop(loop, n, tol);
    out.w.assign(r.w.begin(), r.w.end() - 1);
    out.w_log.assign(r.w_log.begin(), r.w_log.end() - 1);
    out.p_base = r.p0;
    out.base_point = r.k0();
    out.value = make_wz_value(detail::reduced_phi_action(out.w_log, out.p_base, &imag), Modulus::TwoPi, imag);
    return out;
  }
  TrsFrameOptions o;
  o.n = n;
  auto r = build_trs_frame(loop, *theta, o, tol);
  out.w = r.w;
  out.w_log = r.w_log;
  out.p_base = r.p_base;
  out.base_point = r.base_point;
  out.value = make_wz_value(detail::reduced_phi_action(out.w_log, out.p_base, &imag), Modulus::FourPi, imag);
  return out;
}

/// Independent evaluation of S_WZ[phi] as (1/4 pi) int (W x psi)*beta over
/// (t, k), psi(t) = exp(2 pi i t P(k0)); relies on phi = W psi W^{-1} and
/// S_WZ[psi] = 0.
inline double wz_phi_beta_channel(const PhiAmplitude& amp, int n_t = 32) {
  const int n = static_cast<int>(amp.w.size());
  const auto wt = simpson_weights(n_t);
  const Mat& p0 = amp.p_base;
  const auto dim = p0.rows();
  double s = 0.0;
  for (int it = 0; it <= n_t; ++it) {
    const double t = static_cast<double>(it) / n_t;
    const cplx e = std::exp(kI * (kTwoPi * t));
    Jet h = Jet::constant(Mat::Identity(dim, dim) + (e - 1.0) * p0);
    h.d[0] = (kI * kTwoPi * e) * p0;
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      Jet g = Jet::constant(amp.w[static_cast<std::size_t>(j)]);
      g.d[2] = amp.w[static_cast<std::size_t>(j)] * amp.w_log[static_cast<std::size_t>(j)];
      row += beta_density(g, h, 0, 2).real();
    }
    s += wt[static_cast<std::size_t>(it)] * row * (kTwoPi / n);
  }
  return s / (4.0 * kPi);
}

struct KappaOptions {
  int n_loop = 256;  // loop grid for the square-root amplitudes
  int n2d = 128;     // grid for the reduced 3D term
  bool direct = true;
  int n3d = 64;      // momentum grid of the direct 3D quadrature
  int n_t = 64;      // Simpson intervals in t
};

struct KappaReport {
  InvariantResult kappa;
  PhiAmplitude t0, tpi;
  double reduced_3d = 0.0;                 // 12 pi int_EBZ Omega
  std::optional<double> direct_3d;         // int_{[0,1] x EBZ} Tr(Phi^{-1} dPhi)^3
  std::optional<double> relative_discrepancy;
  std::optional<InvariantResult> kappa_direct;
};

/// K = sqrt-amplitude(phi_pi) / sqrt-amplitude(phi_0) * exp((i/24 pi) int Tr(Phi^{-1} dPhi)^3),
/// with the 3D term taken from its reduction to 12 pi int_EBZ Omega; the direct
/// quadrature is kept as a validation channel.
inline KappaReport kappa_invariant(const ProjectorFamily& family, const TRSOperator& theta, const KappaOptions& opts = {},
                                   const Tolerances& tol = default_tolerances()) {
  if (family.dim() != theta.dim()) throw Error(ErrorKind::DimensionMismatch, "family dimension differs from theta");
  auto trs = check_trs(family, theta, 64, tol);
  if (!trs.ok) throw Error(ErrorKind::NotTRS, "family violates time reversal by " + std::to_string(trs.max_violation));
  KappaReport r;
  const auto l0 = LoopFamily::at_k1(family, 0.0), lpi = LoopFamily::at_k1(family, kPi);
  r.t0 = wz_amplitude_phi(l0, &theta, opts.n_loop, tol);
  r.tpi = wz_amplitude_phi(lpi, &theta, opts.n_loop, tol);
  r.reduced_3d = 12.0 * kPi * curvature_integral_ebz(berry_curvature(family, opts.n2d));
  const cplx boundary = std::exp(0.5 * kI * (r.tpi.value.action - r.t0.value.action));
  r.kappa = snap_sign(InvariantKind::Kappa, boundary * std::exp(kI * r.reduced_3d / (24.0 * kPi)), opts.n2d, tol);
  if (opts.direct) {
    auto grid = std::make_shared<const ProjectorGrid>(family, opts.n3d);
    Quadrature3D q{opts.n3d, opts.n_t, true};
    const double direct = 12.0 * kPi * integrate_chi(phi_extension(grid), q);
    r.direct_3d = direct;
    r.relative_discrepancy = std::abs(direct - r.reduced_3d) / std::max(1.0, std::abs(r.reduced_3d));
    r.kappa_direct = snap_sign(InvariantKind::Kappa, boundary * std::exp(kI * direct / (24.0 * kPi)), opts.n3d, tol);
  }
  return r;
}

}  // namespace topoinv
