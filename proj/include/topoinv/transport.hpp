#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "topoinv/config.hpp"
#include "topoinv/core.hpp"
#include "topoinv/error.hpp"
#include "topoinv/linalg.hpp"

namespace topoinv {

/// Parallel transport along a loop segment and, once periodized, the
/// trivializing unitary W(k) = T(k) exp(-i (k - k0) M).
struct TransportResult {
  std::vector<double> k;          // steps + 1 nodes from k0 to k0 + length
  std::vector<Mat> t;             // T(k), T(k0) = 1
  std::vector<Mat> generator;     // G(k) = i [dP, P]
  Mat p0;                         // P(k0)
  double max_intertwining = 0.0;  // max ||P(k) - T P(k0) T*||
  double max_drift = 0.0;         // unitarity drift of a step before reprojection
  double max_reprojection = 0.0;  // size of the polar correction

  // Filled by periodize.
  bool periodized = false;
  Mat m;                     // Hermitian, T(end) = exp(2 pi i M)
  std::vector<Mat> w;        // W at the nodes
  std::vector<Mat> w_log;    // W^{-1} dW/dk, analytic
  double w_periodicity = 0.0;
  double branch_shift = 0.0;

  int steps() const { return static_cast<int>(k.size()) - 1; }
  double k0() const { return k.front(); }
};

namespace detail {

inline Mat transport_rhs(const LoopFamily& loop, double s) {
  const Mat p = loop(s), dp = loop.derivative(s);
  return commutator(dp, p);  // dT/dk = -i G T with G = i [dP, P]
}

}  // namespace detail

/// RK4 integration of i dT/dk = G(k) T on [start, start + length] with polar
/// reprojection to U(N) after every step.
inline TransportResult parallel_transport(const LoopFamily& loop, int n_steps, double start = -kPi,
                                          double length = kTwoPi, const Tolerances& tol = default_tolerances()) {
  if (n_steps < 16 && length >= kTwoPi) throw Error(ErrorKind::BadConfig, "parallel transport needs at least 16 steps");
  if (n_steps < 1) throw Error(ErrorKind::BadConfig, "parallel transport needs at least one step");
  const int n = loop.dim();
  const double h = length / n_steps;
  TransportResult r;
  r.k.resize(static_cast<std::size_t>(n_steps + 1));
  r.t.resize(r.k.size());
  r.generator.resize(r.k.size());
  r.p0 = loop(start);
  Mat t = Mat::Identity(n, n);
  Mat a_here = detail::transport_rhs(loop, start);
  for (int i = 0; i <= n_steps; ++i) {
    const double s = start + h * i;
    const auto idx = static_cast<std::size_t>(i);
    r.k[idx] = s;
    r.t[idx] = t;
    r.generator[idx] = kI * a_here;
    r.max_intertwining = std::max(r.max_intertwining, norm(loop(s) - t * r.p0 * t.adjoint()));
    if (i == n_steps) break;
    const Mat a_mid = detail::transport_rhs(loop, s + 0.5 * h);
    const Mat a_next = detail::transport_rhs(loop, s + h);
    const Mat k1 = a_here * t;
    const Mat k2 = a_mid * (t + 0.5 * h * k1);
    const Mat k3 = a_mid * (t + 0.5 * h * k2);
    const Mat k4 = a_next * (t + h * k3);
    Mat next = t + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double drift = unitarity_residual(next);
    r.max_drift = std::max(r.max_drift, drift);
    if (drift > tol.step_drift) {
      throw Error(ErrorKind::StepFailure, "unitarity drift " + std::to_string(drift) + " at k = " + std::to_string(s));
    }
    Mat projected = polar_unitary(next);
    r.max_reprojection = std::max(r.max_reprojection, norm(projected - next));
    t = projected;
    a_here = a_next;
  }
  return r;
}

inline constexpr double kExactCut = 1e-13;
// Minimal arc across -1 for keeping the default cut of log R in the TRS frame.
inline constexpr double kCutClearance = 1e-2;

/// Writes T(end) = exp(2 pi i M) with M-eigenvalues in [shift/2pi, shift/2pi + 1)
/// (shift = 0 gives [0, 1)) and builds W. Throws BranchAmbiguity when an
/// eigenphase lies within tol.branch of the cut.
inline TransportResult periodize(TransportResult r, double branch_shift = 0.0,
                                 const Tolerances& tol = default_tolerances()) {
  auto spec = unitary_spectrum(r.t.back());
  const Eigen::Index n = r.t.back().rows();
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double phi = std::fmod(spec.phases[static_cast<std::size_t>(i)] - branch_shift, kTwoPi);
    if (phi < 0) phi += kTwoPi;
    // Round-off hits of the cut itself are read as the cut value; anything
    // else closer than tol.branch cannot be placed reliably.
    const double dist = std::min(phi, kTwoPi - phi);
    if (dist <= kExactCut) {
      phi = 0.0;
    } else if (dist < tol.branch) {
      throw Error(ErrorKind::BranchAmbiguity, "eigenphase " + std::to_string(spec.phases[static_cast<std::size_t>(i)]) +
                                                  " within " + std::to_string(dist) + " of the logarithm branch cut");
    }
    mu(i) = (phi + branch_shift) / kTwoPi;
  }
  r.m = spec.q * mu.cast<cplx>().asDiagonal() * spec.q.adjoint();
  // A cluster of nearly equal eigenphases split by the cut gives an M that
  // mixes Ran P(k0) with its complement.
  const double comm = norm(commutator(r.m, r.p0));
  if (comm > tol.commutation) {
    throw Error(ErrorKind::BranchAmbiguity, "logarithm does not commute with P(k0) (" + std::to_string(comm) + ")");
  }
  r.branch_shift = branch_shift;
  r.w.resize(r.t.size());
  r.w_log.resize(r.t.size());
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    const double dk = r.k[i] - r.k0();
    Eigen::VectorXcd e(n), einv(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      e(a) = std::exp(-kI * (dk * mu(a)));
      einv(a) = std::conj(e(a));
    }
    const Mat expm = dk == 0.0 ? Mat(Mat::Identity(n, n)) : Mat(spec.q * e.asDiagonal() * spec.q.adjoint());     // exp(-i dk M)
    const Mat expp = dk == 0.0 ? Mat(Mat::Identity(n, n)) : Mat(spec.q * einv.asDiagonal() * spec.q.adjoint());  // exp(+i dk M)
    r.w[i] = r.t[i] * expm;
    r.w_log[i] = expp * (-kI * (r.t[i].adjoint() * r.generator[i] * r.t[i])) * expm - kI * r.m;
  }
  r.w_periodicity = norm(r.w.back() - r.w.front());
  r.periodized = true;
  return r;
}

/// Transport over the full loop from k0 = -pi and periodize; on a branch
/// collision the cut is moved by -pi and the logarithm retried once.
inline TransportResult transport_loop(const LoopFamily& loop, int n_steps, const Tolerances& tol = default_tolerances()) {
  auto t = parallel_transport(loop, n_steps, -kPi, kTwoPi, tol);
  try {
    return periodize(t, 0.0, tol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BranchAmbiguity) throw;
    return periodize(t, -kPi, tol);
  }
}

/// m x m holonomy E0* T(end) E0 on Ran P(k0) in the basis E0.
inline Mat wilson_holonomy(const TransportResult& r, const Mat& basis) {
  return basis.adjoint() * r.t.back() * basis;
}

/// Holonomy in a basis obtained from P(k0) itself.
inline Mat wilson_holonomy(const TransportResult& r) {
  auto spec = hermitian_spectrum(r.p0);
  const auto m = static_cast<Eigen::Index>(std::lround(r.p0.trace().real()));
  const Mat basis = spec.vectors.rightCols(m);
  return wilson_holonomy(r, basis);
}

// ---------------------------------------------------------------------------
// Bloch frames
// ---------------------------------------------------------------------------

/// Frame on the periodic grid k_j = -pi + 2 pi j / N, j = 0..N-1.
struct BlochFrame {
  std::vector<double> k;
  std::vector<Mat> vectors;      // N x m per node
  std::vector<Mat> derivatives;  // analytic dE/dk when known, else empty
  bool trs_flag = false;

  int size() const { return static_cast<int>(vectors.size()); }
  int rank() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().cols()); }
  bool has_derivatives() const { return !derivatives.empty(); }
};

/// e_a(k) = W(k) e_a(k0). The basis must be an orthonormal basis of Ran P(k0).
inline BlochFrame build_frame(const TransportResult& r, const Mat& base_basis,
                              const Tolerances& tol = default_tolerances()) {
  if (!r.periodized) throw Error(ErrorKind::BadConfig, "build_frame needs a periodized transport result");
  const Eigen::Index m = base_basis.cols();
  if (base_basis.rows() != r.p0.rows()) throw Error(ErrorKind::BadBaseBasis, "base basis has the wrong dimension");
  const double ortho = norm(base_basis.adjoint() * base_basis - Mat::Identity(m, m));
  const double span = norm(r.p0 - base_basis * base_basis.adjoint());
  if (ortho > tol.unitarity || span > 1e-8) {
    throw Error(ErrorKind::BadBaseBasis, "base basis is not an orthonormal basis of Ran P(k0) (orthonormality " +
                                             std::to_string(ortho) + ", span " + std::to_string(span) + ")");
  }
  BlochFrame f;
  const std::size_t n = r.k.size() - 1;  // drop the duplicated endpoint
  for (std::size_t i = 0; i < n; ++i) {
    f.k.push_back(r.k[i]);
    f.vectors.push_back(r.w[i] * base_basis);
    f.derivatives.push_back(r.w[i] * r.w_log[i] * base_basis);
  }
  return f;
}

/// Result of the time-reversal symmetric construction; keeps the symmetric
/// trivialization W (W(-k) = Theta(W(k)), W(base) = 1) next to the frame.
struct TrsFrameResult {
  BlochFrame frame;
  std::vector<Mat> w;      // on the frame grid
  std::vector<Mat> w_log;  // W^{-1} dW/dk
  Mat p_base;              // P at the base point
  Mat m;                   // exp(2 pi i M) = T(-pi)^{-1} T(pi), relative to the base point
  double base_point = 0.0; // 0 or pi
  double max_intertwining = 0.0;
  double w_periodicity = 0.0;  // ||T(pi) exp(-i pi M) - W(-pi)||
  double log_cut = kPi;        // branch cut used for log R
  double m_symmetry = 0.0;     // ||Theta(M) - M||
};

struct TrsFrameOptions {
  int n = 256;                         // grid size, divisible by 4
  std::optional<unsigned> basis_seed;  // random symplectic base basis
  std::optional<double> base_point;    // 0 or pi; default tries 0 then pi
};

namespace detail {

inline TrsFrameResult trs_frame_at(const LoopFamily& loop, const TRSOperator& theta, double base,
                                   const TrsFrameOptions& opts, const Tolerances& tol) {
  const int n = opts.n;
  const int half = n / 2;
  // Loop in the shifted variable s = k - base; P(base - s) = Theta(P(base + s)).
  auto trans = parallel_transport(loop, half, base, kPi, tol);
  const Mat& t_pi = trans.t.back();
  const Mat t_mpi = theta.conjugate(t_pi);
  const Mat r = t_mpi.adjoint() * t_pi;
  auto spec = unitary_spectrum(r);
  const Eigen::Index dim = r.rows();
  // Every eigenspace of R is theta-invariant, so any branch of the logarithm
  // gives Theta(M) = M as long as no Kramers pair or near-degenerate cluster
  // is split by the cut. The default cut is at -1; if the eigenphases nearly
  // close the arc across it, the cut moves to the middle of the widest gap.
  std::vector<double> sorted = spec.phases;
  std::sort(sorted.begin(), sorted.end());
  double cut = kPi;
  if (sorted.front() + kTwoPi - sorted.back() < kCutClearance) {
    double best_gap = -1.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double lo = sorted[i];
      const double hi = i + 1 < sorted.size() ? sorted[i + 1] : sorted.front() + kTwoPi;
      if (hi - lo > best_gap) {
        best_gap = hi - lo;
        cut = 0.5 * (lo + hi);
      }
    }
  }
  const std::vector<double>& phases = spec.phases;
  Eigen::VectorXd mu(dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    double phi = phases[static_cast<std::size_t>(a)];
    while (phi > cut) phi -= kTwoPi;
    while (phi <= cut - kTwoPi) phi += kTwoPi;
    mu(a) = phi / kTwoPi;
  }
  auto exp_m = [&](double s) {
    Eigen::VectorXcd e(dim);
    for (Eigen::Index a = 0; a < dim; ++a) e(a) = std::exp(kI * (s * mu(a)));
    if (s == 0.0) return Mat(Mat::Identity(dim, dim));
    return Mat(spec.q * e.asDiagonal() * spec.q.adjoint());  // exp(i s M)
  };

  TrsFrameResult out;
  out.base_point = base;
  out.p_base = trans.p0;
  out.m = spec.q * mu.cast<cplx>().asDiagonal() * spec.q.adjoint();
  out.log_cut = cut;
  out.m_symmetry = norm(theta.conjugate(out.m) - out.m);
  const double comm = norm(commutator(out.m, trans.p0));
  if (comm > tol.commutation) {
    throw Error(ErrorKind::SymmetrizationFailure, "logarithm of the endpoint mismatch does not commute with P (" + std::to_string(comm) + ")");
  }
  if (out.m_symmetry > tol.trs) {
    throw Error(ErrorKind::SymmetrizationFailure,
                "logarithm of the endpoint mismatch is not Theta-invariant (" + std::to_string(out.m_symmetry) + ")");
  }
  out.max_intertwining = trans.max_intertwining;
  auto basis = symplectic_basis(theta, trans.p0, opts.basis_seed, tol);
  if (basis.pairing_residual > tol.pairing) {
    throw Error(ErrorKind::SymmetrizationFailure, "symplectic base basis has pairing residual " + std::to_string(basis.pairing_residual));
  }
  const Mat& e0 = basis.vectors;

  // Shifted nodes s_j = -pi + 2 pi j / n; node j = half + i has s = i h.
  std::vector<Mat> w(static_cast<std::size_t>(n)), wl(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double s = periodic_node(j, n);
    Mat t;
    if (j >= half) {
      t = trans.t[static_cast<std::size_t>(j - half)];
    } else {
      t = theta.conjugate(trans.t[static_cast<std::size_t>(half - j)]);  // T(-s) = Theta(T(s))
    }
    const Mat g = kI * transport_rhs(loop, base + s);
    const Mat em = exp_m(-s), ep = exp_m(s);
    w[static_cast<std::size_t>(j)] = t * em;
    wl[static_cast<std::size_t>(j)] = ep * (-kI * (t.adjoint() * g * t)) * em - kI * out.m;
  }
  out.w_periodicity = norm(t_pi * exp_m(-kPi) - w.front());
  // Re-index to the absolute grid k = base + s.
  const int shift = static_cast<int>(std::lround(base / kTwoPi * n));
  out.w.resize(static_cast<std::size_t>(n));
  out.w_log.resize(static_cast<std::size_t>(n));
  out.frame.trs_flag = true;
  out.frame.k.resize(static_cast<std::size_t>(n));
  out.frame.vectors.resize(static_cast<std::size_t>(n));
  out.frame.derivatives.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int abs_j = ((j + shift) % n + n) % n;
    const auto a = static_cast<std::size_t>(abs_j), src = static_cast<std::size_t>(j);
    out.w[a] = w[src];
    out.w_log[a] = wl[src];
    out.frame.k[a] = periodic_node(abs_j, n);
    out.frame.vectors[a] = w[src] * e0;
    out.frame.derivatives[a] = w[src] * wl[src] * e0;
  }
  return out;
}

}  // namespace detail

/// Time-reversal symmetric frame on a loop with P(-k) = Theta(P(k)). Transport
/// runs from the base point over half the loop, is reflected with Theta, and
/// the endpoint mismatch R = T(-pi)^{-1} T(pi) (which obeys Theta(R) = R^{-1})
/// is absorbed by exp(-i k M) with exp(2 pi i M) = R, log branch (-pi, pi]
/// unless the eigenphases of R crowd the cut at -1.
inline TrsFrameResult build_trs_frame(const LoopFamily& loop, const TRSOperator& theta, const TrsFrameOptions& opts = {},
                                      const Tolerances& tol = default_tolerances()) {
  if (opts.n < 16 || opts.n % 4 != 0) throw Error(ErrorKind::BadConfig, "TRS frame grid must be divisible by 4 and >= 16");
  auto trs = check_trs(loop, theta, opts.n, tol);
  if (!trs.ok) throw Error(ErrorKind::NotTRS, "loop family violates time reversal by " + std::to_string(trs.max_violation));
  if (opts.base_point) return detail::trs_frame_at(loop, theta, *opts.base_point, opts, tol);
  try {
    return detail::trs_frame_at(loop, theta, 0.0, opts, tol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SymmetrizationFailure) throw;
    return detail::trs_frame_at(loop, theta, kPi, opts, tol);
  }
}

struct FrameReport {
  double orthonormality = 0.0;
  double span = 0.0;
  double seam = 0.0;        // ||E(k_{N-1}) - E(k_0)|| relative to neighbour spacing
  double kramers = 0.0;     // max ||E(-k) - J conj(E(k)) J_m||
  double max_step = 0.0;    // max ||E(k+h) - E(k)|| / h
};

inline FrameReport frame_report(const BlochFrame& f, const LoopFamily& loop) {
  FrameReport r;
  const int n = f.size();
  const Eigen::Index m = f.rank();
  const double h = kTwoPi / n;
  const Mat jm = m % 2 == 0 ? symplectic_matrix(m) : Mat();
  for (int j = 0; j < n; ++j) {
    const Mat& e = f.vectors[static_cast<std::size_t>(j)];
    r.orthonormality = std::max(r.orthonormality, norm(e.adjoint() * e - Mat::Identity(m, m)));
    r.span = std::max(r.span, norm(loop(f.k[static_cast<std::size_t>(j)]) - e * e.adjoint()));
    const Mat& next = f.vectors[static_cast<std::size_t>((j + 1) % n)];
    r.max_step = std::max(r.max_step, norm(next - e) / h);
    if (f.trs_flag) {
      const TRSOperator theta(e.rows());
      const Mat& mirror = f.vectors[static_cast<std::size_t>((n - j) % n)];
      r.kramers = std::max(r.kramers, norm(mirror - theta.j() * e.conjugate() * jm));
    }
  }
  // Continuity across the seam compared with the typical step.
  r.seam = norm(f.vectors.front() - f.vectors.back()) / h;
  return r;
}

}  // namespace topoinv
