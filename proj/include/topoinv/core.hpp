#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "topoinv/config.hpp"
#include "topoinv/error.hpp"
#include "topoinv/hamiltonian.hpp"
#include "topoinv/linalg.hpp"

namespace topoinv {

// ---------------------------------------------------------------------------
// Time-reversal structure
// ---------------------------------------------------------------------------

/// Antiunitary theta = J K on C^{2M}, with K complex conjugation in the working
/// basis and J the block symplectic matrix. theta^2 = -1.
class TRSOperator {
 public:
  explicit TRSOperator(Eigen::Index dim) : dim_(dim), j_(symplectic_matrix(dim)) {}

  Eigen::Index dim() const { return dim_; }
  const Mat& j() const { return j_; }

  /// theta v = J conj(v); acts column-wise on matrices.
  Mat apply(const Mat& v) const { return j_ * v.conjugate(); }

  /// Theta(g) = theta g theta^{-1} = J conj(g) J^{-1}.
  Mat conjugate(const Mat& g) const { return j_ * g.conjugate() * j_.transpose(); }

 private:
  Eigen::Index dim_;
  Mat j_;
};

// ---------------------------------------------------------------------------
// Projector families
// ---------------------------------------------------------------------------

enum class Domain { Loop, Torus2D, Cylinder };

struct DerivativeMode {
  enum class Kind { Analytic, CentralDifference };
  Kind kind = Kind::CentralDifference;
  double step = 1e-3;

  static DerivativeMode analytic() { return {Kind::Analytic, 0.0}; }
  static DerivativeMode central(double h = 1e-3) { return {Kind::CentralDifference, h}; }
};

/// Smooth periodic family k -> P(k) of rank-m orthogonal projectors on C^N.
/// For Domain::Loop only k1 is meaningful. Immutable; samplers are pure.
class ProjectorFamily {
 public:
  using Sampler = std::function<Mat(double, double)>;
  using GradientSampler = std::function<std::array<Mat, 2>(double, double)>;

  ProjectorFamily(int dim, int rank, Domain domain, Sampler sampler, DerivativeMode mode = {},
                  GradientSampler analytic_gradient = {})
      : dim_(dim), rank_(rank), domain_(domain), sampler_(std::move(sampler)),
        gradient_(std::move(analytic_gradient)), mode_(mode) {
    if (dim <= 0 || rank <= 0 || rank > dim) throw Error(ErrorKind::BadDims, "invalid projector family dimensions");
    if (mode_.kind == DerivativeMode::Kind::Analytic && !gradient_) {
      throw Error(ErrorKind::BadConfig, "analytic derivative mode needs an analytic gradient sampler");
    }
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  Domain domain() const { return domain_; }
  DerivativeMode derivative_mode() const { return mode_; }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }

  Mat operator()(double k1, double k2 = 0.0) const { return sampler_(k1, k2); }

  /// (dP/dk1, dP/dk2). Central differences use Richardson extrapolation over
  /// steps h and h/2, which is fourth order in h.
  std::array<Mat, 2> gradient(double k1, double k2 = 0.0) const {
    if (mode_.kind == DerivativeMode::Kind::Analytic) return gradient_(k1, k2);
    std::array<Mat, 2> g;
    g[0] = richardson(k1, k2, 1.0, 0.0);
    g[1] = domain_ == Domain::Loop ? Mat::Zero(dim_, dim_) : richardson(k1, k2, 0.0, 1.0);
    return g;
  }

  /// Directional derivative d/ds P(k + s d).
  Mat directional_derivative(double k1, double k2, double d1, double d2) const {
    if (mode_.kind == DerivativeMode::Kind::Analytic) {
      auto g = gradient_(k1, k2);
      return d1 * g[0] + d2 * g[1];
    }
    return richardson(k1, k2, d1, d2);
  }

  ProjectorFamily with_mode(DerivativeMode mode) const {
    return ProjectorFamily(dim_, rank_, domain_, sampler_, mode, gradient_);
  }

 private:
  Mat richardson(double k1, double k2, double d1, double d2) const {
    const double h = mode_.step;
    auto diff = [&](double s) {
      return Mat((sampler_(k1 + s * d1, k2 + s * d2) - sampler_(k1 - s * d1, k2 - s * d2)) / (2.0 * s));
    };
    return (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
  }

  int dim_;
  int rank_;
  Domain domain_;
  Sampler sampler_;
  GradientSampler gradient_;
  DerivativeMode mode_;
};

/// Restriction of a 2D family to the loop s -> origin + s * direction,
/// s in [-pi, pi]. With direction (0, 1) and origin (a, 0) this is T_a.
class LoopFamily {
 public:
  LoopFamily(ProjectorFamily family, std::array<double, 2> origin, std::array<double, 2> direction)
      : family_(std::move(family)), origin_(origin), direction_(direction) {}

  /// The loop k2 -> P(a, k2), oriented by increasing k2.
  static LoopFamily at_k1(const ProjectorFamily& f, double a) { return LoopFamily(f, {a, 0.0}, {0.0, 1.0}); }
  /// The loop k1 -> P(k1, b).
  static LoopFamily at_k2(const ProjectorFamily& f, double b) { return LoopFamily(f, {0.0, b}, {1.0, 0.0}); }

  int dim() const { return family_.dim(); }
  int rank() const { return family_.rank(); }
  const ProjectorFamily& family() const { return family_; }

  std::array<double, 2> point(double s) const {
    return {origin_[0] + s * direction_[0], origin_[1] + s * direction_[1]};
  }
  Mat operator()(double s) const {
    auto p = point(s);
    return family_(p[0], p[1]);
  }
  Mat derivative(double s) const {
    auto p = point(s);
    return family_.directional_derivative(p[0], p[1], direction_[0], direction_[1]);
  }

 private:
  ProjectorFamily family_;
  std::array<double, 2> origin_;
  std::array<double, 2> direction_;
};

struct FamilyReport {
  double max_projector_residual = 0.0;
  double max_rank_residual = 0.0;
  double max_periodicity_residual = 0.0;
  bool ok = true;
};

/// Checks projector, rank and periodicity invariants on an n x n grid (n points
/// for loops).
inline FamilyReport validate_family(const ProjectorFamily& f, int n, const Tolerances& tol = default_tolerances()) {
  FamilyReport r;
  const int n2 = f.domain() == Domain::Loop ? 1 : n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n2; ++j) {
      const double k1 = periodic_node(i, n), k2 = f.domain() == Domain::Loop ? 0.0 : periodic_node(j, n);
      Mat p = f(k1, k2);
      r.max_projector_residual = std::max(r.max_projector_residual, projector_residual(p));
      r.max_rank_residual = std::max(r.max_rank_residual, std::abs(p.trace().real() - f.rank()));
      double per = norm(p - f(k1 + kTwoPi, k2));
      if (f.domain() != Domain::Loop) per = std::max(per, norm(p - f(k1, k2 + kTwoPi)));
      r.max_periodicity_residual = std::max(r.max_periodicity_residual, per);
    }
  }
  r.ok = r.max_projector_residual <= tol.projector && r.max_rank_residual <= tol.rank &&
         r.max_periodicity_residual <= tol.periodicity;
  return r;
}

struct ProjectorOptions {
  double gap_threshold = 1e-6;
  int check_grid = 64;  // 0 disables the construction-time gap scan
  DerivativeMode mode = DerivativeMode::central();
};

namespace detail {

struct OccupiedSpectrum {
  HermitianSpectrum spec;
  int occupied = 0;
  double gap = 0.0;
};

inline OccupiedSpectrum occupied_spectrum(const BlochHamiltonianSpec& h, double k1, double k2, double fermi) {
  OccupiedSpectrum out{hermitian_spectrum(h.at(k1, k2)), 0, 0.0};
  const auto& e = out.spec.values;
  while (out.occupied < e.size() && e(out.occupied) < fermi) ++out.occupied;
  double below = out.occupied > 0 ? fermi - e(out.occupied - 1) : std::numeric_limits<double>::infinity();
  double above = out.occupied < e.size() ? e(out.occupied) - fermi : std::numeric_limits<double>::infinity();
  // Gap between the eigenvalues straddling the Fermi level.
  out.gap = below + above;
  return out;
}

}  // namespace detail

/// P(k) = sum of eigenprojectors of H(k) with eigenvalue below the Fermi level.
/// Throws GapClosure if the gap is below the threshold or the occupied rank
/// changes, both at construction (grid scan) and on every later sample.
inline ProjectorFamily make_projector_family(const BlochHamiltonianSpec& hamiltonian, double fermi_level,
                                             const ProjectorOptions& opts = {}) {
  auto h = std::make_shared<const BlochHamiltonianSpec>(hamiltonian);
  const auto origin = detail::occupied_spectrum(*h, 0.0, 0.0, fermi_level);
  const int rank = origin.occupied;
  if (rank == 0 || rank == h->dim) throw GapClosure(0.0, 0.0, 0.0);
  const double threshold = opts.gap_threshold;

  auto checked = [h, rank, fermi_level, threshold](double k1, double k2) {
    auto s = detail::occupied_spectrum(*h, k1, k2, fermi_level);
    if (s.occupied != rank) throw GapClosure(k1, k2, 0.0);
    if (s.gap <= threshold) throw GapClosure(k1, k2, s.gap);
    return s;
  };

  for (int i = 0; i < opts.check_grid; ++i) {
    for (int j = 0; j < opts.check_grid; ++j) {
      checked(periodic_node(i, opts.check_grid), periodic_node(j, opts.check_grid));
    }
  }

  auto sampler = [checked, rank](double k1, double k2) {
    auto s = checked(k1, k2);
    const Mat v = s.spec.vectors.leftCols(rank);
    return Mat(v * v.adjoint());
  };
  // First-order perturbation theory: only occupied/unoccupied pairs contribute.
  auto gradient = [checked, h, rank](double k1, double k2) {
    auto s = checked(k1, k2);
    auto dh = h->gradient(k1, k2);
    const Mat& v = s.spec.vectors;
    const auto& e = s.spec.values;
    std::array<Mat, 2> out;
    for (int d = 0; d < 2; ++d) {
      Mat rot = v.adjoint() * dh[d] * v;
      Mat c = Mat::Zero(h->dim, h->dim);
      for (int a = 0; a < rank; ++a) {
        for (int b = rank; b < h->dim; ++b) {
          const cplx x = rot(a, b) / (e(a) - e(b));
          c(a, b) = x;
          c(b, a) = std::conj(x);
        }
      }
      out[d] = v * c * v.adjoint();
    }
    return out;
  };
  return ProjectorFamily(h->dim, rank, Domain::Torus2D, sampler, opts.mode, gradient);
}

/// Wraps a fixed projector as a constant family (zero derivative).
inline ProjectorFamily constant_family(const Mat& p, Domain domain = Domain::Torus2D) {
  const int rank = static_cast<int>(std::lround(p.trace().real()));
  const Eigen::Index n = p.rows();
  return ProjectorFamily(static_cast<int>(n), rank, domain, [p](double, double) { return p; },
                         DerivativeMode::analytic(),
                         [n](double, double) { return std::array<Mat, 2>{Mat::Zero(n, n), Mat::Zero(n, n)}; });
}

// ---------------------------------------------------------------------------
// Time-reversal checks
// ---------------------------------------------------------------------------

struct TrsCheck {
  bool ok = false;
  double max_violation = 0.0;
};

/// max_k ||P(-k) - Theta(P(k))|| over the symmetric n x n grid (n points for
/// loops). Passes when the violation is at most tol.trs.
inline TrsCheck check_trs(const ProjectorFamily& family, const TRSOperator& theta, int n = 64,
                          const Tolerances& tol = default_tolerances()) {
  if (family.dim() != theta.dim()) throw Error(ErrorKind::DimensionMismatch, "family dimension differs from theta");
  TrsCheck r;
  const bool loop = family.domain() == Domain::Loop;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < (loop ? 1 : n); ++j) {
      const double k1 = periodic_node(i, n), k2 = loop ? 0.0 : periodic_node(j, n);
      const double v = norm(family(-k1, -k2) - theta.conjugate(family(k1, k2)));
      r.max_violation = std::max(r.max_violation, v);
    }
  }
  r.ok = r.max_violation <= tol.trs;
  return r;
}

inline TrsCheck check_trs(const LoopFamily& loop, const TRSOperator& theta, int n = 64,
                          const Tolerances& tol = default_tolerances()) {
  if (loop.dim() != theta.dim()) throw Error(ErrorKind::DimensionMismatch, "family dimension differs from theta");
  TrsCheck r;
  for (int i = 0; i < n; ++i) {
    const double s = periodic_node(i, n);
    r.max_violation = std::max(r.max_violation, norm(loop(-s) - theta.conjugate(loop(s))));
  }
  r.ok = r.max_violation <= tol.trs;
  return r;
}

// ---------------------------------------------------------------------------
// Symplectic (Kramers) bases
// ---------------------------------------------------------------------------

struct SymplecticBasis {
  Mat vectors;             // N x m, columns e_1 .. e_m with e_{2j} = theta e_{2j-1}
  double pairing_residual; // max |<theta e_{2j-1}, e_{2j}> - 1|, |<theta e_a, e_b>| off-pair
  double span_residual;    // ||P - E E*||
};

/// Orthonormal basis of Ran P organized in Kramers pairs. Requires P to be
/// Theta-invariant and of even rank. With a seed, the seed vectors are random
/// (giving a random element of the Sp(m/2) orbit of bases); otherwise the
/// standard basis vectors are swept in order.
inline SymplecticBasis symplectic_basis(const TRSOperator& theta, const Mat& projector,
                                        std::optional<unsigned> seed = std::nullopt,
                                        const Tolerances& tol = default_tolerances()) {
  if (projector.rows() != theta.dim()) throw Error(ErrorKind::DimensionMismatch, "projector dimension differs from theta");
  const int rank = static_cast<int>(std::lround(projector.trace().real()));
  if (rank % 2 != 0) throw Error(ErrorKind::OddRank, "rank " + std::to_string(rank) + " is odd");
  const double violation = norm(projector - theta.conjugate(projector));
  if (violation > tol.trs) throw Error(ErrorKind::NotInvariant, "projector is not Theta-invariant (" + std::to_string(violation) + ")");

  const Eigen::Index n = projector.rows();
  Mat basis(n, rank);
  int filled = 0;
  std::mt19937_64 rng(seed.value_or(0));
  std::normal_distribution<double> normal;
  Eigen::Index next_std = 0;
  int attempts = 0;
  while (filled < rank) {
    if (++attempts > 64 * static_cast<int>(n) + 64) throw Error(ErrorKind::NotInvariant, "could not span Ran P");
    Vec c;
    if (seed) {
      c = Vec(n);
      for (Eigen::Index i = 0; i < n; ++i) c(i) = cplx(normal(rng), normal(rng));
    } else {
      if (next_std >= n) throw Error(ErrorKind::NotInvariant, "could not span Ran P");
      c = Vec::Unit(n, next_std++);
    }
    Vec v = projector * c;
    for (int a = 0; a < filled; ++a) v -= basis.col(a) * basis.col(a).dot(v);
    const double nv = v.norm();
    if (nv < 1e-3) continue;
    v /= nv;
    // Second Gram-Schmidt pass for accuracy.
    for (int a = 0; a < filled; ++a) v -= basis.col(a) * basis.col(a).dot(v);
    v.normalize();
    basis.col(filled) = v;
    basis.col(filled + 1) = theta.apply(v);
    filled += 2;
  }

  SymplecticBasis out{basis, 0.0, norm(projector - basis * basis.adjoint())};
  const Mat tb = theta.apply(basis);
  const Mat gram = tb.adjoint() * basis;  // gram(a, b) = <theta e_a, e_b>
  for (int a = 0; a < rank; ++a) {
    for (int b = 0; b < rank; ++b) {
      cplx expected = 0.0;
      if (a % 2 == 0 && b == a + 1) expected = 1.0;
      if (a % 2 == 1 && b == a - 1) expected = -1.0;
      out.pairing_residual = std::max(out.pairing_residual, std::abs(gram(a, b) - expected));
    }
  }
  return out;
}

}  // namespace topoinv
