#pragma once

// Lattice (link-variable) invariants computed directly from Hamiltonian
// eigenvectors. These share no code with the projector, transport or WZ
// machinery and serve as independent oracles for it.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace topoinv::oracles {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using HamiltonianFn = std::function<Mat(double, double)>;

namespace detail {

inline double node(int j, int n) { return -std::numbers::pi + 2.0 * std::numbers::pi * j / n; }

inline Mat occupied(const Mat& h, double fermi) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  int m = 0;
  while (m < h.rows() && es.eigenvalues()(m) < fermi) ++m;
  return es.eigenvectors().leftCols(m);
}

inline cplx link(const Mat& a, const Mat& b) {
  const cplx d = (a.adjoint() * b).determinant();
  return d / std::abs(d);
}

// Kramers-paired orthonormal basis of span(v) under theta = J K.
inline Mat kramers_basis(const Mat& v, const Mat& j) {
  const Eigen::Index n = v.rows(), m = v.cols();
  Mat p = v * v.adjoint();
  Mat out(n, m);
  Eigen::Index filled = 0;
  for (Eigen::Index c = 0; c < n && filled < m; ++c) {
    Eigen::VectorXcd x = p.col(c);
    for (Eigen::Index a = 0; a < filled; ++a) x -= out.col(a) * out.col(a).dot(x);
    if (x.norm() < 1e-3) continue;
    x.normalize();
    out.col(filled) = x;
    out.col(filled + 1) = j * x.conjugate();
    filled += 2;
  }
  return out;
}

}  // namespace detail

/// Fukui-Hatsugai-Suzuki Chern number of the bands below `fermi` on an n x n
/// grid. Returns the raw (integer-valued for gapped data) sum.
inline double fhs_chern(const HamiltonianFn& h, double fermi, int n) {
  std::vector<Mat> v(static_cast<std::size_t>(n * n));
  auto at = [&](int i, int j) -> const Mat& { return v[static_cast<std::size_t>(((i + n) % n) * n + (j + n) % n)]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(i * n + j)] = detail::occupied(h(detail::node(i, n), detail::node(j, n)), fermi);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const cplx u = detail::link(at(i, j), at(i + 1, j)) * detail::link(at(i + 1, j), at(i + 1, j + 1)) *
                     detail::link(at(i + 1, j + 1), at(i, j + 1)) * detail::link(at(i, j + 1), at(i, j));
      total += std::arg(u);
    }
  }
  return total / (2.0 * std::numbers::pi);
}

/// Fukui-Hatsugai lattice Z2 invariant for theta = J K (J block-diagonal
/// [[0,1],[-1,0]]). The frame on the lines k1 = 0 and k1 = pi obeys
/// E(-k) = J conj(E(k)) J_m; the invariant counts lattice field-strength
/// integers over the half zone k1 in [0, pi]. Returns 0 or 1.
inline int fh_z2(const HamiltonianFn& h, double fermi, int n) {
  if (n % 4 != 0) n += 4 - n % 4;
  const Eigen::Index dim = h(0.0, 0.0).rows();
  Mat j = Mat::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; b += 2) {
    j(b, b + 1) = 1.0;
    j(b + 1, b) = -1.0;
  }
  const int half = n / 2;  // k1 index of 0; the EBZ covers i = half .. n (n meaning pi)
  // Columns i = half .. n, rows j = 0 .. n-1.
  std::vector<std::vector<Mat>> v(static_cast<std::size_t>(half + 1), std::vector<Mat>(static_cast<std::size_t>(n)));
  auto k1_of = [&](int c) { return detail::node(half + c, n); };
  for (int c = 0; c <= half; ++c) {
    const bool boundary = (c == 0 || c == half);
    for (int r = 0; r < n; ++r) {
      const double k1 = k1_of(c), k2 = detail::node(r, n);
      Mat occ = detail::occupied(h(k1, k2), fermi);
      if (!boundary) {
        v[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = occ;
        continue;
      }
      // On the TRS lines: r = 0 (k2 = -pi) and r = n/2 (k2 = 0) are fixed
      // points; r in (n/2, n) are representatives, r in (0, n/2) are images.
      if (r == 0 || r == n / 2) {
        v[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = detail::kramers_basis(occ, j);
      } else if (r > n / 2) {
        v[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = occ;
      }
    }
    if (boundary) {
      for (int r = 1; r < n / 2; ++r) {
        const Mat& src = v[static_cast<std::size_t>(c)][static_cast<std::size_t>(n - r)];
        const Eigen::Index m = src.cols();
        Mat jm = Mat::Zero(m, m);
        for (Eigen::Index b = 0; b < m; b += 2) {
          jm(b, b + 1) = 1.0;
          jm(b + 1, b) = -1.0;
        }
        v[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = j * src.conjugate() * jm;
      }
    }
  }
  auto at = [&](int c, int r) -> const Mat& { return v[static_cast<std::size_t>(c)][static_cast<std::size_t>((r + n) % n)]; };
  // At k1 = pi the column c = half is the same physical line as k1 = -pi.
  double curvature = 0.0;
  for (int c = 0; c < half; ++c) {
    for (int r = 0; r < n; ++r) {
      const cplx u = detail::link(at(c, r), at(c + 1, r)) * detail::link(at(c + 1, r), at(c + 1, r + 1)) *
                     detail::link(at(c + 1, r + 1), at(c, r + 1)) * detail::link(at(c, r + 1), at(c, r));
      curvature += std::arg(u);
    }
  }
  double boundary = 0.0;
  for (int r = 0; r < n; ++r) {
    boundary += std::arg(detail::link(at(half, r), at(half, r + 1)));
    boundary -= std::arg(detail::link(at(0, r), at(0, r + 1)));
  }
  const double raw = (boundary - curvature) / (2.0 * std::numbers::pi);
  const long z = std::lround(raw);
  return static_cast<int>(((z % 2) + 2) % 2);
}

/// Spin-Chern parity for Hamiltonians that conserve the spin index of the
/// interleaved basis (even rows/columns form the up sector).
inline int spin_chern_parity(const HamiltonianFn& h, double fermi, int n) {
  auto up = [&](double k1, double k2) {
    Mat full = h(k1, k2);
    const Eigen::Index d = full.rows() / 2;
    Mat s(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) s(a, b) = full(2 * a, 2 * b);
    return s;
  };
  const long c = std::lround(fhs_chern(up, fermi, n));
  return static_cast<int>(((c % 2) + 2) % 2);
}

}  // namespace topoinv::oracles
