#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "topoinv/error.hpp"

namespace topoinv {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Frobenius norm; an upper bound for the operator norm, used for all residuals.
inline double norm(const Mat& a) { return a.norm(); }

inline bool all_finite(const Mat& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i].real()) || !std::isfinite(a.data()[i].imag())) return false;
  }
  return true;
}

inline double unitarity_residual(const Mat& u) {
  return norm(u.adjoint() * u - Mat::Identity(u.cols(), u.cols()));
}
inline double hermiticity_residual(const Mat& h) { return norm(h - h.adjoint()); }
inline double projector_residual(const Mat& p) { return norm(p * p - p) + norm(p - p.adjoint()); }

inline bool is_unitary(const Mat& u, double tol) { return u.rows() == u.cols() && unitarity_residual(u) <= tol; }
inline bool is_hermitian(const Mat& h, double tol) { return h.rows() == h.cols() && hermiticity_residual(h) <= tol; }
inline bool is_projector(const Mat& p, double tol) { return p.rows() == p.cols() && projector_residual(p) <= tol; }

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

/// Nearest unitary in Frobenius norm (polar factor).
inline Mat polar_unitary(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// f(H) for Hermitian H via its spectral decomposition.
template <typename F>
Mat hermitian_function(const Mat& h, F&& f) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const auto& v = es.eigenvectors();
  Vec d(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) d(i) = f(es.eigenvalues()(i));
  return v * d.asDiagonal() * v.adjoint();
}

/// exp(i t H) for Hermitian H.
inline Mat expi_hermitian(const Mat& h, double t = 1.0) {
  return hermitian_function(h, [t](double x) { return std::exp(kI * (t * x)); });
}

/// Eigen-decomposition U = Q diag(e^{i phase}) Q* of a unitary (normal) matrix.
/// The complex Schur form of a normal matrix is diagonal, which keeps Q unitary
/// even across degenerate eigenvalues.
struct UnitarySpectrum {
  Mat q;
  std::vector<double> phases;  // principal arguments in (-pi, pi]
};

inline UnitarySpectrum unitary_spectrum(const Mat& u) {
  Eigen::ComplexSchur<Mat> schur(u);
  UnitarySpectrum out;
  out.q = schur.matrixU();
  const Mat& t = schur.matrixT();
  out.phases.resize(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index i = 0; i < u.rows(); ++i) out.phases[static_cast<std::size_t>(i)] = std::arg(t(i, i));
  return out;
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
struct HermitianSpectrum {
  Mat vectors;
  Eigen::VectorXd values;
};

inline HermitianSpectrum hermitian_spectrum(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  return {es.eigenvectors(), es.eigenvalues()};
}

/// Value and derivative of exp(i t H(x)) given H, dH/dx, via the Daleckii-Krein
/// divided-difference formula. Returns {value, d/dx, d/dt}.
struct ExpJet {
  Mat value, dx, dt;
};

inline ExpJet expi_hermitian_jet(const HermitianSpectrum& spec, const Mat& dh, double t) {
  const Eigen::Index n = spec.values.size();
  const Mat& v = spec.vectors;
  Vec e(n);
  for (Eigen::Index a = 0; a < n; ++a) e(a) = std::exp(kI * (t * spec.values(a)));
  Mat rotated = v.adjoint() * dh * v;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double la = spec.values(a), lb = spec.values(b);
      cplx gamma;
      if (std::abs(la - lb) < 1e-9) {
        gamma = kI * t * std::exp(kI * (t * 0.5 * (la + lb)));
      } else {
        gamma = (e(a) - e(b)) / (la - lb);
      }
      rotated(a, b) *= gamma;
    }
  }
  ExpJet out;
  out.value = v * e.asDiagonal() * v.adjoint();
  out.dx = v * rotated * v.adjoint();
  Vec ie(n);
  for (Eigen::Index a = 0; a < n; ++a) ie(a) = kI * spec.values(a) * e(a);
  out.dt = v * ie.asDiagonal() * v.adjoint();
  return out;
}

/// Uniform periodic grid k_j = -pi + 2 pi j / n, j = 0..n-1. Contains 0 and -pi
/// (identified with pi) whenever n is even.
inline double periodic_node(int j, int n) { return -kPi + kTwoPi * j / n; }

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Weights w_j such that sum_j w_j f(k_j) integrates a smooth 2 pi-periodic f
/// over [0, pi], exact for trigonometric polynomials of degree < n/2. Obtained
/// by integrating the trigonometric interpolant on the periodic grid.
inline std::vector<double> half_period_weights(int n) {
  if (n < 4 || n % 4 != 0) throw Error(ErrorKind::BadConfig, "half-period quadrature needs n divisible by 4");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double k = periodic_node(j, n);
    double s = kPi;
    for (int m = 1; m < n / 2; m += 2) s += 4.0 / m * std::sin(m * k);
    w[static_cast<std::size_t>(j)] = s / n;
  }
  return w;
}

/// Composite Simpson weights on [0, 1] with `intervals` (even) sub-intervals.
inline std::vector<double> simpson_weights(int intervals) {
  if (intervals < 2 || intervals % 2 != 0) throw Error(ErrorKind::BadConfig, "Simpson needs an even interval count");
  const double h = 1.0 / intervals;
  std::vector<double> w(static_cast<std::size_t>(intervals + 1));
  for (int i = 0; i <= intervals; ++i) {
    double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w[static_cast<std::size_t>(i)] = c * h / 3.0;
  }
  return w;
}

enum class Stencil { Central4, Spectral };

/// Derivative of periodic matrix samples on the uniform grid over a 2 pi period.
inline std::vector<Mat> periodic_derivative(std::span<const Mat> f, Stencil stencil) {
  const int n = static_cast<int>(f.size());
  std::vector<Mat> out(f.size());
  const double h = kTwoPi / n;
  auto at = [&](int j) -> const Mat& { return f[static_cast<std::size_t>(((j % n) + n) % n)]; };
  if (stencil == Stencil::Central4) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(j)] = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h);
    }
    return out;
  }
  // Spectral: f'(k_j) = sum_l D_{jl} f_l with the periodic sinc-derivative
  // matrix, D_{jl} = (1/2)(-1)^{j-l} cot((k_j - k_l)/2) for even n.
  for (int j = 0; j < n; ++j) {
    Mat acc = Mat::Zero(f[0].rows(), f[0].cols());
    for (int l = 0; l < n; ++l) {
      if (l == j) continue;
      const int d = j - l;
      const double sign = (d % 2 == 0) ? 1.0 : -1.0;
      acc += 0.5 * sign / std::tan(0.5 * h * d) * at(l);
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

/// The 2M x 2M block-diagonal symplectic matrix with blocks [[0, 1], [-1, 0]].
inline Mat symplectic_matrix(Eigen::Index dim) {
  if (dim <= 0 || dim % 2 != 0) throw Error(ErrorKind::BadDims, "symplectic matrix needs an even positive dimension");
  Mat j = Mat::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; b += 2) {
    j(b, b + 1) = 1.0;
    j(b + 1, b) = -1.0;
  }
  return j;
}

}  // namespace topoinv
