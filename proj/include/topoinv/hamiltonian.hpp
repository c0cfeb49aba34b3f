#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "topoinv/error.hpp"
#include "topoinv/linalg.hpp"

namespace topoinv {

/// One Fourier component of a Bloch Hamiltonian: H(k) += matrix * exp(i k . vector).
struct HoppingTerm {
  std::array<int, 2> vector{0, 0};
  Mat matrix;
};

/// Tight-binding Hamiltonian H(k) = sum_v T_v exp(i k . v) in reduced momentum
/// coordinates k = (k1, k2) in [-pi, pi]^2.
struct BlochHamiltonianSpec {
  std::string name;
  int dim = 0;
  std::vector<HoppingTerm> terms;
  std::map<std::string, double> parameters;

  Mat at(double k1, double k2) const {
    Mat h = Mat::Zero(dim, dim);
    for (const auto& t : terms) h += t.matrix * std::exp(kI * (k1 * t.vector[0] + k2 * t.vector[1]));
    return h;
  }

  /// Analytic gradient (dH/dk1, dH/dk2) of the trigonometric polynomial.
  std::array<Mat, 2> gradient(double k1, double k2) const {
    std::array<Mat, 2> g{Mat::Zero(dim, dim), Mat::Zero(dim, dim)};
    for (const auto& t : terms) {
      const cplx phase = std::exp(kI * (k1 * t.vector[0] + k2 * t.vector[1]));
      g[0] += (kI * double(t.vector[0]) * phase) * t.matrix;
      g[1] += (kI * double(t.vector[1]) * phase) * t.matrix;
    }
    return g;
  }
};

/// Checks the Hermiticity pairing: for every vector v the summed coefficient of
/// -v is the adjoint of the summed coefficient of v. Throws SchemaError.
inline void validate_hermitian_pairing(const BlochHamiltonianSpec& spec, double tol = 1e-12) {
  if (spec.dim <= 0) throw Error(ErrorKind::SchemaError, "dim must be positive");
  std::map<std::array<int, 2>, Mat> summed;
  for (const auto& t : spec.terms) {
    if (t.matrix.rows() != spec.dim || t.matrix.cols() != spec.dim) {
      throw Error(ErrorKind::SchemaError, "term matrix does not match dim in model '" + spec.name + "'");
    }
    if (!all_finite(t.matrix)) throw Error(ErrorKind::SchemaError, "non-finite matrix entry");
    auto [it, inserted] = summed.try_emplace(t.vector, t.matrix);
    if (!inserted) it->second += t.matrix;
  }
  for (const auto& [v, m] : summed) {
    const std::array<int, 2> minus{-v[0], -v[1]};
    auto it = summed.find(minus);
    const Mat partner = (it == summed.end()) ? Mat::Zero(spec.dim, spec.dim) : it->second;
    if (norm(partner - m.adjoint()) > tol * std::max(1.0, norm(m))) {
      throw Error(ErrorKind::SchemaError, "terms: missing or inconsistent conjugate term for vector [" +
                                              std::to_string(v[0]) + "," + std::to_string(v[1]) + "]");
    }
  }
}

}  // namespace topoinv
