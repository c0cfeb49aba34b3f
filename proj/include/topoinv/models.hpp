#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "topoinv/error.hpp"
#include "topoinv/hamiltonian.hpp"
#include "topoinv/linalg.hpp"

namespace topoinv {

namespace detail {

inline Mat pauli(int which) {
  Mat s = Mat::Zero(2, 2);
  switch (which) {
    case 0: s(0, 0) = 1.0; s(1, 1) = 1.0; break;
    case 1: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
    case 2: s(0, 1) = cplx(0, -1); s(1, 0) = cplx(0, 1); break;
    case 3: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
  }
  return s;
}

/// Adds coefficient c at vector v and its Hermitian partner c* at -v (c must
/// be Hermitian when v = 0).
inline void add_hopping(BlochHamiltonianSpec& h, std::array<int, 2> v, const Mat& c) {
  if (v[0] == 0 && v[1] == 0) {
    h.terms.push_back({v, c});
    return;
  }
  h.terms.push_back({v, c});
  h.terms.push_back({{-v[0], -v[1]}, c.adjoint()});
}

/// Places a small block into an n x n zero matrix at (row, col).
inline Mat embed(int n, int row, int col, const Mat& block) {
  Mat m = Mat::Zero(n, n);
  m.block(row, col, block.rows(), block.cols()) = block;
  return m;
}

inline double require(const std::map<std::string, double>& p, const std::string& model, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw Error(ErrorKind::MissingParameter, "model '" + model + "' needs parameter '" + key + "'");
  if (!std::isfinite(it->second)) throw Error(ErrorKind::MissingParameter, "parameter '" + key + "' is not finite");
  return it->second;
}

// The three next-nearest-neighbour vectors of the honeycomb lattice in the
// reduced basis, oriented counter-clockwise.
inline const std::array<std::array<int, 2>, 3>& nnn_vectors() {
  static const std::array<std::array<int, 2>, 3> v{{{1, 0}, {-1, 1}, {0, -1}}};
  return v;
}

// Nearest-neighbour vectors from A to B and their Cartesian bond directions.
inline const std::array<std::array<int, 2>, 3>& nn_vectors() {
  static const std::array<std::array<int, 2>, 3> v{{{0, 0}, {-1, 0}, {0, -1}}};
  return v;
}

inline std::array<double, 2> nn_direction(int i) {
  const double s = std::sqrt(3.0) / 2.0;
  static const std::array<std::array<double, 2>, 3> d{{{1.0, 0.0}, {-0.5, -s}, {-0.5, s}}};
  return d[static_cast<std::size_t>(i)];
}

inline BlochHamiltonianSpec haldane(const std::map<std::string, double>& p) {
  const double t1 = require(p, "haldane", "t1"), t2 = require(p, "haldane", "t2");
  const double phi = require(p, "haldane", "phi"), mass = require(p, "haldane", "M");
  BlochHamiltonianSpec h{"haldane", 2, {}, p};
  Mat onsite = Mat::Zero(2, 2);
  onsite(0, 0) = mass;
  onsite(1, 1) = -mass;
  Mat nn = Mat::Zero(2, 2);
  nn(0, 1) = t1;
  add_hopping(h, {0, 0}, onsite + nn + nn.adjoint());
  for (std::size_t i = 1; i < 3; ++i) add_hopping(h, nn_vectors()[i], nn);
  for (const auto& v : nnn_vectors()) {
    Mat c = Mat::Zero(2, 2);
    c(0, 0) = t2 * std::exp(kI * phi);
    c(1, 1) = t2 * std::exp(-kI * phi);
    add_hopping(h, v, c);
  }
  return h;
}

// Basis (A up, A down, B up, B down).
inline BlochHamiltonianSpec kane_mele(const std::map<std::string, double>& p) {
  const double t = require(p, "kane_mele", "t"), so = require(p, "kane_mele", "lambda_so");
  const double rashba = require(p, "kane_mele", "lambda_r"), stagger = require(p, "kane_mele", "lambda_v");
  BlochHamiltonianSpec h{"kane_mele", 4, {}, p};
  const Mat s0 = pauli(0), sx = pauli(1), sy = pauli(2), sz = pauli(3);
  Mat onsite = embed(4, 0, 0, stagger * s0) + embed(4, 2, 2, -stagger * s0);
  for (int i = 0; i < 3; ++i) {
    const auto d = nn_direction(i);
    Mat spin = t * s0 + kI * rashba * (d[1] * sx - d[0] * sy);
    Mat c = embed(4, 0, 2, spin);
    if (i == 0) {
      onsite += c + c.adjoint();
    } else {
      add_hopping(h, nn_vectors()[static_cast<std::size_t>(i)], c);
    }
  }
  h.terms.push_back({{0, 0}, onsite});
  // Spin-conserving intrinsic spin-orbit coupling: Haldane flux +-pi/2 per spin.
  for (const auto& v : nnn_vectors()) {
    Mat c = embed(4, 0, 0, kI * so * sz) + embed(4, 2, 2, -kI * so * sz);
    add_hopping(h, v, c);
  }
  return h;
}

// Basis (E up, E down, H up, H down); spin down carries h*(-k).
inline BlochHamiltonianSpec bhz(const std::map<std::string, double>& p) {
  const double mass = require(p, "bhz", "M");
  BlochHamiltonianSpec h{"bhz", 4, {}, p};
  const Mat sx = pauli(1), sy = pauli(2), sz = pauli(3);
  // Blocks in (E, H) orbital space for each spin; mapped to the interleaved basis.
  auto place = [](const Mat& up, const Mat& down) {
    Mat m = Mat::Zero(4, 4);
    const int idx_up[2] = {0, 2}, idx_down[2] = {1, 3};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        m(idx_up[a], idx_up[b]) = up(a, b);
        m(idx_down[a], idx_down[b]) = down(a, b);
      }
    }
    return m;
  };
  // up: sin k1 sx + sin k2 sy + (M - cos k1 - cos k2) sz
  // down: -sin k1 sx + sin k2 sy + (M - cos k1 - cos k2) sz
  const cplx half_i = 0.5 / kI;
  h.terms.push_back({{0, 0}, place(mass * sz, mass * sz)});
  add_hopping(h, {1, 0}, place(half_i * sx - 0.5 * sz, -half_i * sx - 0.5 * sz));
  add_hopping(h, {0, 1}, place(half_i * sy - 0.5 * sz, half_i * sy - 0.5 * sz));
  return h;
}

inline BlochHamiltonianSpec flat_two_band(const std::map<std::string, double>& p) {
  BlochHamiltonianSpec h{"flat_two_band", 2, {}, p};
  Mat c = Mat::Zero(2, 2);
  c(1, 0) = 1.0;
  add_hopping(h, {1, 0}, c);
  return h;
}

inline BlochHamiltonianSpec atomic(const std::map<std::string, double>& p) {
  BlochHamiltonianSpec h{"atomic", 4, {}, p};
  Mat c = Mat::Zero(4, 4);
  c.diagonal() << -1.0, -1.0, 1.0, 1.0;
  h.terms.push_back({{0, 0}, c});
  return h;
}

}  // namespace detail

inline std::vector<std::string> builtin_model_names() {
  return {"haldane", "kane_mele", "bhz", "flat_two_band", "atomic"};
}

/// Standard parameters. Haldane defaults sit in the topological phase; the
/// trivial phase is reached with M = 2.5.
inline std::map<std::string, double> default_parameters(const std::string& name) {
  if (name == "haldane") return {{"t1", 1.0}, {"t2", 0.25}, {"phi", kPi / 2}, {"M", 0.0}};
  if (name == "kane_mele") return {{"t", 1.0}, {"lambda_so", 0.2}, {"lambda_r", 0.1}, {"lambda_v", 0.0}};
  if (name == "bhz") return {{"M", 1.0}};
  if (name == "flat_two_band" || name == "atomic") return {};
  throw Error(ErrorKind::UnknownModel, "unknown model '" + name + "'");
}

/// Builds a model zoo entry. All parameters of the model must be present;
/// use default_parameters for a complete set.
inline BlochHamiltonianSpec builtin_model(const std::string& name, const std::map<std::string, double>& params) {
  BlochHamiltonianSpec h;
  if (name == "haldane") h = detail::haldane(params);
  else if (name == "kane_mele") h = detail::kane_mele(params);
  else if (name == "bhz") h = detail::bhz(params);
  else if (name == "flat_two_band") h = detail::flat_two_band(params);
  else if (name == "atomic") h = detail::atomic(params);
  else throw Error(ErrorKind::UnknownModel, "unknown model '" + name + "'");
  validate_hermitian_pairing(h);
  return h;
}

/// Convenience overload: defaults overridden by the given values.
inline BlochHamiltonianSpec builtin_model_with_defaults(const std::string& name,
                                                        const std::map<std::string, double>& overrides = {}) {
  auto p = default_parameters(name);
  for (const auto& [k, v] : overrides) p[k] = v;
  return builtin_model(name, p);
}

/// Models that are time-reversal symmetric with theta = J K in their basis.
inline bool builtin_is_trs(const std::string& name) {
  return name == "kane_mele" || name == "bhz" || name == "atomic";
}

}  // namespace topoinv
