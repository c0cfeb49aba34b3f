#pragma once

namespace topoinv {

/// Numerical tolerances shared by all modules. Every check reports its
/// residual; these only decide pass/fail.
struct Tolerances {
  double projector = 1e-10;      // ||P^2 - P|| + ||P - P*||
  double rank = 1e-8;            // |tr P - m|
  double periodicity = 1e-10;    // ||P(k) - P(k + 2 pi e_i)||
  double gap = 1e-6;             // minimal admissible spectral gap
  double trs = 1e-8;             // ||P(-k) - Theta(P(k))||
  double pairing = 1e-10;        // Kramers pairing residual of symplectic bases
  double unitarity = 1e-9;
  double transport = 1e-7;       // intertwining residual at N = 256
  double w_periodicity = 1e-8;
  double step_drift = 1e-4;      // unitarity drift of one RK4 step before reprojection
  double branch = 1e-10;         // distance of an eigenphase from a log branch cut
  double commutation = 1e-4;     // ||[M, P(k0)]|| of a logarithm used to periodize transport
  double snap = 1e-3;            // maximal residual for snapping to Z or {+1, -1}
  double extension = 1e-8;       // constancy of the reference end of an extension
  double fd_step = 1e-3;         // central-difference step for projector derivatives
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace topoinv
