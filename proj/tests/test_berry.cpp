#include "catch_amalgamated.hpp"

#include <random>

#include "topoinv/berry.hpp"
#include "topoinv/models.hpp"
#include "topoinv/oracles/lattice.hpp"

using namespace topoinv;

namespace {

ProjectorFamily model(const std::string& name, std::map<std::string, double> p = {}) {
  return make_projector_family(builtin_model_with_defaults(name, p), 0.0);
}

oracles::HamiltonianFn fn(const std::string& name, std::map<std::string, double> p = {}) {
  auto h = builtin_model_with_defaults(name, p);
  return [h](double k1, double k2) { return h.at(k1, k2); };
}

BlochFrame flat_frame(int n) {
  auto loop = LoopFamily::at_k2(model("flat_two_band"), 0.0);
  auto r = transport_loop(loop, n);
  Mat basis = Mat::Zero(2, 1);
  basis(0, 0) = basis(1, 0) = 1.0 / std::sqrt(2.0);
  return build_frame(r, basis);
}

TrsFrameResult km_trs_frame(double a, std::optional<unsigned> seed = std::nullopt, int n = 256) {
  TrsFrameOptions o;
  o.n = n;
  o.basis_seed = seed;
  return build_trs_frame(LoopFamily::at_k1(model("kane_mele"), a), TRSOperator(4), o);
}

double wrap(double x) { return std::remainder(x, kTwoPi); }

Mat atomic_projector() {
  Mat p0 = Mat::Zero(4, 4);
  p0(0, 0) = p0(1, 1) = 1.0;
  return p0;
}

}  // namespace

TEST_CASE("constant frame has zero connection") {
  auto loop = LoopFamily::at_k1(constant_family(atomic_projector()), 0.0);
  auto res = build_trs_frame(loop, TRSOperator(4));
  auto c = berry_connection(res.frame);
  for (double a : c.a) CHECK(std::abs(a) < 1e-13);
  CHECK(std::abs(berry_phase(c).snapped - 1.0) < 1e-13);
  CHECK(std::abs(berry_phase_sqrt(c).snapped - 1.0) < 1e-13);
}

TEST_CASE("flat two-band connection and phase") {
  auto f = flat_frame(256);
  auto spectral = berry_connection(f, ConnectionMethod::Spectral);
  auto analytic = berry_connection(f, ConnectionMethod::Analytic);
  auto central = berry_connection(f, ConnectionMethod::Central4);
  // The lower band has A = 1/2 in the eigenvector gauge, so the loop integral is pi mod 2 pi.
  CHECK(std::abs(wrap(spectral.integral() - kPi)) < 1e-8);
  CHECK(std::abs(spectral.integral() - analytic.integral()) < 1e-7);
  CHECK(std::abs(central.integral() - analytic.integral()) < 1e-7);
  for (std::size_t j = 0; j < spectral.a.size(); ++j) CHECK(std::abs(spectral.a[j] - analytic.a[j]) < 1e-7);
  CHECK(spectral.imag_contamination < 1e-10);
  CHECK(std::abs(berry_phase(spectral).snapped + 1.0) < 1e-8);
  CHECK_THROWS_AS(berry_phase_sqrt(spectral), Error);
}

TEST_CASE("Berry phase is invariant under random smooth gauges") {
  auto f = flat_frame(256);
  const cplx ref = berry_phase(berry_connection(f)).snapped;
  double worst = 0.0;
  for (unsigned s = 0; s < 50; ++s) {
    RandomGaugeOptions o;
    o.winding = static_cast<int>(s % 5) - 2;
    auto g = random_gauge(256, 1, 100 + s, false, o);
    worst = std::max(worst, std::abs(berry_phase(berry_connection(gauge_transform(f, g))).snapped - ref));
  }
  CHECK(worst < 1e-7);

  auto km = km_trs_frame(0.0).frame;
  const cplx ref_km = berry_phase(berry_connection(km)).snapped;
  worst = 0.0;
  for (unsigned s = 0; s < 10; ++s) {
    auto g = random_gauge(256, 2, 500 + s, false);
    worst = std::max(worst, std::abs(berry_phase(berry_connection(gauge_transform(km, g))).snapped - ref_km));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("square-root phase under time-reversal symmetric gauges") {
  for (double a : {0.0, kPi}) {
    auto frame = km_trs_frame(a).frame;
    const auto conn = berry_connection(frame);
    const cplx ref = berry_phase_sqrt(conn).snapped;
    CHECK(std::abs(ref * ref - berry_phase(conn).snapped) < 1e-8);
    double worst = 0.0, worst_trs = 0.0;
    for (unsigned s = 0; s < 50; ++s) {
      RandomGaugeOptions o;
      o.winding = static_cast<int>(s % 3) - 1;
      auto g = random_trs_gauge(256, 2, 900 + s, o);
      worst_trs = std::max(worst_trs, g.trs_residual());
      auto moved = gauge_transform(frame, g);
      CHECK(moved.trs_flag);
      worst = std::max(worst, std::abs(berry_phase_sqrt(berry_connection(moved)).snapped - ref));
    }
    CHECK(worst_trs < 1e-8);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("square-root phase is stable under re-symmetrization") {
  for (double a : {0.0, kPi}) {
    const cplx one = berry_phase_sqrt(berry_connection(km_trs_frame(a, 1u).frame)).snapped;
    const cplx two = berry_phase_sqrt(berry_connection(km_trs_frame(a, 77u).frame)).snapped;
    CHECK(std::abs(one - two) < 1e-6);
  }
}

TEST_CASE("gauge transformation examples") {
  auto frame = km_trs_frame(0.0).frame;
  const double base = berry_connection(frame).integral();
  auto same = gauge_transform(frame, constant_gauge(256, Mat::Identity(2, 2), true));
  CHECK(std::abs(berry_connection(same).integral() - base) < 1e-12);
  Mat phase = Mat::Identity(2, 2);
  phase(0, 0) = std::exp(kI * 0.7);
  phase(1, 1) = std::exp(kI * -1.3);
  CHECK(std::abs(berry_connection(gauge_transform(frame, constant_gauge(256, phase))).integral() - base) < 1e-9);
  // diag(e^{ik}, e^{ik}) adds tr(u^{-1} du) = 2i, i.e. A' = A + 2.
  auto wound = gauge_transform(frame, winding_trs_gauge(256, 2, 1));
  const auto c = berry_connection(wound);
  CHECK(std::abs(c.integral() - base - 4.0 * kPi) < 1e-8);
  CHECK(std::abs(berry_phase_sqrt(c).snapped - berry_phase_sqrt(berry_connection(frame)).snapped) < 1e-8);
  CHECK_THROWS_AS(gauge_transform(frame, constant_gauge(128, Mat::Identity(2, 2))), Error);
}

TEST_CASE("Chern numbers") {
  CHECK(chern_number(berry_curvature(constant_family(atomic_projector()), 16)).raw == 0.0);

  const double oracle = oracles::fhs_chern(fn("haldane"), 0.0, 64);
  auto topo = chern_number(berry_curvature(model("haldane"), 128));
  CHECK(topo.status == SnapStatus::Snapped);
  CHECK(topo.residual < 1e-6);
  CHECK(topo.integer() == std::lround(oracle));
  CHECK(std::abs(topo.integer()) == 1);

  auto triv = chern_number(berry_curvature(model("haldane", {{"M", 2.5}}), 64));
  CHECK(triv.integer() == 0);

  auto km_field = berry_curvature(model("kane_mele"), 64);
  auto km = chern_number(km_field);
  CHECK(km.integer() == 0);
  CHECK(km.residual < 1e-8);
  double odd = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) odd = std::max(odd, std::abs(km_field.at(i, j) + km_field.at(64 - i, 64 - j)));
  CHECK(odd < 1e-7);
}

TEST_CASE("curvature is the differential of the connection") {
  // Berry phase around a rectangle against the enclosed curvature.
  auto f = model("haldane");
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> corner(-2.5, 1.5), side(0.3, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a1 = corner(rng), a2 = corner(rng), l1 = side(rng), l2 = side(rng);
    // Boundary loop parametrized by s in [-pi, pi) with equal time per side.
    auto sampler = [&](double s, double) {
      double u = (s + kPi) / kTwoPi * 4.0;
      u -= 4.0 * std::floor(u / 4.0);
      const int leg = static_cast<int>(u);
      const double x = u - leg;
      double k1 = a1, k2 = a2;
      switch (leg) {
        case 0: k1 = a1 + x * l1; break;
        case 1: k1 = a1 + l1; k2 = a2 + x * l2; break;
        case 2: k1 = a1 + l1 - x * l1; k2 = a2 + l2; break;
        default: k2 = a2 + l2 - x * l2; break;
      }
      return f(k1, k2);
    };
    ProjectorFamily boundary(2, 1, Domain::Loop, sampler);
    const cplx phase = link_berry_phase(LoopFamily::at_k2(boundary, 0.0), 1024);
    // Gauss-Legendre over the rectangle.
    const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};
    double flux = 0.0;
    const int cells = 6;
    for (int ci = 0; ci < cells; ++ci)
      for (int cj = 0; cj < cells; ++cj)
        for (int p = 0; p < 5; ++p)
          for (int q = 0; q < 5; ++q) {
            const double k1 = a1 + l1 * (ci + 0.5 * (x[p] + 1.0)) / cells;
            const double k2 = a2 + l2 * (cj + 0.5 * (x[q] + 1.0)) / cells;
            const Mat pk = f(k1, k2);
            const auto g = f.gradient(k1, k2);
            const double om = (-kI * (pk * commutator(g[0], g[1])).trace()).real();
            flux += om * w[p] * w[q] * 0.25 * (l1 / cells) * (l2 / cells);
          }
    // Stokes: oint A = int Omega, so the Berry phase is exp(-i flux).
    INFO("trial " << trial << " flux " << flux);
    CHECK(std::abs(phase - std::exp(-kI * flux)) < 1e-5);
  }
}

TEST_CASE("obstruction invariant on the model zoo") {
  TRSOperator theta(4);
  auto atomic = delta_invariant(constant_family(atomic_projector()), theta, {64});
  CHECK(atomic.delta.integer() == 0);
  CHECK(atomic.delta.residual < 1e-10);

  for (double lv : {0.0, 0.5, 1.5, 2.0}) {
    auto r = delta_invariant(model("kane_mele", {{"lambda_v", lv}}), theta, {128});
    const int oracle = oracles::fh_z2(fn("kane_mele", {{"lambda_v", lv}}), 0.0, 32);
    INFO("lambda_v " << lv << " raw " << r.delta.raw.real());
    CHECK(r.delta.status == SnapStatus::Snapped);
    CHECK(r.delta.residual < 1e-3);
    CHECK(r.delta.integer() == oracle);
  }
  auto bhz = delta_invariant(model("bhz"), theta, {64});
  CHECK(bhz.delta.integer() == oracles::fh_z2(fn("bhz"), 0.0, 32));
}

TEST_CASE("obstruction invariant is grid stable") {
  TRSOperator theta(4);
  auto f = model("kane_mele");
  long values[3];
  int idx = 0;
  for (int n : {64, 128, 256}) {
    auto r = delta_invariant(f, theta, {n});
    CHECK(r.delta.residual < 1e-3);
    values[idx++] = r.delta.integer();
  }
  CHECK(values[0] == values[1]);
  CHECK(values[1] == values[2]);
  CHECK(values[0] == 1);
}

TEST_CASE("snapping policy") {
  auto ok = snap_integer(InvariantKind::Chern, 0.9999, 8);
  CHECK(ok.status == SnapStatus::Snapped);
  CHECK(ok.integer() == 1);
  auto bad = snap_integer(InvariantKind::Chern, 0.6, 8);
  CHECK(bad.status == SnapStatus::Unsnapped);
  CHECK(std::abs(bad.residual - 0.4) < 1e-15);
  auto d = snap_integer(InvariantKind::Delta, -1.0000001, 8, true);
  CHECK(d.integer() == 1);
  auto k = snap_sign(InvariantKind::Kappa, std::exp(kI * (kPi + 1e-4)), 8);
  CHECK(k.integer() == -1);
  CHECK(k.status == SnapStatus::Snapped);
}
