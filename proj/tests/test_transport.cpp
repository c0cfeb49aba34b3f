#include "catch_amalgamated.hpp"

#include "topoinv/berry.hpp"
#include "topoinv/models.hpp"
#include "topoinv/transport.hpp"

using namespace topoinv;

namespace {

ProjectorFamily model(const std::string& name, std::map<std::string, double> p = {}) {
  return make_projector_family(builtin_model_with_defaults(name, p), 0.0);
}

// Accumulated change of arg det along a closed sampled loop, in units of 2 pi.
double det_winding(const std::vector<Mat>& u) {
  double total = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    total += std::arg(u[(j + 1) % u.size()].determinant() / u[j].determinant());
  }
  return total / kTwoPi;
}

TransportResult synthetic(const Mat& end) {
  TransportResult r;
  const auto n = end.rows();
  r.k = {-kPi, kPi};
  r.t = {Mat::Identity(n, n), end};
  r.generator = {Mat::Zero(n, n), Mat::Zero(n, n)};
  r.p0 = Mat::Identity(n, n);
  return r;
}

}  // namespace

TEST_CASE("constant family transports trivially") {
  Mat p0 = Mat::Zero(4, 4);
  p0(0, 0) = p0(1, 1) = 1.0;
  auto loop = LoopFamily::at_k1(constant_family(p0), 0.0);
  auto r = transport_loop(loop, 64);
  for (const auto& t : r.t) CHECK(norm(t - Mat::Identity(4, 4)) < 1e-14);
  CHECK(norm(r.m) < 1e-14);
  Mat basis = Mat::Zero(4, 2);
  basis(0, 0) = basis(1, 1) = 1.0;
  auto f = build_frame(r, basis);
  for (const auto& e : f.vectors) CHECK(norm(e - basis) < 1e-14);
  CHECK(norm(wilson_holonomy(r, basis) - Mat::Identity(2, 2)) < 1e-14);
}

TEST_CASE("flat two-band holonomy is -1") {
  // Lower band of cos k sx + sin k sy is (1, -e^{ik})/sqrt 2 with A = 1/2, so
  // the holonomy around the loop is exp(-i pi) = -1.
  auto loop = LoopFamily::at_k2(model("flat_two_band"), 0.0);
  auto r = transport_loop(loop, 256);
  const Mat h = wilson_holonomy(r);
  REQUIRE(h.rows() == 1);
  CHECK(std::abs(h(0, 0) + 1.0) < 1e-8);
  CHECK(std::abs(link_berry_phase(loop, 256) + 1.0) < 1e-8);
  Mat basis = Mat::Zero(2, 1);
  basis(0, 0) = 1.0 / std::sqrt(2.0);
  basis(1, 0) = 1.0 / std::sqrt(2.0);  // at k = -pi, -e^{-i pi} = 1
  auto f = build_frame(r, basis);
  auto conn = berry_connection(f);
  CHECK(std::abs(berry_phase(conn).snapped + 1.0) < 1e-8);
}

TEST_CASE("transport intertwining converges at fourth order") {
  auto loop = LoopFamily::at_k1(model("haldane"), 0.7);
  const double coarse = parallel_transport(loop, 32).max_intertwining;
  const double fine = parallel_transport(loop, 64).max_intertwining;
  INFO("coarse " << coarse << " fine " << fine);
  CHECK(coarse / fine >= 14.0);
}

TEST_CASE("periodize branch convention") {
  auto one = periodize(synthetic(Mat::Identity(2, 2)));
  CHECK(norm(one.m) < 1e-15);
  CHECK(norm(one.w.back() - Mat::Identity(2, 2)) < 1e-15);

  Mat d = Mat::Identity(2, 2);
  d(0, 0) = -1.0;
  auto half = periodize(synthetic(d));
  Mat expected = Mat::Zero(2, 2);
  expected(0, 0) = 0.5;
  CHECK(norm(half.m - expected) < 1e-15);
  CHECK(half.w_periodicity < 1e-14);

  Mat near = Mat::Identity(2, 2);
  near(0, 0) = std::exp(cplx(0.0, -1e-11));
  try {
    periodize(synthetic(near));
    FAIL("expected BranchAmbiguity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BranchAmbiguity);
  }
  // Moving the cut resolves it.
  auto moved = periodize(synthetic(near), -kPi);
  CHECK(moved.w_periodicity < 1e-14);
}

TEST_CASE("periodized transport on model loops") {
  for (const char* name : {"haldane", "kane_mele", "bhz"}) {
    auto f = model(name);
    for (double a : {0.0, kPi, 1.1}) {
      auto loop = LoopFamily::at_k1(f, a);
      auto r = transport_loop(loop, 256);
      INFO(name << " a = " << a);
      CHECK(r.max_intertwining < 1e-7);
      CHECK(r.w_periodicity < 1e-8);
      CHECK(norm(r.w.front() - Mat::Identity(f.dim(), f.dim())) == 0.0);
      double wi = 0.0, un = 0.0;
      for (std::size_t i = 0; i < r.w.size(); ++i) {
        wi = std::max(wi, norm(loop(r.k[i]) - r.w[i] * r.p0 * r.w[i].adjoint()));
        un = std::max(un, unitarity_residual(r.w[i]));
      }
      CHECK(wi < 1e-7);
      CHECK(un < 1e-9);
      // Analytic log-derivative against the spectral derivative of W.
      std::vector<Mat> w(r.w.begin(), r.w.end() - 1);
      auto dw = periodic_derivative(w, Stencil::Spectral);
      double dev = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) dev = std::max(dev, norm(w[i].adjoint() * dw[i] - r.w_log[i]));
      CHECK(dev < 1e-6);
    }
  }
}

TEST_CASE("Wilson holonomy determinant equals the overlap Berry phase") {
  auto loop = LoopFamily::at_k1(model("kane_mele"), 0.0);
  auto r = transport_loop(loop, 256);
  const cplx det = wilson_holonomy(r).determinant();
  CHECK(std::abs(det - link_berry_phase(loop, 256)) < 1e-6);
}

TEST_CASE("build_frame rejects bad base bases") {
  auto loop = LoopFamily::at_k1(model("kane_mele"), 0.0);
  auto r = transport_loop(loop, 64);
  auto spec = hermitian_spectrum(r.p0);
  Mat good = spec.vectors.rightCols(2);
  CHECK_NOTHROW(build_frame(r, good));
  Mat bad = good;
  bad.col(1) = good.col(0);
  try {
    build_frame(r, bad);
    FAIL("expected BadBaseBasis");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BadBaseBasis);
  }
}

TEST_CASE("time-reversal symmetric frames satisfy the Kramers identity") {
  auto f = model("kane_mele");
  TRSOperator theta(4);
  for (double a : {0.0, kPi}) {
    auto loop = LoopFamily::at_k1(f, a);
    auto res = build_trs_frame(loop, theta);
    auto rep = frame_report(res.frame, loop);
    INFO("a = " << a);
    CHECK(res.frame.trs_flag);
    CHECK(rep.orthonormality < 1e-9);
    CHECK(rep.span < 1e-8);
    CHECK(rep.kramers < 1e-8);
    CHECK(res.w_periodicity < 1e-8);
    CHECK(rep.max_step < 10.0);
    CHECK(rep.seam < 10.0);
  }
}

TEST_CASE("constant invariant family gives a constant TRS frame") {
  Mat p0 = Mat::Zero(4, 4);
  p0(0, 0) = p0(1, 1) = 1.0;
  auto loop = LoopFamily::at_k1(constant_family(p0), 0.0);
  auto res = build_trs_frame(loop, TRSOperator(4));
  for (const auto& e : res.frame.vectors) CHECK(norm(e - res.frame.vectors.front()) < 1e-14);
  CHECK(frame_report(res.frame, loop).kramers < 1e-14);
}

TEST_CASE("relative gauge between two TRS frames has even winding") {
  auto f = model("kane_mele");
  TRSOperator theta(4);
  for (double a : {0.0, kPi}) {
    auto loop = LoopFamily::at_k1(f, a);
    TrsFrameOptions o1, o2;
    o1.basis_seed = 5;
    o2.basis_seed = 99;
    o2.base_point = kPi;
    auto f1 = build_trs_frame(loop, theta, o1), f2 = build_trs_frame(loop, theta, o2);
    std::vector<Mat> u;
    for (std::size_t j = 0; j < f1.frame.vectors.size(); ++j) u.push_back(f1.frame.vectors[j].adjoint() * f2.frame.vectors[j]);
    const double w = det_winding(u);
    INFO("winding " << w);
    CHECK(std::abs(w - std::round(w)) < 1e-8);
    CHECK(std::lround(w) % 2 == 0);
  }
}

TEST_CASE("non-symmetric loops are rejected by the TRS construction") {
  auto loop = LoopFamily::at_k1(model("haldane"), 0.0);
  try {
    build_trs_frame(loop, TRSOperator(2));
    FAIL("expected NotTRS");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotTRS);
  }
}

TEST_CASE("exp(2 pi i t P(k)) factorizes through W") {
  auto loop = LoopFamily::at_k1(model("kane_mele"), kPi);
  auto r = transport_loop(loop, 256);
  double worst = 0.0;
  for (double t : {0.0, 0.25, 0.5, 0.8}) {
    const Mat psi = expi_hermitian(r.p0, kTwoPi * t);
    for (std::size_t i = 0; i < r.w.size(); i += 8) {
      const Mat phi = expi_hermitian(loop(r.k[i]), kTwoPi * t);
      worst = std::max(worst, norm(phi - r.w[i] * psi * r.w[i].adjoint()));
    }
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("coarse TRS frames stay in the band when R is close to -1") {
  // On T_pi of kane_mele at lambda_v = 0, R = -1 up to transport error; a cut
  // through the perturbed cluster would rotate the frame out of Ran P.
  auto loop = LoopFamily::at_k1(model("kane_mele"), kPi);
  TRSOperator theta(4);
  for (int n : {16, 32, 64}) {
    TrsFrameOptions o;
    o.n = n;
    auto res = build_trs_frame(loop, theta, o);
    auto rep = frame_report(res.frame, loop);
    INFO("n = " << n);
    CHECK(rep.span < 1e-4);
    CHECK(std::abs(berry_connection(res.frame).integral() - kTwoPi) < 1e-5);
  }
}
