#include "catch_amalgamated.hpp"

#include <random>

#include "topoinv/core.hpp"
#include "topoinv/models.hpp"

using namespace topoinv;

namespace {

Mat random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  return m;
}

Mat random_unitary(int n, std::mt19937_64& rng) { return polar_unitary(random_matrix(n, rng)); }

BlochHamiltonianSpec constant_spec(const Mat& h) {
  BlochHamiltonianSpec s{"const", static_cast<int>(h.rows()), {{{0, 0}, h}}, {}};
  return s;
}

}  // namespace

TEST_CASE("theta squares to minus one and Theta is a homomorphism") {
  std::mt19937_64 rng(7);
  TRSOperator theta(4);
  const Mat j = theta.j();
  CHECK(norm(j * j + Mat::Identity(4, 4)) == 0.0);
  CHECK(norm(j.transpose() * j - Mat::Identity(4, 4)) == 0.0);
  Mat v = random_matrix(4, rng).col(0);
  CHECK(norm(theta.apply(theta.apply(v)) + v) < 1e-14);
  const Mat g = random_unitary(4, rng), h = random_unitary(4, rng);
  CHECK(norm(theta.conjugate(g * h) - theta.conjugate(g) * theta.conjugate(h)) < 1e-12);
  CHECK(norm(theta.conjugate(theta.conjugate(g)) - g) < 1e-12);
}

TEST_CASE("constant Hamiltonian gives constant projector") {
  Mat sz = Mat::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  auto f = make_projector_family(constant_spec(sz), 0.0);
  CHECK(f.rank() == 1);
  Mat expected = Mat::Zero(2, 2);
  expected(1, 1) = 1.0;
  CHECK(norm(f(0.3, -1.2) - expected) < 1e-14);
  auto g = f.gradient(0.3, -1.2);
  CHECK(norm(g[0]) < 1e-12);
}

TEST_CASE("gapless Hamiltonian raises GapClosure") {
  // cos(k1) sigma_z vanishes at k1 = +-pi/2, which lie on the 64-point grid.
  Mat sz = Mat::Zero(2, 2);
  sz(0, 0) = 0.5;
  sz(1, 1) = -0.5;
  BlochHamiltonianSpec s{"gapless", 2, {{{1, 0}, sz}, {{-1, 0}, sz}}, {}};
  CHECK_THROWS_AS(make_projector_family(s, 0.0), GapClosure);
  try {
    make_projector_family(s, 0.0);
  } catch (const GapClosure& e) {
    CHECK(e.kind() == ErrorKind::GapClosure);
    CHECK(std::abs(std::abs(e.k1()) - kPi / 2) < 1e-12);
  }
}

TEST_CASE("Haldane family satisfies projector invariants") {
  auto f = make_projector_family(builtin_model_with_defaults("haldane"), 0.0);
  CHECK(f.rank() == 1);
  auto report = validate_family(f, 32);
  CHECK(report.ok);
  CHECK(report.max_projector_residual < 1e-10);
  CHECK(report.max_rank_residual < 1e-8);
  CHECK(report.max_periodicity_residual < 1e-10);
}

TEST_CASE("analytic and central-difference projector derivatives agree") {
  auto f = make_projector_family(builtin_model_with_defaults("kane_mele"), 0.0);
  auto a = f.with_mode(DerivativeMode::analytic());
  for (double k1 : {-2.1, 0.4, 1.7}) {
    for (double k2 : {-0.9, 2.6}) {
      auto gc = f.gradient(k1, k2);
      auto ga = a.gradient(k1, k2);
      CHECK(norm(gc[0] - ga[0]) < 1e-8);
      CHECK(norm(gc[1] - ga[1]) < 1e-8);
    }
  }
}

TEST_CASE("check_trs on constant, Haldane and Kane-Mele families") {
  Mat p0 = Mat::Zero(4, 4);
  p0(0, 0) = p0(1, 1) = 1.0;
  auto r0 = check_trs(constant_family(p0), TRSOperator(4));
  CHECK(r0.ok);
  CHECK(r0.max_violation == 0.0);

  auto hal = make_projector_family(builtin_model_with_defaults("haldane"), 0.0);
  auto rh = check_trs(hal, TRSOperator(2));
  CHECK_FALSE(rh.ok);
  CHECK(rh.max_violation > 1e-3);

  auto km = make_projector_family(builtin_model_with_defaults("kane_mele"), 0.0);
  auto rk = check_trs(km, TRSOperator(4));
  CHECK(rk.ok);
  CHECK(rk.max_violation < 1e-10);

  CHECK_THROWS_AS(check_trs(km, TRSOperator(2)), Error);
}

TEST_CASE("symplectic basis of the full space of C^2") {
  TRSOperator theta(2);
  auto b = symplectic_basis(theta, Mat::Identity(2, 2));
  CHECK(b.vectors.cols() == 2);
  CHECK(std::abs(std::abs(b.vectors(0, 0)) - 1.0) < 1e-14);
  CHECK(std::abs(std::abs(b.vectors(1, 1)) - 1.0) < 1e-14);
  CHECK(b.pairing_residual < 1e-14);
}

TEST_CASE("symplectic basis of a random invariant rank-2 projector") {
  std::mt19937_64 rng(11);
  TRSOperator theta(4);
  for (int trial = 0; trial < 5; ++trial) {
    Mat v = random_matrix(4, rng).col(0);
    v.normalize();
    Mat w = theta.apply(v);  // automatically orthogonal to v
    Mat p = v * v.adjoint() + w * w.adjoint();
    auto b = symplectic_basis(theta, p, 1000u + static_cast<unsigned>(trial));
    const Vec e1 = b.vectors.col(0), e2 = b.vectors.col(1);
    const Vec te1 = theta.apply(e1);
    CHECK(std::abs(te1.dot(e2) - 1.0) < 1e-10);
    CHECK(std::abs(te1.dot(e1)) < 1e-10);
    CHECK(b.pairing_residual < 1e-10);
    CHECK(b.span_residual < 1e-9);
    CHECK(norm(b.vectors.adjoint() * b.vectors - Mat::Identity(2, 2)) < 1e-12);
  }
}

TEST_CASE("symplectic basis preconditions") {
  TRSOperator theta(4);
  Mat odd = Mat::Zero(4, 4);
  odd.diagonal() << 1.0, 1.0, 1.0, 0.0;
  try {
    symplectic_basis(theta, odd);
    FAIL("expected OddRank");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OddRank);
  }
  // Rank 2 but pairs A-up with B-up instead of Kramers partners.
  Mat q = Mat::Zero(4, 4);
  q.diagonal() << 1.0, 0.0, 1.0, 0.0;
  try {
    symplectic_basis(theta, q);
    FAIL("expected NotInvariant");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotInvariant);
  }
}
