#include "catch_amalgamated.hpp"

#include <cstdio>
#include <filesystem>
#include <random>

#include "topoinv/core.hpp"
#include "topoinv/io.hpp"
#include "topoinv/models.hpp"
#include "topoinv/oracles/lattice.hpp"

using namespace topoinv;

namespace {

oracles::HamiltonianFn fn(const BlochHamiltonianSpec& h) {
  return [h](double k1, double k2) { return h.at(k1, k2); };
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("topoinv_test_" + name)).string();
}

}  // namespace

TEST_CASE("builtin Hamiltonians are Hermitian at random momenta") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (const auto& name : builtin_model_names()) {
    auto h = builtin_model_with_defaults(name);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, hermiticity_residual(h.at(u(rng), u(rng))));
    INFO(name);
    CHECK(worst < 1e-14);
  }
}

TEST_CASE("builtin_model errors") {
  try {
    builtin_model("graphene", {});
    FAIL("expected UnknownModel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownModel);
  }
  auto p = default_parameters("kane_mele");
  p.erase("lambda_r");
  try {
    builtin_model("kane_mele", p);
    FAIL("expected MissingParameter");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingParameter);
  }
}

TEST_CASE("Kane-Mele and BHZ projectors are time-reversal symmetric") {
  for (const char* name : {"kane_mele", "bhz", "atomic"}) {
    auto f = make_projector_family(builtin_model_with_defaults(name), 0.0);
    auto r = check_trs(f, TRSOperator(f.dim()));
    INFO(name << " violation " << r.max_violation);
    CHECK(r.ok);
    CHECK(r.max_violation < 1e-10);
  }
}

TEST_CASE("Haldane Chern numbers from the plaquette oracle") {
  const double topo = oracles::fhs_chern(fn(builtin_model_with_defaults("haldane")), 0.0, 64);
  CHECK(std::abs(std::abs(topo) - 1.0) < 1e-9);
  const double triv = oracles::fhs_chern(fn(builtin_model_with_defaults("haldane", {{"M", 2.5}})), 0.0, 64);
  CHECK(std::abs(triv) < 1e-9);
  const double km = oracles::fhs_chern(fn(builtin_model_with_defaults("kane_mele")), 0.0, 32);
  CHECK(std::abs(km) < 1e-9);
}

TEST_CASE("lattice Z2 oracle on the model zoo") {
  CHECK(oracles::fh_z2(fn(builtin_model_with_defaults("kane_mele")), 0.0, 32) == 1);
  CHECK(oracles::fh_z2(fn(builtin_model_with_defaults("kane_mele", {{"lambda_v", 1.5}})), 0.0, 32) == 0);
  CHECK(oracles::fh_z2(fn(builtin_model_with_defaults("bhz")), 0.0, 32) == 1);
  CHECK(oracles::fh_z2(fn(builtin_model_with_defaults("bhz", {{"M", 3.0}})), 0.0, 32) == 0);
  CHECK(oracles::fh_z2(fn(builtin_model_with_defaults("atomic")), 0.0, 16) == 0);
}

TEST_CASE("lattice Z2 oracle matches spin-Chern parity without Rashba coupling") {
  for (double lv : {0.0, 0.4, 0.8, 1.2, 1.6}) {
    auto h = builtin_model_with_defaults("kane_mele", {{"lambda_r", 0.0}, {"lambda_v", lv}});
    INFO("lambda_v " << lv);
    CHECK(oracles::fh_z2(fn(h), 0.0, 32) == oracles::spin_chern_parity(fn(h), 0.0, 32));
  }
  // Transition at lambda_v = 3 sqrt(3) lambda_so ~ 1.039.
  auto below = builtin_model_with_defaults("kane_mele", {{"lambda_r", 0.0}, {"lambda_v", 0.9}});
  auto above = builtin_model_with_defaults("kane_mele", {{"lambda_r", 0.0}, {"lambda_v", 1.2}});
  CHECK(oracles::spin_chern_parity(fn(below), 0.0, 48) == 1);
  CHECK(oracles::spin_chern_parity(fn(above), 0.0, 48) == 0);
}

TEST_CASE("model files round-trip") {
  auto km = builtin_model_with_defaults("kane_mele");
  const auto path = temp_path("km.json");
  save_model(path, km);
  auto back = load_model(path);
  CHECK(back.name == km.name);
  CHECK(back.dim == km.dim);
  REQUIRE(back.terms.size() == km.terms.size());
  for (std::size_t i = 0; i < km.terms.size(); ++i) {
    CHECK(back.terms[i].vector == km.terms[i].vector);
    CHECK(norm(back.terms[i].matrix - km.terms[i].matrix) == 0.0);
  }
  CHECK(back.parameters == km.parameters);
  std::remove(path.c_str());
}

TEST_CASE("minimal model document loads") {
  auto j = parse_json_text(R"({"name": "pair", "dim": 1,
    "terms": [{"vector": [1, 0], "matrix": [[[0.5, 0.0]]]}, {"vector": [-1, 0], "matrix": [[[0.5, 0.0]]]}],
    "parameters": {}})", "inline");
  auto spec = model_from_json(j);
  CHECK(spec.dim == 1);
  CHECK(std::abs(spec.at(0.0, 0.0)(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("schema and parse errors") {
  auto missing = parse_json_text(R"({"name": "bad", "dim": 1,
    "terms": [{"vector": [1, 0], "matrix": [[[0.5, 0.0]]]}]})", "inline");
  try {
    model_from_json(missing);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaError);
  }
  try {
    model_from_json(parse_json_text(R"({"name": "bad", "terms": []})", "inline"));
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaError);
    CHECK(std::string(e.what()).find("dim") != std::string::npos);
  }
  try {
    parse_json_text("{\n  \"name\": \"x\",\n  \"dim\": ,\n}", "broken.json");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("broken.json:3:") != std::string::npos);
  }
  try {
    load_model("/nonexistent/dir/model.json");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("results CSV layout") {
  ResultRow r;
  r.model = "kane_mele";
  r.parameter_values = {0.5};
  r.delta = 1;
  r.kappa = -1;
  r.berry_phase_t0 = 0.25;
  r.residual_max = 1e-9;
  const auto csv = results_csv({"lambda_v"}, {r});
  CHECK(csv.rfind("model,lambda_v,chern,delta,kappa,berry_phase_T0,berry_phase_Tpi,residual_max,status\n", 0) == 0);
  CHECK(csv.find("kane_mele,0.5,,1,-1,0.25,,1.0000000000000001e-09,ok\n") != std::string::npos);
}
