#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "topoinv/io.hpp"
#include "topoinv/models.hpp"

using namespace topoinv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string(TOPOINV_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "topoinv_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

json last_json_line(const std::string& text) {
  const auto start = text.rfind("{\"error\"");
  REQUIRE(start != std::string::npos);
  return json::parse(text.substr(start, text.find('\n', start) - start));
}

}  // namespace

TEST_CASE("chern command reports the Chern number and the WZ check") {
  auto r = cli("chern --model haldane --json");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["result"]["chern"]["snapped"][0].get<double>() == 1.0);
  CHECK(j["result"]["wz_check"] == "pass");
  CHECK(j["seed"] == 0);

  auto atomic = cli("chern --model atomic --json");
  REQUIRE(atomic.code == 0);
  CHECK(json::parse(atomic.out)["result"]["chern"]["snapped"][0].get<double>() == 0.0);
}

TEST_CASE("errors map to exit codes and JSON objects") {
  auto gapless = cli("chern --model bhz --param M=0");
  CHECK(gapless.code == 2);
  CHECK(last_json_line(gapless.out)["error"]["kind"] == "GapClosure");

  auto not_trs = cli("fkm --model haldane");
  CHECK(not_trs.code == 2);
  CHECK(last_json_line(not_trs.out)["error"]["kind"] == "NotTRS");

  auto missing = cli("chern --model-file " + scratch("nope.json").string());
  CHECK(missing.code == 4);
  CHECK(last_json_line(missing.out)["error"]["kind"] == "Io");

  const auto bad = scratch("bad.json");
  write_text(bad.string(), "{\n  \"name\": \"x\",\n  \"dim\": 2,\n  oops\n}\n");
  auto parse = cli("chern --model-file " + bad.string());
  CHECK(parse.code == 4);
  const auto err = last_json_line(parse.out)["error"];
  CHECK(err["kind"] == "ParseError");
  CHECK(err["message"].get<std::string>().find(":4:") != std::string::npos);

  CHECK(cli("chern --model haldane --param nonsense=1").code == 2);
  CHECK(cli("chern --model haldane --grid 48").code == 2);
  CHECK(cli("chern").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("sweep --model kane_mele --range lambda_v=0:1:0").code == 2);
}

TEST_CASE("fkm on a model file") {
  const auto path = scratch("km.json");
  save_model(path.string(), builtin_model_with_defaults("kane_mele", {}));
  auto r = cli("fkm --model-file " + path.string() + " --json --grid 64");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["result"]["delta"]["snapped"][0].get<double>() == 1.0);
  CHECK(j["result"]["kappa"]["snapped"][0].get<double>() == -1.0);
  CHECK(j["result"]["agree"] == true);
}

TEST_CASE("sweeps are reproducible and write a sidecar") {
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  const std::string args = " --model kane_mele --range lambda_v=0:1.6:5 --grid 32 --seed 7";
  REQUIRE(cli("sweep" + args + " --workers 2 --out " + a.string()).code == 0);
  REQUIRE(cli("sweep" + args + " --workers 1 --out " + b.string()).code == 0);
  const auto ta = read_text(a.string());
  CHECK(ta == read_text(b.string()));
  CHECK(read_text(a.string() + ".json") == read_text(b.string() + ".json"));
  CHECK(ta.rfind("model,lambda_r,lambda_so,lambda_v,t,chern,delta,kappa,berry_phase_T0,berry_phase_Tpi,residual_max,status\n", 0) == 0);
  // First point topological, last trivial.
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < ta.size()) {
    const auto nl = ta.find('\n', pos);
    lines.push_back(ta.substr(pos, nl - pos));
    pos = nl + 1;
  }
  REQUIRE(lines.size() == 6);
  CHECK(lines[1].find(",0,1,-1,") != std::string::npos);
  CHECK(lines[5].find(",0,0,1,") != std::string::npos);
  auto side = json::parse(read_text(a.string() + ".json"));
  CHECK(side["seed"] == 7);
  CHECK(side["ranges"][0]["count"] == 5);
}

TEST_CASE("certify on coarse grids reports instead of crashing") {
  auto r = cli("certify --grid 16 --grid-t 16 --json");
  CHECK((r.code == 0 || r.code == 1));
  auto j = json::parse(r.out);
  CHECK(j["criteria"].size() == 11);
  CHECK(j["grid"] == 16);
}
