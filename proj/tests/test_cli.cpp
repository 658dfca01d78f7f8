#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using Json = nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

// Procedure: run_cli
// Invokes the binary named by PDYN_BIN with the given arguments and captures
// stdout and the exit code.
RunResult run_cli(const std::string& args) {
  const char* bin = std::getenv("PDYN_BIN");
  REQUIRE(bin != nullptr);
  std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Json run_json(const std::string& args, int expect_code = 0) {
  RunResult r = run_cli(args);
  CHECK(r.code == expect_code);
  return Json::parse(r.out);
}

}  // namespace

TEST_CASE("classify reports the escape locus and capture radius") {
  Json j = run_json("classify --alpha \"t^(-1)\" --beta \"2*t^(-3) + t^(-1)\" --depth 8");
  CHECK(j.at("locus") == "Eplus");
  CHECK(j.at("logR") == "1");
}

TEST_CASE("ballcount matches the level-4 count for the fixed slice") {
  Json j = run_json("ballcount --nu \"1\" --level 4");
  CHECK(j.at("count") == 41);
}

TEST_CASE("grid output is triangular and fully marked for the fixed slice") {
  Json j = run_json("grid --nu \"1\" --depth 3");
  CHECK(j.at("depth") == 3);
  REQUIRE(j.at("rows").size() == 4);
  for (int l = 0; l <= 3; ++l) {
    REQUIRE((int)j.at("rows")[l].size() == 4 - l);
    for (const auto& bit : j.at("rows")[l]) CHECK(bit == 1);
  }
}

TEST_CASE("realize rejects a grid breaking the fourth admissibility rule") {
  std::string path = "cli_bad_md.json";
  {
    Json rows = Json::array();
    int depth = 10;
    for (int l = 0; l <= depth; ++l) {
      Json row = Json::array();
      for (int k = 0; k + l <= depth; ++k) row.push_back(l == 0 || k == 0 ? 1 : 0);
      rows.push_back(row);
    }
    rows[1][5] = rows[2][5] = rows[3][5] = 1;
    std::ofstream(path) << Json{{"depth", depth}, {"rows", rows}, {"period", nullptr}};
  }
  RunResult r = run_cli("realize --grid " + path);
  CHECK(r.code == 1);
  Json j = Json::parse(r.out);
  CHECK(j.at("error") == "Violation");
  CHECK(j.at("rule") == "Md");
  std::remove(path.c_str());
}

TEST_CASE("realize recovers a parameter from its own grid") {
  std::string path = "cli_roundtrip.json";
  Json g = run_json("grid --nu \"1\" --depth 3");
  std::ofstream(path) << g;
  Json j = run_json("realize --grid " + path + " --precision 8");
  const Json& terms = j.at("nu").at("terms");
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].at("exp") == "0");
  CHECK(terms[0].at("coeff") == "1");
  std::remove(path.c_str());
}

TEST_CASE("center reports the parameter ball with its degree") {
  Json j = run_json("center --nu \"1\" --level 2");
  CHECK(j.at("level") == 2);
  CHECK(j.at("period") == 1);
  CHECK(j.at("delta") == 1);
  CHECK(j.at("center").at("precision") == "exact");
}

TEST_CASE("degree detects a ramified center jump") {
  std::string path = "cli_hist.json";
  std::ofstream(path)
      << R"js([{"center": "1", "log_radius": "-1/2"},)js"
      << R"js( {"center": "1 + t^(1)", "log_radius": "-2"}])js";
  Json j = run_json("degree --history " + path);
  CHECK(j.at("delta") == 2);
  std::remove(path.c_str());
}

TEST_CASE("bridge-eval reports the embedded parameter with a tail bound") {
  Json j = run_json("bridge-eval --nu \"1\" --re 0.5 --im 1.5");
  double a_re = std::stod(j.at("a").at("re").get<std::string>());
  double v_re = std::stod(j.at("v").at("re").get<std::string>());
  CHECK(a_re == doctest::Approx(v_re));
  CHECK(std::stod(j.at("tail_bound").get<std::string>()) < 1e-10);

  RunResult r = run_cli("bridge-eval --nu \"1\" --re 0.5 --im 0.5");
  CHECK(r.code == 1);
  CHECK(Json::parse(r.out).at("error") == "OutsideStrip");
}

TEST_CASE("bridge-check agrees with the series grid on the fixed slice") {
  Json j = run_json("bridge-check --nu \"1\" --re 0.5 --im 1.5 --depth 2 --resolution 64");
  CHECK(j.at("match") == true);
  CHECK(j.at("grid").at("rows") == j.at("complex_grid").at("rows"));
}

TEST_CASE("output is deterministic across runs") {
  for (const char* cmd :
       {"grid --nu \"1 + t^(2)\" --depth 4", "center --nu \"1\" --level 2",
        "bridge-eval --nu \"1\" --re 0.5 --im 1.5"}) {
    RunResult a = run_cli(cmd);
    RunResult b = run_cli(cmd);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("no-such-command").code == 2);
  CHECK(run_cli("grid --depth 3").code == 2);
  CHECK(run_cli("grid --nu \"1\"").code == 2);
}

TEST_CASE("text format prints key-value lines") {
  RunResult r = run_cli("--format text classify --alpha \"t^(-1)\" --beta \"2*t^(-3) + t^(-1)\"");
  CHECK(r.code == 0);
  CHECK(r.out.find("locus: Eplus") != std::string::npos);
  CHECK(r.out.find("logR: 1") != std::string::npos);
}

TEST_CASE("config file supplies defaults that flags override") {
  std::string path = "cli_config.txt";
  std::ofstream(path) << "precision = 8\ndepth_budget = 2\n";
  const char* bin = std::getenv("PDYN_BIN");
  REQUIRE(bin != nullptr);
  std::string prefix = std::string("PDYN_CONFIG=") + path + " " + bin + " ";

  auto run_env = [&](const std::string& args) {
    FILE* pipe = popen((prefix + args + " 2>/dev/null").c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    pclose(pipe);
    return Json::parse(out);
  };

  CHECK(run_env("classify --alpha \"t^(-1)\" --beta \"2*t^(-3) + t^(-1)\"").at("depth") == 2);
  CHECK(run_env("classify --alpha \"t^(-1)\" --beta \"2*t^(-3) + t^(-1)\" --depth 8")
            .at("depth") == 8);
  std::remove(path.c_str());
}
