#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TROLINK_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = std::move(out);
  return r;
}

std::string fixture(const char* name) {
  return std::string(TROLINK_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("classify-ideal on the column fixture: a submodule, no ideal, exit 0") {
  const RunResult text =
      run_cli("classify-ideal --scene " + fixture("column_submodule.json") + " --subspace k");
  CHECK(text.exit_code == 0);
  CHECK(text.out.find("submodule: yes") != std::string::npos);
  CHECK(text.out.find("ternary ideal: no") != std::string::npos);
  CHECK(text.out.find("ideal submodule: no") != std::string::npos);
  CHECK(text.out.find("linking ideal: no") != std::string::npos);

  const RunResult structured = run_cli("classify-ideal --scene " +
                                       fixture("column_submodule.json") +
                                       " --subspace k --format structured");
  CHECK(structured.exit_code == 0);
  const json doc = json::parse(structured.out);
  CHECK(doc.at("verdicts").at("submodule") == true);
  CHECK(doc.at("verdicts").at("ternary_ideal") == false);
  CHECK(doc.at("verdicts").at("consistent") == true);
  CHECK(doc.at("witnesses").at("escaping_vector").is_array());
  CHECK(doc.at("seed") == 7);
}

TEST_CASE("classify-ideal on the row-line fixture: ternary subspace only") {
  const RunResult r = run_cli("classify-ideal --scene " + fixture("row_line.json") +
                              " --subspace x --format structured");
  CHECK(r.exit_code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc.at("verdicts").at("submodule") == false);
  CHECK(doc.at("verdicts").at("ternary_subspace") == true);
  CHECK(doc.at("verdicts").at("ternary_ideal") == false);
  CHECK(doc.at("verdicts").at("notions_agree") == true);
}

TEST_CASE("quotient honors the chosen ideal, including absent blocks") {
  const RunResult minimal = run_cli("quotient --scene " + fixture("absent_block.json") +
                                    " --subspace all --format structured");
  CHECK(minimal.exit_code == 0);
  const json mdoc = json::parse(minimal.out);
  CHECK(mdoc.at("witnesses").at("ideal_blocks") == json::array({0}));
  CHECK(mdoc.at("witnesses").at("quotient_base_blocks") == json::array({1}));

  const RunResult widened = run_cli("quotient --scene " + fixture("absent_block.json") +
                                    " --subspace all --ideal-blocks 0,1 --format structured");
  CHECK(widened.exit_code == 0);
  const json wdoc = json::parse(widened.out);
  CHECK(wdoc.at("witnesses").at("ideal_blocks") == json::array({0, 1}));
  CHECK(wdoc.at("witnesses").at("quotient_base_blocks") == json::array());

  // The row line is not an ideal: the constructive command refuses it.
  const RunResult refused =
      run_cli("quotient --scene " + fixture("row_line.json") + " --subspace x");
  CHECK(refused.exit_code == 1);
}

TEST_CASE("check-hom flags the rotated carrier map as non-blockwise") {
  const RunResult r = run_cli("check-hom --scene " + fixture("rotated_corner_map.json") +
                              " --map rot --format structured");
  CHECK(r.exit_code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc.at("inputs").at("kind") == "algebra");
  CHECK(doc.at("verdicts").at("algebra_hom") == true);
  CHECK(doc.at("verdicts").at("blockwise") == false);
  CHECK(doc.at("verdicts").at("corners_preserved") == false);
  CHECK(doc.at("verdicts").at("consistent") == true);
}

TEST_CASE("extension commands run the shipped sequence end to end") {
  const RunResult check = run_cli("check-extension --scene " +
                                  fixture("two_block_extension.json") +
                                  " --sequence ext --format structured");
  CHECK(check.exit_code == 0);
  const json cdoc = json::parse(check.out);
  CHECK(cdoc.at("verdicts").at("exact") == true);
  CHECK(cdoc.at("verdicts").at("blockwise_exact") == true);

  const RunResult split = run_cli("split --scene " + fixture("two_block_extension.json") +
                                  " --sequence ext --format structured");
  CHECK(split.exit_code == 0);
  const json sdoc = json::parse(split.out);
  CHECK(sdoc.at("verdicts").at("splitting_verified") == true);
  CHECK(sdoc.at("residuals").at("section_residual").get<double>() < 1e-9);

  const RunResult extend = run_cli("extend-hom --scene " +
                                   fixture("two_block_extension.json") + " --map u");
  CHECK(extend.exit_code == 0);
  CHECK(extend.out.find("extension verified: yes") != std::string::npos);
}

TEST_CASE("searches are reproducible across runs and worker counts") {
  const std::string args =
      "search-hereditary --count 60 --seed 9 --bounds 2,2,2 --format structured";
  const RunResult one = run_cli(args + " --workers 1");
  const RunResult two = run_cli(args + " --workers 1");
  const RunResult three = run_cli(args + " --workers 3");
  CHECK(one.exit_code == 0);
  CHECK(one.out == two.out);
  CHECK(one.out == three.out);
  const json doc = json::parse(one.out);
  CHECK(doc.at("verdicts").at("implications_hold") == true);
  CHECK(doc.at("seed") == 9);

  const RunResult q1 = run_cli("search-q1 --count 24 --seed 9 --bounds 2,2,2 --format structured");
  CHECK(q1.exit_code == 0);
  CHECK(json::parse(q1.out).at("verdicts").at("consistent") == true);
}

TEST_CASE("input problems exit with code 2") {
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("classify-ideal --scene " + fixture("column_submodule.json")).exit_code == 2);
  CHECK(run_cli("classify-ideal --scene /no/such/file.json --subspace k").exit_code == 2);
  CHECK(run_cli("classify-ideal --scene " + fixture("column_submodule.json") +
                " --subspace nope")
            .exit_code == 2);
  CHECK(run_cli("search-hereditary --tol 0").exit_code == 2);
  CHECK(run_cli("search-hereditary --format yaml").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);

  const std::string bad = "/tmp/trolink_cli_bad_scene.json";
  std::ofstream(bad) << "{ this is not json";
  CHECK(run_cli("classify-ideal --scene " + bad + " --subspace k").exit_code == 2);
  std::remove(bad.c_str());

  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("tol and seed overrides reach the report") {
  const RunResult r = run_cli("classify-ideal --scene " + fixture("column_submodule.json") +
                              " --subspace k --tol 1e-7 --seed 42 --format structured");
  CHECK(r.exit_code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc.at("inputs").at("tol") == 1e-7);
  CHECK(doc.at("seed") == 42);
}
