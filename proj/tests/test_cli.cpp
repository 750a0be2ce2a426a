#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hss/errors.hpp"
#include "hss/scenario.hpp"

using namespace hss;
using nlohmann::json;

namespace {

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error raised");
  return Error(ErrorKind::numerical, "");
}

json minimal() {
  return json::parse(R"({
    "name": "minimal",
    "grid": {
      "nodes": [{"id": "n1", "kind": "forming"}, {"id": "n2", "kind": "following"}],
      "branches": [{"id": "line12", "from": "n1", "to": "n2", "R": 0.2, "L": 1e-3}],
      "shunts": [{"node": "n2", "C": 2e-5}]
    },
    "ciders": [{
      "name": "gfl1", "node": "n2", "kind": "following", "model": "builtin-pq",
      "hardware": {"L": 5e-3, "R": 0.1},
      "control": {"gains": {"kp": 10.0, "ki": 1000.0}},
      "setpoint": {"constant": [5000.0, 0.0]},
      "operating_point": {"balanced": {"amplitude": 325.0, "phase_deg": 0.0}}
    }]
  })");
}

std::string scenario_path(const std::string& name) { return std::string(HSS_SCENARIO_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string p = std::string(HSS_TEST_TMP) + "/" + name;
  std::ofstream(p) << content;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HSS_STAB_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("minimal scenario defaults") {
  const Scenario sc = scenario_from_json(minimal(), "minimal.json");
  CHECK(sc.hmax == 25);
  CHECK(sc.f1 == 50.0);
  CHECK(sc.grid.nodes.size() == 2);
  REQUIRE(sc.ciders.size() == 1);
  CHECK(sc.ciders[0].node == "n2");
  CHECK(sc.analysis.perturbations == std::vector<double>{-0.2, -0.1, 0.1, 0.2});
}

TEST_CASE("unknown CIDER node is a cross-reference error") {
  json d = minimal();
  d["ciders"][0]["node"] = "n9";
  const Error e = error_of([&] { scenario_from_json(d, "bad.json"); });
  CHECK(e.kind() == ErrorKind::cross_reference);
  CHECK(std::string(e.what()).find("n9") != std::string::npos);
}

TEST_CASE("negative inductance names the branch") {
  json d = minimal();
  d["grid"]["branches"][0]["L"] = -1e-3;
  const Error e = error_of([&] { scenario_from_json(d, "bad.json"); });
  CHECK(e.kind() == ErrorKind::physical_parameter);
  CHECK(std::string(e.what()).find("line12") != std::string::npos);
}

TEST_CASE("schema errors carry the dotted path") {
  json d = minimal();
  d["ciders"][0]["hardware"]["Lx"] = 1.0;
  const Error e = error_of([&] { scenario_from_json(d, "bad.json"); });
  CHECK(e.kind() == ErrorKind::schema);
  CHECK(std::string(e.what()).find("ciders.0.hardware") != std::string::npos);

  d = minimal();
  d["system"] = {{"hmax", "ten"}};
  CHECK(error_of([&] { scenario_from_json(d, "bad.json"); }).kind() == ErrorKind::schema);
}

TEST_CASE("JSON syntax errors report line and column") {
  const Error e = error_of([] { parse_scenario("{\n  \"name\": ,\n}", "broken.json"); });
  CHECK(e.kind() == ErrorKind::parse);
  CHECK(std::string(e.what()).find("broken.json:2:") != std::string::npos);
}

TEST_CASE("dotted paths resolve names and indices") {
  const json d = minimal();
  CHECK(resolve_path(d, "ciders.gfl1.control.gains.kp").to_string() == "/ciders/0/control/gains/kp");
  CHECK(resolve_path(d, "grid.branches.line12.R").to_string() == "/grid/branches/0/R");
  CHECK(resolve_path(d, "grid.branches.0.L").to_string() == "/grid/branches/0/L");
  CHECK(error_of([&] { resolve_path(d, "ciders.nope.hardware.L"); }).kind() == ErrorKind::cross_reference);
}

TEST_CASE("CSV eigenvalue rows") {
  ResultSet r;
  r.command = "eig";
  r.scenario = "toy";
  r.target = "system";
  r.eigenvalues.push_back({0, Complex(-1.0, 2.0), "toy/x", 0, "", false});
  r.eigenvalues.push_back({1, Complex(0.1, -0.5), "toy/x", 1, "CDV", true});
  const auto lines = data_lines(format_results(r, ExportFormat::csv, false));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "index,re,im,dominant_component,dominant_harmonic,classification,spurious_flag");
  CHECK(lines[1].rfind("0,-1,2,", 0) == 0);
  CHECK(lines[2] == "1,0.10000000000000001,-0.5,toy/x,1,CDV,1");
}

TEST_CASE("trace export has one row per eigenvalue and step") {
  ResultSet r;
  r.command = "sweep";
  EigenTrace t;
  t.parameter = "p";
  t.values = {1.0, 2.0, 3.0};
  t.traces = {{{-1, 0}, {-2, 0}, {-3, 0}}, {{-1, 1}, {-2, 1}, {-3, 1}}};
  r.trace = t;
  const auto lines = data_lines(format_results(r, ExportFormat::csv, false));
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "param_value,trace_id,re,im");
}

TEST_CASE("JSON export round trip") {
  ResultSet r;
  r.command = "eig";
  r.scenario = "toy";
  r.target = "system";
  r.hmax = 3;
  r.f1 = 50.0;
  r.meta = {{"verdict", "stable"}};
  r.eigenvalues.push_back({0, Complex(-1.0 / 3.0, 2.0e-17), "a/b", -2, "DI", false});
  r.htf.push_back({Complex(-5.0, 100.0), 0, 1, Complex(0.1, 0.2)});
  const json j = json::parse(format_results(r, ExportFormat::json, false));
  CHECK_FALSE(j.contains("generated"));
  CHECK(j["hmax"] == 3);
  const auto& e = j["eigenvalues"][0];
  CHECK(e["re"].get<double>() == -1.0 / 3.0);
  CHECK(e["im"].get<double>() == 2.0e-17);
  CHECK(e["dominant_harmonic"] == -2);
  CHECK(e["classification"] == "DI");
  CHECK(j["htf"][0]["im"].get<double>() == 0.2);
  CHECK(json::parse(format_results(r, ExportFormat::json, true)).contains("generated"));
}

TEST_CASE("eig command on a small system") {
  Scenario sc = load_scenario(scenario_path("two_node.json"));
  CommandOptions o;
  o.hmax = 2;
  const ResultSet r = run_command("eig", sc, o);
  CHECK(r.hmax == 2);
  CHECK(r.eigenvalues.size() == 19 * 5);
  REQUIRE(r.unstable.has_value());
  CHECK_FALSE(*r.unstable);
  for (size_t k = 1; k < r.eigenvalues.size(); ++k) CHECK(r.eigenvalues[k - 1].value.real() >= r.eigenvalues[k].value.real());
}

TEST_CASE("unwritable output is an io error") {
  ResultSet r;
  r.command = "eig";
  r.eigenvalues.push_back({0, Complex(-1.0, 0.0), "a/b", 0, "", false});
  CHECK(error_of([&] { export_results(r, ExportFormat::csv, "/nonexistent/dir/out.csv"); }).kind() == ErrorKind::io);
}

TEST_CASE("exit codes") {
  const std::string two = scenario_path("two_node.json");
  const std::string out = std::string(HSS_TEST_TMP) + "/cli_out.csv";
  CHECK(run("eig --scenario " + two + " --hmax 2 --out " + out) == 0);
  CHECK(run("eig --scenario " + two + " --hmax 2 --fail-on-unstable --out " + out) == 0);
  CHECK(run("eig --scenario /nonexistent.json --out " + out) == 2);
  CHECK(run("frobnicate --scenario " + two) == 2);
  CHECK(run("eig --scenario " + two + " --hmax -1 --out " + out) == 2);

  // a margin far left of the spectrum declares the stable system unstable
  json d = json::parse(std::ifstream(two));
  d["analysis"]["margin"] = -1e4;
  const std::string p = temp_file("margin.json", d.dump());
  CHECK(run("eig --scenario " + p + " --hmax 2 --out " + out) == 0);
  CHECK(run("eig --scenario " + p + " --hmax 2 --fail-on-unstable --out " + out) == 4);

  json bad = minimal();
  bad["ciders"][0]["node"] = "n9";
  CHECK(run("eig --scenario " + temp_file("bad.json", bad.dump()) + " --out " + out) == 2);
}
