#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridsec/cli.hpp"
#include "gridsec/n1_qubo.hpp"
#include "test_util.hpp"

using namespace gridsec;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kFixture = testutil::data_path("fixture.json");

std::string temp_path(const std::string& name) { return std::string(GRIDSEC_BUILD_DIR) + "/" + name; }

}  // namespace

TEST_CASE("check") {
  Run r = cli({"check", kFixture, "--k-max", "2"});
  CHECK(r.code == kExitNegative);
  CHECK(r.out.find("on {3,6} / off {2,3}") != std::string::npos);
  CHECK(r.out.find("NOT N-1 secure") != std::string::npos);

  r = cli({"check", "--network", kFixture, "--format", "json"});
  REQUIRE(r.code == kExitNegative);
  const json j = json::parse(r.out);
  CHECK(j["overall"] == false);
  for (const json& e : j["edges"]) {
    const int id = e["edge"]["id"];
    CHECK(e["status"] == (id == 1 || id == 6 ? "INSECURE" : "SECURE_K1"));
  }

  r = cli({"check", "no/such/file.json"});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("cannot open") != std::string::npos);
  CHECK(cli({"check", kFixture, "--k-max", "0"}).code == kExitError);
}

TEST_CASE("secure network exits zero") {
  const std::string path = temp_path("triangle_cli.json");
  {
    std::ofstream f(path);
    f << serialize_network(testutil::make_network(3, {{0, 1, true}, {1, 2, true}, {0, 2, false}}));
  }
  // Edge {1,2} feeds nothing once {0,2} closes, so both active edges have a k=1 witness.
  const Run r = cli({"check", path});
  CHECK(r.code == kExitOk);
  std::remove(path.c_str());
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitError);
  CHECK(cli({"frobnicate"}).code == kExitError);
  CHECK(cli({"check", kFixture, "--format", "yaml"}).code == kExitError);
  CHECK(cli({"check", kFixture, "--bogus"}).code == kExitError);
  const Run help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("anneal") != std::string::npos);
  const Run err = cli({"loadflow", kFixture, "--activate", "99", "--format", "json"});
  CHECK(err.code == kExitError);
  CHECK(json::parse(err.err)["error"] == "argument");
}

TEST_CASE("enumerate") {
  Run r = cli({"enumerate", kFixture, "--k", "1", "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json all = json::parse(r.out);
  CHECK(all["count"] == 7);

  r = cli({"enumerate", kFixture, "--k", "1", "--restrict", "2-3", "--format", "json"});
  const json some = json::parse(r.out);
  CHECK(some["count"] == 1);
  CHECK(some["entries"][0]["activate"][0]["id"] == 4);
  for (const json& e : some["entries"]) {
    bool listed = false;
    for (const json& a : all["entries"]) listed = listed || a["configuration"] == e["configuration"];
    CHECK(listed);
  }

  CHECK(cli({"enumerate", kFixture, "--k", "3"}).code == kExitError);
  r = cli({"enumerate", kFixture, "--k", "1", "--format", "csv"});
  CHECK(r.out.rfind("index,activate,deactivate,spanning_tree,configuration\n0,4,2,1,", 0) == 0);
}

TEST_CASE("qubo export") {
  const std::string path = temp_path("fixture_cli.qubo");
  Run r = cli({"qubo", kFixture, "--failing-edge", "2-3", "--tree-only", "-o", path, "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json summary = json::parse(r.out);
  // (I-1)|V_OS| + (I-2)|V_MSR| + (2I-2)|E \ {failing}| with I = 5.
  CHECK(summary["variables"] == 4 * 1 + 3 * 6 + 8 * 7);
  CHECK(summary["groups"] == json::array({"con", "dw", "ind", "obj", "root"}));

  std::ifstream in(path);
  std::vector<std::string> labels;
  const Qubo read = read_qubo(in, &labels);
  const Network net = testutil::fixture();
  const BuiltQubo built = build_tree_qubo(net, 5, {}, net.resolve_edge("2-3"));
  CHECK(read.n() == built.qubo.n());
  CHECK(read.coeffs() == built.qubo.coeffs());
  CHECK(read.offset() == built.qubo.offset());
  CHECK(labels == built.layout.labels);

  std::ifstream lin(path + ".layout.json");
  const json layout = json::parse(lin);
  CHECK(layout["n"] == summary["variables"]);
  CHECK(layout["loadflow"].is_null());
  CHECK(layout["tree"]["failing_edge"] == 2);

  r = cli({"qubo", kFixture, "--failing-edge", "2-3", "--height", "4", "-o", path, "--format", "json"});
  const json full = json::parse(r.out);
  const BuiltQubo n1 = build_n1_qubo(net, 4, 4, 4, 4, {}, net.resolve_edge("2-3"));
  CHECK(full["variables"] == n1.layout.n());
  CHECK(full["groups"].size() == 9);

  r = cli({"qubo", kFixture, "--loadflow-only", "--activate", "3-6", "--deactivate", "2-3", "--bits-u", "3",
           "--weights", R"({"ur": 2, "normalize_rows": false})", "-o", "-"});
  REQUIRE(r.code == kExitOk);
  std::istringstream text(r.out);
  const Qubo lf = read_qubo(text);
  PenaltyWeights w;
  w.ur = 2;
  w.normalize_rows = false;
  const Configuration cfg = apply_switchover(net.initial_configuration(), {{4}, {2}});
  CHECK(lf.coeffs() == build_loadflow_qubo(net, cfg, 3, 4, 4, w).qubo.coeffs());

  CHECK(cli({"qubo", kFixture, "--tree-only", "--loadflow-only", "-o", path}).code == kExitError);
  CHECK(cli({"qubo", kFixture, "--weights", R"({"nope": 1})", "-o", path}).code == kExitError);
  CHECK(cli({"qubo", kFixture, "--weights", R"({"con": -1})", "-o", path}).code == kExitError);
  std::remove(path.c_str());
  std::remove((path + ".layout.json").c_str());
}

TEST_CASE("anneal is reproducible and honours the seed fallback") {
  const std::vector<std::string> base = {"anneal", kFixture, "--tree-only", "--height", "4", "--reads", "20",
                                         "--sweeps", "500", "--format", "json"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return cli(a);
  };
  const Run a = with({"--seed", "42"}), b = with({"--seed", "42"});
  REQUIRE(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out)["seed_source"] == "flag");

  ::setenv("GRIDSEC_SEED", "42", 1);
  const json env = json::parse(with({}).out);
  CHECK(env["seed_source"] == "GRIDSEC_SEED");
  CHECK(env["raw"] == json::parse(a.out)["raw"]);
  ::setenv("GRIDSEC_SEED", "x", 1);
  CHECK(with({}).code == kExitError);
  ::unsetenv("GRIDSEC_SEED");
  const json gen = json::parse(with({}).out);
  CHECK(gen["seed_source"] == "generated");

  const json post = json::parse(with({"--seed", "42", "--post-process"}).out);
  CHECK(post["post_processed"]["best_energy"].get<double>() <= post["raw"]["best_energy"].get<double>());
  CHECK(post["post_processed"]["feasible"].get<int>() >= post["raw"]["feasible"].get<int>());
  CHECK(post["post_processed"]["reads"] == 20);
}

TEST_CASE("anneal tree-only fixture reaches the minimal switch count") {
  const std::string hist = temp_path("fixture_hist.csv");
  const Run r = cli({"anneal", kFixture, "--failing-edge", "2-3", "--tree-only", "--reads", "500", "--seed", "1",
                     "--histogram", hist, "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out)["raw"];
  // One switchover (k_min = 1 from the classical search) changes two cable states.
  CHECK(j["best_feasible_objective"] == 2.0);
  CHECK(j["optimal"].get<int>() >= 1);
  bool found = false;
  for (const json& c : j["configurations"])
    found = found || (c["activate"].size() == 1 && c["activate"][0]["id"] == 4 && c["deactivate"][0]["id"] == 2);
  CHECK(found);
  for (const json& bin : j["histogram"])
    if (bin["feasible"].get<int>() > 0) CHECK(bin["energy"].get<double>() >= 2.0);
  std::ifstream in(hist);
  std::string header;
  std::getline(in, header);
  CHECK(header == "energy,feasible,infeasible");
  std::remove(hist.c_str());
}

TEST_CASE("grover") {
  Run r = cli({"grover", testutil::data_path("amp_left.json"), "--failing-edge", "0-2", "--seed", "5", "--format",
               "json"});
  REQUIRE(r.code == kExitOk);
  json j = json::parse(r.out);
  CHECK(j["N"] == 4);
  CHECK(j["M"] == 1);
  CHECK(j["found"] == true);
  CHECK(j["sampled"]["activate"][0] == json({{"id", 5}, {"n", 1}, {"m", 2}}));
  CHECK(j["queries"].get<int>() >= 1);

  r = cli({"grover", testutil::data_path("amp_left.json"), "--failing-edge", "0-2", "--iterations", "0", "--seed",
           "5", "--format", "json"});
  j = json::parse(r.out);
  for (const json& p : j["distribution"]) CHECK(p.get<double>() == doctest::Approx(0.25));
  CHECK(j["queries"] == 0);
  CHECK(j["mode"] == "fixed");

  r = cli({"grover", testutil::data_path("amp_left.json"), "--failing-edge", "0-2", "--iterations", "1", "--seed",
           "5", "--format", "csv"});
  CHECK(r.out.rfind("id,probability,switchover_json\n0,1,", 0) == 0);

  CHECK(cli({"grover", kFixture, "--failing-edge", "2-3", "--k", "3"}).code == kExitError);
  CHECK(cli({"grover", kFixture}).code == kExitError);
}

TEST_CASE("loadflow") {
  Run r = cli({"loadflow", kFixture, "--activate", "3-6", "--deactivate", "2-3", "--format", "json"});
  CHECK(r.code == kExitOk);
  CHECK(json::parse(r.out)["compliant"] == true);

  r = cli({"loadflow", kFixture, "--activate", "4-6", "--deactivate", "4-7", "--format", "json"});
  CHECK(r.code == kExitNegative);
  const json j = json::parse(r.out);
  REQUIRE(j["current_violations"].size() == 1);
  CHECK(j["current_violations"][0]["edge"] == 5);

  r = cli({"loadflow", kFixture, "--activate", "3-6", "--format", "json"});
  CHECK(r.code == kExitError);
  CHECK(json::parse(r.err)["error"] == "validation");
  CHECK(cli({"loadflow", kFixture}).code == kExitOk);
}
