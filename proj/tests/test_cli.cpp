#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amlab/cli.hpp"

using namespace amlab;
using amlab::io::json;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = AMLAB_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("amlab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

cli::RunOptions options(const std::string& config, const fs::path& out) {
  static std::ostringstream sink;
  cli::RunOptions o;
  o.config = config;
  o.out = out.string();
  o.log = &sink;
  return o;
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p.string())); }

int run_binary(const std::string& args) {
  const std::string cmd = std::string(AMLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliSolveGraph, TwoLoopTieHasFaceDimensionOne) {
  auto out = scratch("tie");
  EXPECT_EQ(cli::cmd_solve_graph(options(kScenarios + "/two-loops-tie.json", out)), 0);
  auto j = read_json(out / "two-loops-tie.solve_graph.json");
  EXPECT_EQ(j["face_dim"].get<int>(), 1);
  EXPECT_EQ(j["vertices"].size(), 2u);
}

TEST(CliSolveGraph, SingleCycleMatchesKarp) {
  auto out = scratch("single");
  EXPECT_EQ(cli::cmd_solve_graph(options(kScenarios + "/single-cycle.txt", out)), 0);
  auto j = read_json(out / "single-cycle.solve_graph.json");
  EXPECT_LE(j["karp_delta"].get<double>(), 1e-8);
  EXPECT_DOUBLE_EQ(j["value"].get<double>(), 2.0);
}

TEST(CliSolveGraph, MalformedJsonNamesLine) {
  auto out = scratch("malformed");
  auto cfg = write_config(out, "bad.json", "{\n  \"model\": {\n    \"type\": \"graph\",\n  }\n}\n");
  try {
    cli::cmd_solve_graph(options(cfg, out));
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_EQ(run_binary("solve-graph " + cfg + " --out " + out.string()), 1);
}

TEST(CliSolveGraph, MissingFieldIsNamed) {
  auto out = scratch("missing");
  auto cfg = write_config(out, "g.json", R"({"nodes": 2, "edges": [{"tail": 0, "cost": 1}]})");
  try {
    cli::cmd_solve_graph(options(cfg, out));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[0]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("head"), std::string::npos) << e.what();
  }
}

TEST(CliSolveTonelli, PendulumAndFlat) {
  auto out = scratch("tonelli");
  auto cfg = write_config(out, "pend.json", R"({
    "model": {"type": "tonelli", "grid": {"nx": 32, "nv": 32, "n": 2.0}, "lagrangian": {"preset": "pendulum"}},
    "checks": {"support_n": 1.0}})");
  EXPECT_EQ(cli::cmd_solve_tonelli(options(cfg, out)), 0);
  auto j = read_json(out / "pend.solve_tonelli.json");
  EXPECT_LE(std::abs(j["value"].get<double>() + 1.0), 2.0 / 32);
  EXPECT_EQ(j["face_dim"].get<int>(), 0);
  EXPECT_TRUE(j["support_bound"]["holds"].get<bool>());
  EXPECT_EQ(j["graph_property"]["max_multiplicity"].get<int>(), 1);
  EXPECT_EQ(io::read_file((out / "pend.measure_0.csv").string()), "x0,v0,weight\n0.5,0,1\n");

  EXPECT_EQ(cli::cmd_solve_tonelli(options(kScenarios + "/flat.json", out)), 0);
  EXPECT_EQ(read_json(out / "flat.solve_tonelli.json")["face_dim"].get<int>(), 31);
}

TEST(CliSolveTonelli, TruncationSurfaced) {
  auto out = scratch("trunc");
  auto cfg = write_config(out, "t.json", R"({
    "model": {"type": "tonelli", "grid": {"nx": 8, "nv": 8, "n": 0.25}, "lagrangian": {"preset": "flat"}},
    "c": [0.5]})");
  EXPECT_THROW(cli::cmd_solve_tonelli(options(cfg, out)), TruncationError);
  EXPECT_EQ(run_binary("solve-tonelli " + cfg + " --out " + out.string()), 1);
}

TEST(CliTilt, ShippedScenarios) {
  auto out = scratch("tilt");
  EXPECT_EQ(cli::cmd_tilt_experiment(options(kScenarios + "/two-loops-d0.json", out)), 0);
  auto j = read_json(out / "two-loops-d0.tilt_experiment.json");
  EXPECT_GE(j["fraction_ok"].get<double>(), 0.999);
  EXPECT_LE(j["worst_dim"].get<int>(), 1);
  EXPECT_EQ(j["untilted_dim"].get<int>(), 1);
  EXPECT_EQ(cli::cmd_tilt_experiment(options(kScenarios + "/pendulum-cohomology-d1.json", out)), 0);
  auto p = read_json(out / "pendulum-cohomology-d1.tilt_experiment.json");
  long ok = 0, total = 0;
  auto counts = p["dim_counts"].get<std::vector<long>>();
  for (std::size_t d = 0; d < counts.size(); ++d) {
    total += counts[d];
    if (d <= 1) ok += counts[d];
  }
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(total), 0.99);
}

TEST(CliTilt, InvalidTrialsAndThresholdFailure) {
  auto out = scratch("tilt_bad");
  auto zero = write_config(out, "zero.json", R"({
    "model": {"type": "graph", "graph": {"nodes": 1, "edges": [{"tail": 0, "head": 0, "cost": 1}]}},
    "experiment": {"trials": 0}})");
  EXPECT_THROW(cli::cmd_tilt_experiment(options(zero, out)), ConfigError);
  EXPECT_EQ(run_binary("tilt-experiment " + zero + " --out " + out.string()), 1);
  // Tilts far below the face tolerance cannot break the tie.
  auto tiny = write_config(out, "tiny.json", R"({
    "model": {"type": "graph", "graph_file": ")" + kScenarios + R"(/two-loops.graph.json"},
    "experiment": {"trials": 10, "radius": 1e-12}})");
  EXPECT_EQ(cli::cmd_tilt_experiment(options(tiny, out)), 2);
  EXPECT_EQ(run_binary("tilt-experiment " + tiny + " --out " + out.string()), 2);
}

TEST(CliAlpha, TwoLoopCurveAndEmptyGrid) {
  auto out = scratch("alpha");
  EXPECT_EQ(cli::cmd_alpha_curve(options(kScenarios + "/two-loops-alpha.json", out)), 0);
  std::istringstream csv(io::read_file((out / "two-loops-alpha.alpha.csv").string()));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "c0,alpha");
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    const double c = std::stod(line.substr(0, comma)), a = std::stod(line.substr(comma + 1));
    EXPECT_NEAR(a, std::abs(c), 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 41);
  auto empty = write_config(out, "empty.json", R"({
    "model": {"type": "graph", "graph_file": ")" + kScenarios + R"(/two-loops.graph.json"},
    "alpha": {"c_grid": []}})");
  EXPECT_THROW(cli::cmd_alpha_curve(options(empty, out)), ConfigError);
  EXPECT_EQ(run_binary("alpha-curve " + empty + " --out " + out.string()), 1);
}

TEST(CliSigma, AbsoluteValueSingleCell) {
  auto out = scratch("sigma");
  EXPECT_EQ(cli::cmd_sigma_scan(options(kScenarios + "/abs-scan.json", out)), 0);
  EXPECT_EQ(io::read_file((out / "abs-scan.sigma_scan.csv").string()), "i0,k\n10,1\n");
}

TEST(CliFlags, UnknownFlagAndOverrides) {
  auto out = scratch("flags");
  const std::string cfg = kScenarios + "/two-loops-tie.json";
  EXPECT_EQ(run_binary("solve-graph " + cfg + " --bogus --out " + out.string()), 1);
  EXPECT_EQ(run_binary("no-such-command"), 1);
  EXPECT_EQ(run_binary(""), 1);
  EXPECT_EQ(run_binary("solve-graph"), 1);
  EXPECT_EQ(run_binary("solve-graph " + cfg + " --seed 5 --tol-face 1e-6 --budget 3 --out " + out.string()), 0);
  auto j = read_json(out / "two-loops-tie.solve_graph.json");
  EXPECT_EQ(j["seed"].get<int>(), 5);
  EXPECT_DOUBLE_EQ(j["face_tol"].get<double>(), 1e-6);
  EXPECT_EQ(run_binary("solve-graph " + cfg + " --tol-face -1 --out " + out.string()), 1);
  EXPECT_EQ(run_binary("solve-graph " + cfg + " --seed notanumber --out " + out.string()), 1);
  EXPECT_EQ(run_binary("--help"), 0);
}

TEST(CliFlags, OutputDirectoryFromEnvironment) {
  auto out = scratch("env");
  const std::string cmd = "AMLAB_OUT_DIR=" + out.string() + " " + AMLAB_CLI_PATH + " solve-graph " + kScenarios +
                          "/single-cycle.txt >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "single-cycle.solve_graph.json"));
}

TEST(CliDeterminism, RepeatRunsAreByteIdentical) {
  auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    auto o = options(kScenarios + "/two-loops-d1.json", dir);
    EXPECT_EQ(cli::cmd_tilt_experiment(o), 0);
  }
  for (const char* f : {"two-loops-d1.tilt_experiment.json", "two-loops-d1.tilt_experiment.csv"})
    EXPECT_EQ(io::read_file((a / f).string()), io::read_file((b / f).string())) << f;
}

TEST(CliSchema, CoversScenarioKeys) {
  const json schema = read_json(fs::path(kScenarios).parent_path() / "schemas" / "config.schema.json");
  const json& top = schema["properties"];
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".json") continue;
    const json cfg = read_json(e.path());
    if (!cfg.contains("model")) continue;
    for (const auto& [key, value] : cfg.items()) EXPECT_TRUE(top.contains(key)) << e.path() << ": " << key;
    const std::string type = cfg["model"]["type"];
    bool known = false;
    for (const auto& t : schema["$defs"]["model"]["properties"]["type"]["enum"]) known = known || t == type;
    EXPECT_TRUE(known) << type;
  }
}
