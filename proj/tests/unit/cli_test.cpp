#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "implreg/builtins.hpp"
#include "implreg/errors.hpp"
#include "implreg/experiment.hpp"
#include "implreg/io.hpp"
#include "implreg/relu_geometry.hpp"

namespace fs = std::filesystem;
using namespace implreg;
using cli::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("implreg_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> diagnostics_of(const json& j) {
  try {
    cli::config_from_json(j);
  } catch (const cli::ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

json small_single_point(const fs::path& out) {
  json j = cli::builtin_experiment("single_point_logistic");
  j["train"]["steps"] = 20000;
  j["train"]["snapshot_stride"] = 2500;
  j["output_dir"] = out.string();
  return j;
}

}  // namespace

TEST(Builtins, Fig1dShape) {
  const Dataset d = builtins::fig1d();
  ASSERT_EQ(d.size(), 12u);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d[i - 1].x[0], d[i].x[0]);
  auto slope = [&](std::size_t i) {
    return (d[i + 1].y - d[i].y) / (d[i + 1].x[0] - d[i].x[0]);
  };
  const std::size_t k = builtins::kFig1dCollinearTriple;
  EXPECT_NEAR(slope(k), slope(k + 1), 1e-12);
  EXPECT_LT(slope(0), slope(1));    // convex at the left
  EXPECT_GT(slope(8), slope(9));    // concave at the right
}

TEST(Builtins, SeededGeneratorsReproduce) {
  for (const char* name : {"tanh_sparsity_1d", "tanh_sparsity_5d", "gaussian", "ou_toy"}) {
    const Dataset a = builtins::generate(name, 4, {});
    const Dataset b = builtins::generate(name, 4, {});
    const Dataset c = builtins::generate(name, 5, {});
    ASSERT_EQ(a.size(), b.size()) << name;
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].x, b[i].x) << name;
      EXPECT_EQ(a[i].y, b[i].y) << name;
      differs = differs || a[i].x != c[i].x;
    }
    EXPECT_TRUE(differs) << name;
  }
  EXPECT_EQ(builtins::tanh_sparsity_1d(0).size(), 6u);
  const Dataset t5 = builtins::tanh_sparsity_5d(0);
  EXPECT_EQ(t5.size(), 30u);
  for (std::size_t i = 20; i < 30; ++i) EXPECT_EQ(std::abs(t5[i].y), 1.0);
  builtins::GeneratorParams p;
  p.delta = 0.25;
  EXPECT_EQ(builtins::generate("two_copy", 0, p).size(), 24u);
}

TEST(Io, TrajectoryRoundTripIsExact) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  Trajectory t;
  for (int s = 0; s < 20; ++s) {
    Snapshot snap{s * 7, Vector(9)};
    for (double& v : snap.params) v = nd(gen) * std::pow(10.0, static_cast<int>(nd(gen) * 50));
    t.snapshots.push_back(snap);
  }
  t.snapshots[3].params[0] = std::numeric_limits<double>::denorm_min();
  t.snapshots[4].params[1] = -std::numeric_limits<double>::max();
  t.snapshots[5].params[2] = 0.1;
  std::stringstream ss;
  io::write_trajectory_csv(ss, t);
  const Trajectory back = io::read_trajectory_csv(ss);
  ASSERT_EQ(back.snapshots.size(), t.snapshots.size());
  for (std::size_t i = 0; i < t.snapshots.size(); ++i) {
    EXPECT_EQ(back.snapshots[i].step, t.snapshots[i].step);
    EXPECT_EQ(back.snapshots[i].params, t.snapshots[i].params);
  }
}

TEST(Io, MetricsRoundTripAndHeader) {
  io::MetricsTable m{true, {{0, 1.5, 2.0 / 3.0, 5.25}, {100, 1e-17, 3.0, 4.0}}};
  std::stringstream ss;
  io::write_metrics_csv(ss, m);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "step,loss,r_sum,curve_length");
  const io::MetricsTable back = io::read_metrics_csv(ss);
  ASSERT_TRUE(back.has_curve_length);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].r_sum, 2.0 / 3.0);
  EXPECT_EQ(back.rows[1].loss, 1e-17);
  std::stringstream bad("step,loss\n1,2\n");
  EXPECT_THROW(io::read_metrics_csv(bad), Error);
}

TEST(Config, EveryBuiltinValidatesAndRoundTrips) {
  for (const auto& e : cli::list_experiments()) {
    const cli::ExperimentConfig c = cli::config_from_json(cli::builtin_experiment(e.name));
    const json echo = cli::config_to_json(c);
    EXPECT_EQ(cli::config_to_json(cli::config_from_json(echo)), echo) << e.name;
    EXPECT_EQ(c.experiment, e.name);
    EXPECT_FALSE(e.description.empty());
  }
  EXPECT_THROW(cli::builtin_experiment("nope"), cli::ConfigError);
}

TEST(Config, RequiredListingEntries) {
  std::set<std::string> names;
  for (const auto& e : cli::list_experiments()) names.insert(e.name);
  for (const char* n : {"fig1d", "curve_length", "hard_data", "tanh_sparsity_1d",
                        "tanh_sparsity_5d"})
    EXPECT_TRUE(names.count(n)) << n;
}

TEST(Config, UnknownKeysAndBadValuesAreNamed) {
  json j = cli::builtin_experiment("fig1d");
  j["train"]["etta"] = 0.1;
  j["architecture"]["activation"] = "softplus";
  j["analyses"]["cluster_tol"] = -1.0;
  j["extra"] = true;
  const auto d = diagnostics_of(j);
  EXPECT_TRUE(any_contains(d, "'train.etta': unknown key"));
  EXPECT_TRUE(any_contains(d, "'architecture.activation'"));
  EXPECT_TRUE(any_contains(d, "'analyses.cluster_tol'"));
  EXPECT_TRUE(any_contains(d, "'extra': unknown key"));

  json k = cli::builtin_experiment("fig1d");
  k.erase("schema_version");
  EXPECT_TRUE(any_contains(diagnostics_of(k), "'schema_version': missing"));
  k["schema_version"] = 2;
  EXPECT_TRUE(any_contains(diagnostics_of(k), "schema_version"));
  k["schema_version"] = "1";
  EXPECT_TRUE(any_contains(diagnostics_of(k), "expected an integer"));
}

TEST(Config, CrossFieldRules) {
  json j = cli::builtin_experiment("tanh_sparsity_1d");
  j["analyses"]["geometry"] = true;
  EXPECT_TRUE(any_contains(diagnostics_of(j), "needs a 1-d relu"));
  json k = cli::builtin_experiment("ou_variance");
  k["init"]["shared"] = false;
  EXPECT_TRUE(any_contains(diagnostics_of(k), "needs init.pretrain and init.shared"));
  json p = cli::builtin_experiment("fig1d");
  p["dataset"] = {{"points", {{{"x", {1.0, 2.0}}, {"y", 0.0}}}}};
  EXPECT_TRUE(any_contains(diagnostics_of(p), "input_dim"));
  p["dataset"] = {{"points", json::array()}, {"builtin", "fig1d"}};
  EXPECT_TRUE(any_contains(diagnostics_of(p), "exactly one"));
}

TEST(Config, InlinePointsAccepted) {
  json j = cli::builtin_experiment("fig1d");
  j["dataset"] = {{"points", {{{"x", 0.0}, {"y", 1.0}}, {{"x", {1.0}}, {"y", 2.0}}}}};
  const cli::ExperimentConfig c = cli::config_from_json(j);
  ASSERT_EQ(c.dataset.points.size(), 2u);
  EXPECT_EQ(c.dataset.points[1].x, Vector{1.0});
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  try {
    cli::parse_json_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "cfg.json");
    FAIL();
  } catch (const cli::ConfigError& e) {
    EXPECT_NE(e.diagnostics().front().find("cfg.json:3:"), std::string::npos)
        << e.diagnostics().front();
  }
}

TEST(Config, Overrides) {
  json j = cli::builtin_experiment("fig1d");
  cli::apply_override(j, "train.eta=0.005");
  cli::apply_override(j, "train.noise.kind=gaussian");
  cli::apply_override(j, "analyses.spectrum=true");
  cli::apply_override(j, "dataset.params.delta=0.1");
  EXPECT_EQ(j["train"]["eta"], 0.005);
  EXPECT_EQ(j["train"]["noise"]["kind"], "gaussian");
  EXPECT_EQ(j["analyses"]["spectrum"], true);
  EXPECT_EQ(j["dataset"]["params"]["delta"], 0.1);
  EXPECT_THROW(cli::apply_override(j, "novalue"), cli::ConfigError);
  EXPECT_THROW(cli::apply_override(j, "train.eta.x=1"), cli::ConfigError);
}

TEST(Run, WritesManifestCsvAndReport) {
  const fs::path out = scratch("run");
  const cli::ExperimentConfig c = cli::config_from_json(small_single_point(out));
  const cli::RunResult r = cli::run(c);
  EXPECT_EQ(r.manifest["status"], "ok");
  const json man = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(man["status"], "ok");
  EXPECT_EQ(man["seeds"], json::array({1}));
  EXPECT_TRUE(man.contains("wall_clock_seconds"));
  EXPECT_TRUE(fs::exists(out / man["outputs"]["report"].get<std::string>()));
  for (const json& run : man["outputs"]["runs"]) {
    EXPECT_TRUE(fs::exists(out / run["trajectory"].get<std::string>()));
    EXPECT_TRUE(fs::exists(out / run["metrics"].get<std::string>()));
  }
  std::ifstream tin(out / "seed_1" / "trajectory.csv");
  const Trajectory t = io::read_trajectory_csv(tin);
  ASSERT_EQ(t.snapshots.size(), 9u);
  EXPECT_EQ(t.snapshots.back().step, 20000);
  const json rep = json::parse(slurp(out / "report.json"));
  EXPECT_EQ(rep["runs"][0]["final_params"].get<Vector>(), t.snapshots.back().params);
  EXPECT_TRUE(rep["runs"][0].contains("single_point"));
  std::ifstream min(out / "seed_1" / "metrics.csv");
  const io::MetricsTable m = io::read_metrics_csv(min);
  EXPECT_FALSE(m.has_curve_length);
  EXPECT_EQ(m.rows.size(), 9u);
}

TEST(Run, RerunFromManifestIsByteIdentical) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  json cfg = small_single_point(a);
  cfg["n_seeds"] = 2;
  cli::run(cli::config_from_json(cfg));
  json man = json::parse(slurp(a / "manifest.json"));
  man["config"]["output_dir"] = b.string();
  cli::run(cli::config_from_json(man));  // the manifest stands in for the config
  for (const char* s : {"seed_1", "seed_2"})
    for (const char* f : {"trajectory.csv", "metrics.csv"})
      EXPECT_EQ(slurp(a / s / f), slurp(b / s / f)) << s << "/" << f;
  EXPECT_NE(slurp(a / "seed_1" / "trajectory.csv"), slurp(a / "seed_2" / "trajectory.csv"));
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
}

TEST(Run, OneDimReluEmitsCurveLength) {
  const fs::path out = scratch("curve");
  json j = cli::builtin_experiment("curve_length");
  j["train"]["steps"] = 4000;
  j["train"]["snapshot_stride"] = 1000;
  j["output_dir"] = out.string();
  cli::run(cli::config_from_json(j));
  std::ifstream in(out / "seed_1" / "metrics.csv");
  const io::MetricsTable m = io::read_metrics_csv(in);
  ASSERT_TRUE(m.has_curve_length);
  ASSERT_EQ(m.rows.size(), 5u);
  const Dataset d = builtins::fig1d();
  for (const auto& r : m.rows) EXPECT_GE(r.curve_length, chord_sum(d) * (1 - 1e-12));
  const json rep = json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(rep["runs"][0]["control"].contains("curve_length"));
}

TEST(Run, NumericFailureNamesTheStage) {
  const fs::path out = scratch("diverge");
  json j = cli::builtin_experiment("curve_length");
  j["train"]["eta"] = 0.9;
  j["train"]["control"] = false;
  j["init"]["scale"] = 30.0;
  j["output_dir"] = out.string();
  try {
    cli::run(cli::config_from_json(j));
    FAIL() << "expected divergence";
  } catch (const cli::AnalysisError& e) {
    EXPECT_EQ(e.analysis(), "train");
  }
  EXPECT_EQ(json::parse(slurp(out / "manifest.json"))["status"], "failed");
}

#ifdef IMPLREG_TOOL_PATH
namespace {
int tool(const std::string& args) {
  const std::string cmd = std::string(IMPLREG_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(Tool, ExitCodes) {
  const fs::path dir = scratch("tool");
  fs::create_directories(dir);
  EXPECT_EQ(tool("list"), 0);
  EXPECT_EQ(tool("show --experiment fig1d"), 0);
  EXPECT_EQ(tool("run --experiment no_such_thing"), 2);
  EXPECT_EQ(tool("run --experiment fig1d --override train.etta=1"), 2);
  EXPECT_EQ(tool("frobnicate"), 2);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{ \"schema_version\": 1,\n  \"experiment\": }";
  }
  EXPECT_EQ(tool("run --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(tool("run --experiment curve_length --out " + (dir / "div").string() +
                 " --override train.eta=0.9 --override init.scale=30 --override train.control=false"),
            3);
  EXPECT_EQ(tool("run --experiment single_point_tanh --seed 4 --stride 1000 --out " +
                 (dir / "ok").string() + " --override train.steps=3000"),
            0);
  const json man = json::parse(slurp(dir / "ok" / "manifest.json"));
  EXPECT_EQ(man["seeds"], json::array({4}));
  EXPECT_EQ(man["config"]["train"]["snapshot_stride"], 1000);
  EXPECT_TRUE(fs::exists(dir / "ok" / "seed_4" / "trajectory.csv"));
}
#endif
