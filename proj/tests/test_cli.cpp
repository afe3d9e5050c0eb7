#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli_commands.hpp"

using namespace cflow;
using namespace cflow::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

int invoke_cli(const std::string& args) {
  const std::string cmd = std::string(CFLOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, KeyValuesSkipCommentsAndBlanks) {
  std::istringstream in("# header\n\nspeed = expm1   # trailing\n  mode=area\n");
  const auto kv = read_key_values(in, "inline");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "speed");
  EXPECT_EQ(kv[0].second, "expm1");
  EXPECT_EQ(kv[1].second, "area");
}

TEST(Config, MissingEqualsIsAnError) {
  std::istringstream in("speed expm1\n");
  EXPECT_THROW(read_key_values(in, "inline"), SpecError);
}

TEST(Config, LoadExperimentAppliesEveryKey) {
  const auto dir = scratch("cfg");
  {
    std::ofstream f(dir / "a.cfg");
    f << "dim = 2\nshape = spheroid:1,2\nspeed = log1p\nmode = area\ngrid = 64\ntmax = 3\n"
         "cfl = 0.2\ndev-tol = 1e-5\nsphericity-tol = 1e-4\nrecord-interval = 0.1\n"
         "out = x\nsnapshot-every = 4\nlabel = demo\n";
  }
  const auto c = load_experiment((dir / "a.cfg").string());
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.shape, "spheroid:1,2");
  EXPECT_EQ(c.speed, "log1p");
  EXPECT_EQ(c.mode, "area");
  EXPECT_EQ(c.grid, 64u);
  EXPECT_DOUBLE_EQ(c.t_max, 3);
  EXPECT_DOUBLE_EQ(c.cfl, 0.2);
  EXPECT_DOUBLE_EQ(c.dev_tolerance, 1e-5);
  EXPECT_DOUBLE_EQ(c.sphericity_tolerance, 1e-4);
  EXPECT_DOUBLE_EQ(c.record_interval, 0.1);
  EXPECT_EQ(c.out, "x");
  EXPECT_EQ(c.snapshot_every, 4u);
  EXPECT_EQ(c.label, "demo");
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeyAndBadValuesAreRejected) {
  const auto dir = scratch("cfg_bad");
  {
    std::ofstream f(dir / "a.cfg");
    f << "colour = red\n";
  }
  EXPECT_THROW(load_experiment((dir / "a.cfg").string()), SpecError);
  EXPECT_THROW(load_experiment((dir / "missing.cfg").string()), SpecError);
  ExperimentConfig c;
  EXPECT_THROW(apply_setting(c, "grid", "many"), SpecError);
  c.grid = 100;
  EXPECT_THROW(c.validate(), SpecError);
  c = ExperimentConfig{};
  c.dim = 3;
  EXPECT_THROW(c.validate(), SpecError);
  c = ExperimentConfig{};
  c.speed = "cubic";
  EXPECT_THROW(c.validate(), SpecError);
}

TEST(Sweep, ParsesShapesWithDimensionPrefixes) {
  const std::vector<std::pair<std::string, std::string>> kv{
      {"shapes", "ellipse:2,1 2@spheroid:1,2"}, {"speeds", "powersum:1:1 expm1"},
      {"modes", "volume area"},                 {"grid", "64"},
      {"jobs", "3"}};
  const auto sw = parse_sweep(kv, "inline");
  ASSERT_EQ(sw.shapes.size(), 2u);
  EXPECT_EQ(sw.shapes[0].dim, 1);
  EXPECT_EQ(sw.shapes[1].dim, 2);
  EXPECT_EQ(sw.shapes[1].shape, "spheroid:1,2");
  EXPECT_EQ(sw.cell_count(), 8u);
  EXPECT_EQ(sw.jobs, 3u);
  EXPECT_EQ(sw.base.grid, 64u);
}

TEST(Sweep, RejectsBadEntries) {
  using KV = std::vector<std::pair<std::string, std::string>>;
  EXPECT_THROW(parse_sweep(KV{{"shapes", "3@ball:1"}}, "x"), SpecError);
  EXPECT_THROW(parse_sweep(KV{{"speeds", "nope"}}, "x"), SpecError);
  EXPECT_THROW(parse_sweep(KV{{"modes", "sideways"}}, "x"), SpecError);
  EXPECT_THROW(parse_sweep(KV{{"colour", "red"}}, "x"), SpecError);
}

TEST(RunCommand, EllipseWritesArtifacts) {
  const auto dir = scratch("run");
  ExperimentConfig c;
  c.grid = 128;
  c.snapshot_every = 50;
  c.out = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(c, log), kOk) << log.str();
  const auto s = read_json(dir / "summary.json");
  EXPECT_EQ(s["status"], "Converged");
  EXPECT_TRUE(s["audits_passed"].get<bool>());
  EXPECT_NEAR(s["achieved_radius"].get<double>(), std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(s["target_radius"].get<double>(), std::sqrt(2.0), 1e-6);
  EXPECT_TRUE(fs::exists(dir / "audit.json"));
  EXPECT_TRUE(fs::exists(dir / "run.csv"));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "00000.csv"));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "00000.svg"));

  std::ifstream csv(dir / "run.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,dt,area,volume,isoper,inradius,circumradius,sphericity,Hmin,Hmax,h,dev");
}

TEST(RunCommand, SurfaceSnapshotsAreMeshes) {
  const auto dir = scratch("run2");
  ExperimentConfig c;
  c.dim = 2;
  c.shape = "spheroid:1,1.2";
  c.grid = 256;  // coarser surface grids miss the per-step audit slack
  c.snapshot_every = 1000;
  c.out = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(c, log), kOk) << log.str();
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "00000.obj"));
}

TEST(RunCommand, NonConvexInitialDataIsExitThree) {
  const auto dir = scratch("run3");
  ExperimentConfig c;
  c.shape = "perturbed:1;2:0.4";
  c.out = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(c, log), kConvexity);
  EXPECT_EQ(read_json(dir / "summary.json")["status"], "InvalidInitialData");
}

TEST(RunCommand, ConfigErrorIsExitTwo) {
  const auto dir = scratch("run4");
  ExperimentConfig c;
  c.grid = 100;
  c.out = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(c, log), kConfigError);
}

TEST(RunCommand, UnfinishedRunIsInconclusive) {
  const auto dir = scratch("run5");
  ExperimentConfig c;
  c.grid = 64;
  c.t_max = 0.01;
  c.out = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(c, log), kInconclusive);
  EXPECT_EQ(read_json(dir / "summary.json")["status"], "TimeExhausted");
}

TEST(SweepCommand, WritesOneRowPerCell) {
  const auto dir = scratch("sweep");
  std::vector<std::pair<std::string, std::string>> kv{
      {"shapes", "ellipse:1.5,1 2@spheroid:1,1.2"},
      {"speeds", "powersum:1:1"},
      {"modes", "volume area"},
      {"grid", "256"},
      {"jobs", "2"},
      {"out", dir.string()}};
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(parse_sweep(kv, "inline"), log), kOk) << log.str();
  std::ifstream csv(dir / "sweep.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(fs::exists(dir / "000_n1_ellipse_1.5_1_powersum_1_1_volume" / "summary.json"));
}

TEST(SweepCommand, AnyFailedCellFailsTheSweep) {
  const auto dir = scratch("sweep2");
  std::vector<std::pair<std::string, std::string>> kv{
      {"shapes", "ball:1 perturbed:1;2:0.4"}, {"grid", "64"}, {"out", dir.string()}};
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(parse_sweep(kv, "inline"), log), kAuditFail);
}

TEST(ValidateSpeed, VerdictsAndJson) {
  const auto dir = scratch("vs");
  std::ostringstream log;
  EXPECT_EQ(cmd_validate_speed("log1p", (dir / "a.json").string(), log), kOk);
  const auto j = read_json(dir / "a.json");
  EXPECT_EQ(j["overall"], "pass");
  EXPECT_EQ(j["conditions"].size(), 5u);
  EXPECT_EQ(cmd_validate_speed("arctan", "", log), kAdmissibilityFail);
  EXPECT_EQ(cmd_validate_speed("bogus", "", log), kConfigError);
}

TEST(OracleCommand, SquareSpeedSphere) {
  std::ostringstream csv, log;
  ASSERT_EQ(cmd_oracle("powersum:2:1", 1, 1.0, 0.25, 6, csv, log), kOk);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,r");
  double t = 0, r = 0;
  char comma;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    row >> t >> comma >> r;
    EXPECT_NEAR(r, std::cbrt(1 - 3 * t), 1e-8) << t;
  }
  EXPECT_DOUBLE_EQ(t, 0.25);
  EXPECT_EQ(cmd_oracle("powersum:2:1", 3, 1.0, 0.25, 6, csv, log), kConfigError);
  EXPECT_EQ(cmd_oracle("powersum:2:1", 2, -1.0, 0.25, 6, csv, log), kConfigError);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("bin");
  EXPECT_EQ(invoke_cli("validate-speed log1p"), 0);
  EXPECT_EQ(invoke_cli("validate-speed arctan"), 1);
  EXPECT_EQ(invoke_cli("validate-speed bogus"), 2);
  EXPECT_EQ(invoke_cli("run --grid 100 --out " + (dir / "a").string()), 2);
  EXPECT_EQ(invoke_cli("run --shape 'perturbed:1;2:0.4' --out " + (dir / "b").string()), 3);
  EXPECT_EQ(invoke_cli("run --shape ellipse:1.5,1 --grid 64 --out " + (dir / "c").string()), 0);
  EXPECT_EQ(invoke_cli("oracle --speed powersum:1:1 --dim 1 --out " + (dir / "o.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o.csv"));
  EXPECT_NE(invoke_cli("frobnicate"), 0);
}

TEST(Binary, FlagsOverrideConfigFile) {
  const auto dir = scratch("bin2");
  {
    std::ofstream f(dir / "a.cfg");
    f << "shape = ellipse:1.5,1\ngrid = 100\nlabel = fromfile\n";
  }
  EXPECT_EQ(invoke_cli("run --config " + (dir / "a.cfg").string() + " --out " + (dir / "r").string()), 2);
  EXPECT_EQ(invoke_cli("run --config " + (dir / "a.cfg").string() + " --grid 64 --out " +
                (dir / "r").string()),
            0);
  EXPECT_EQ(read_json(dir / "r" / "summary.json")["label"], "fromfile");
}
