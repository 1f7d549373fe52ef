#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "tcm/cli.hpp"

using namespace tcm;
using namespace tcm::testing_support;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tcm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string scenario_path() { return data_file("reference_scenario.json").string(); }

/// Numeric fields of a CSV file without its header.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream fields(line);
    std::string f;
    while (std::getline(fields, f, ',')) row.push_back(std::stod(f));
    rows.push_back(row);
  }
  return rows;
}

double value_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  if (pos == std::string::npos) return std::nan("");
  return std::stod(text.substr(pos + key.size()));
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"simulate"}).code, cli::kUsage);  // --out missing
  EXPECT_EQ(run_cli({"check", "--scenario", "/nonexistent/file.json"}).code, cli::kUsage);
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, cli::kOk);
  EXPECT_NE(help.out.find("reproduce"), std::string::npos);
}

TEST(Cli, SimulateWritesMeasurementsAndCurves) {
  const auto dir = scratch_dir();
  const auto r = run_cli({"simulate", "--scenario", scenario_path(), "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const std::string meas = read_file(dir / "measurements.csv");
  EXPECT_EQ(meas.rfind("index,block,region,time,value\n", 0), 0u);
  EXPECT_EQ(std::count(meas.begin(), meas.end(), '\n'), 101);
  const auto params = read_file(dir / "parameters.csv");
  EXPECT_NE(params.find("K1_3,0.17699999999999999"), std::string::npos);
  const auto curves = read_numeric_csv(dir / "curves.csv");
  EXPECT_EQ(curves.size(), 1001u);
  EXPECT_EQ(curves.front()[2], 1.0);  // f(0)
}

TEST(Cli, SimulateRejectsInvalidJson) {
  const auto dir = scratch_dir();
  io::write_text(dir / "bad.json", "{ not json");
  const auto r = run_cli({"simulate", "--scenario", (dir / "bad.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kParse);
  EXPECT_NE(r.err.find("parse error"), std::string::npos);
}

TEST(Cli, MinuteAndSecondScenariosGiveIdenticalCurves) {
  const auto dir = scratch_dir();
  ASSERT_EQ(run_cli({"simulate", "--scenario", scenario_path(), "--out", (dir / "sec").string()}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--scenario", data_file("reference_scenario_min.json").string(), "--out",
                     (dir / "min").string()})
                .code,
            0);
  const auto a = read_numeric_csv(dir / "sec" / "curves.csv");
  const auto b = read_numeric_csv(dir / "min" / "curves.csv");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t c = 0; c < a[i].size(); ++c) EXPECT_NEAR(a[i][c], b[i][c], 1e-12 * (1.0 + std::abs(a[i][c])));
  }
  // Reading the second-based file as minutes changes the physics.
  ASSERT_EQ(run_cli({"simulate", "--scenario", scenario_path(), "--units", "min", "--out", (dir / "as_min").string()})
                .code,
            0);
  EXPECT_NE(read_file(dir / "as_min" / "curves.csv"), read_file(dir / "sec" / "curves.csv"));
}

TEST(Cli, IdentifyNoiselessSynthesized) {
  const auto dir = scratch_dir();
  const auto r = run_cli({"identify", "--scenario", scenario_path(), "--synthesize", "--delta-x", "0.01", "--out",
                          dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_LT(value_after(r.out, "rel_error: "), 1e-4);
  EXPECT_NE(r.out.find("mode: full"), std::string::npos);
  EXPECT_NE(r.out.find("region 3: K1 = "), std::string::npos);
  EXPECT_EQ(read_file(dir / "trace.csv").rfind("iter,residual_norm,rel_error\n", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "fit.csv"));
}

TEST(Cli, IdentifyKnownCartAndNoise) {
  const auto r = run_cli({"identify", "--synthesize", "--mode", "known_cart", "--delta-y", "1e-3", "--delta-x", "0.05",
                          "--seed", "3"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("mode: known_cart"), std::string::npos);
  EXPECT_NE(r.out.find("tau*delta: "), std::string::npos);
}

TEST(Cli, IdentifyValidation) {
  EXPECT_EQ(run_cli({"identify", "--synthesize", "--tau", "0.9"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"identify"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"identify", "--synthesize", "--mode", "partial"}).code, cli::kUsage);
}

TEST(Cli, IdentifyFromMeasurementFile) {
  const auto dir = scratch_dir();
  ASSERT_EQ(run_cli({"simulate", "--out", dir.string()}).code, 0);
  const auto r = run_cli({"identify", "--data", (dir / "measurements.csv").string(), "--delta-x", "0.01",
                          "--max-iter", "40"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.out.find("rel_error"), std::string::npos);  // truth unknown

  io::write_text(dir / "short.csv", "index,value\n0,1\n1,2\n");
  const auto mismatch = run_cli({"identify", "--data", (dir / "short.csv").string()});
  EXPECT_EQ(mismatch.code, cli::kParse);
  EXPECT_NE(mismatch.err.find("dimension mismatch"), std::string::npos);
  io::write_text(dir / "garbage.csv", "index,value\n0,abc\n");
  const auto garbage = run_cli({"identify", "--data", (dir / "garbage.csv").string()});
  EXPECT_EQ(garbage.code, cli::kParse);
  EXPECT_NE(garbage.err.find("garbage.csv:2"), std::string::npos);
}

TEST(Cli, CheckReferenceScenario) {
  const auto r = run_cli({"check", "--scenario", scenario_path()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("assumption A: satisfied"), std::string::npos);
  EXPECT_NE(r.out.find("T = 25 >= 2(p+3) = 12: OK"), std::string::npos);
  EXPECT_NE(r.out.find("j0 = 1: regions (1, 2, 3)"), std::string::npos);
}

TEST(Cli, CheckShortGridAndDuplicateRegions) {
  const auto dir = scratch_dir();
  auto j = io::scenario_to_json(reference_scenario());
  j["grid"] = nlohmann::json::parse(R"({"segments": [{"duration": 3750, "points": 10}]})");
  j.erase("blood_times");
  io::write_text(dir / "short.json", j.dump());
  const auto short_grid = run_cli({"check", "--scenario", (dir / "short.json").string()});
  ASSERT_EQ(short_grid.code, cli::kOk) << short_grid.err;
  EXPECT_NE(short_grid.out.find("warning: T < 12"), std::string::npos);

  auto dup = io::scenario_to_json(reference_scenario());
  dup["regions"][2] = dup["regions"][1];
  io::write_text(dir / "dup.json", dup.dump());
  const auto r = run_cli({"check", "--scenario", (dir / "dup.json").string()});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("assumption A: violated"), std::string::npos);
  EXPECT_NE(r.out.find("k3 values not pairwise distinct"), std::string::npos);
}

TEST(Cli, ReproduceIsByteIdentical) {
  const auto dir = scratch_dir();
  const std::vector<std::string> base = {"reproduce", "--campaign", data_file("campaign_reference.json").string(),
                                         "--repetitions", "3", "--max-iter", "20", "--seed", "11"};
  auto first = base;
  first.insert(first.end(), {"--out", (dir / "a").string()});
  auto second = base;
  second.insert(second.end(), {"--out", (dir / "b").string(), "--threads", "2"});
  ASSERT_EQ(run_cli(first).code, cli::kOk);
  ASSERT_EQ(run_cli(second).code, cli::kOk);
  std::size_t compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / entry.path().filename();
    ASSERT_TRUE(std::filesystem::exists(other)) << other;
    EXPECT_EQ(read_file(entry.path()), read_file(other)) << entry.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 2u);
  const auto results = io::summary_from_json(nlohmann::json::parse(read_file(dir / "a" / "results.json")));
  EXPECT_EQ(results.spec.seed, 11u);
  EXPECT_EQ(results.runs.size(), 3u);
}

TEST(Cli, ReproduceAllProducesThirtyTwoRows) {
  const auto dir = scratch_dir();
  const auto r = run_cli({"reproduce", "--all", "--repetitions", "1", "--max-iter", "3", "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const std::string table = read_file(dir / "table1.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 33);
  EXPECT_EQ(run_cli({"reproduce", "--out", dir.string()}).code, cli::kUsage);
}

TEST(Cli, JaccheckPassesAndDetectsCorruption) {
  const auto ok = run_cli({"jaccheck", "--scenario", scenario_path(), "--trials", "3"});
  EXPECT_EQ(ok.code, cli::kOk) << ok.err;
  EXPECT_NE(ok.out.find("PASS"), std::string::npos);
  const auto bad = run_cli({"jaccheck", "--trials", "2", "--corrupt-entry", "30:0"});
  EXPECT_EQ(bad.code, cli::kNumerical);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run_cli({"jaccheck", "--trials", "0"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"jaccheck", "--corrupt-entry", "999:0"}).code, cli::kUsage);
}
