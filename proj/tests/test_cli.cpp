#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

using namespace rsdetect;
using namespace rsdetect::cli;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rsdetect_cli_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParseResult parse(std::vector<const char*> args) {
  args.insert(args.begin(), "rsdetect");
  return parse_args(static_cast<int>(args.size()), args.data());
}

RunConfig small_config(Command cmd) {
  RunConfig c;
  c.command = cmd;
  c.scenario.N = 8;
  c.scenario.K_P = 2;
  c.scenario.K_S = 16;
  c.pfa = 0.05;
  c.trials_h0 = 2000;
  c.trials_h1 = 200;
  return c;
}

}  // namespace

TEST(CliParse, DefaultsAndGrids) {
  const auto p = parse({"pd-curve"});
  EXPECT_EQ(p.config.command, Command::PdCurve);
  EXPECT_EQ(p.config.pfa, 1e-3);
  EXPECT_EQ(p.config.trials_h0, 100000);
  EXPECT_EQ(p.config.snr_spec().start_db, 5.0);
  EXPECT_EQ(parse({"pd-curve", "--delta", "0.4"}).config.snr_spec().start_db, 10.0);
  EXPECT_EQ(parse({"calibrate", "--reference-protocol"}).config.trials_h0, 1000000);
  const auto d = parse({"calibrate", "--detector", "GLRT", "--detector", "parametric", "--epsilon", "0.5"});
  ASSERT_EQ(d.config.detectors.size(), 2u);
  EXPECT_EQ(d.config.detectors[1], DetectorKind::parametric(0.5));
}

TEST(CliParse, FlagsOverrideConfigOverridesDefaults) {
  const auto path = temp_path("config.json");
  write_text_file(path, R"({"command": "compare", "scenario": {"K_P": 2, "K_S": 24}, "pfa": 0.01, "seed": 5})");
  const auto p = parse({"--config", path.c_str(), "--ks", "20"});
  EXPECT_EQ(p.config.command, Command::Compare);
  EXPECT_EQ(p.config.scenario.K_P, 2);
  EXPECT_EQ(p.config.scenario.K_S, 20);
  EXPECT_EQ(p.config.pfa, 0.01);
  EXPECT_EQ(p.config.seed, 5u);
  EXPECT_EQ(p.config.scenario.N, 16);
  std::filesystem::remove(path);
}

TEST(CliParse, InvalidConfigExitCode) {
  std::ostringstream log;
  const char* bad_pfa[] = {"rsdetect", "calibrate", "--pfa", "0.7"};
  EXPECT_EQ(main_entry(4, bad_pfa, log), kConfig);
  const char* bad_cmd[] = {"rsdetect", "fly"};
  EXPECT_EQ(main_entry(2, bad_cmd, log), kConfig);
  const char* bad_snr[] = {"rsdetect", "pd-curve", "--snr", "5:1:1"};
  EXPECT_EQ(main_entry(4, bad_snr, log), kConfig);
  const char* short_run[] = {"rsdetect", "calibrate", "--trials-h0", "100", "--out", "-"};
  EXPECT_EQ(main_entry(6, short_run, log), kConfig);
}

TEST(CliRun, CalibrateIsByteIdentical) {
  auto c = small_config(Command::Calibrate);
  c.out_path = temp_path("a.json");
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kOk);
  c.out_path = temp_path("b.json");
  ASSERT_EQ(run(c, log), kOk);
  EXPECT_EQ(slurp(temp_path("a.json")), slurp(temp_path("b.json")));
  EXPECT_EQ(load_thresholds(temp_path("a.json")).size(), 5u);
}

TEST(CliRun, PdCurveReusesThresholdsAndRejectsStale) {
  auto cal = small_config(Command::Calibrate);
  cal.out_path = temp_path("t.json");
  std::ostringstream log;
  ASSERT_EQ(run(cal, log), kOk);

  auto pd = small_config(Command::PdCurve);
  pd.threshold_path = cal.out_path;
  pd.snr = SnrSpec{40, 40, 1};
  pd.out_path = temp_path("pd.csv");
  ASSERT_EQ(run(pd, log), kOk);
  const auto rows = parse_pd_csv(slurp(pd.out_path));
  EXPECT_EQ(rows.size(), 5u);
  for (const auto& r : rows) EXPECT_GE(r.pd, 1.0 - 1.0 / 200);

  pd.scenario.K_S = 20;
  try {
    run(pd, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.code()), kStaleThreshold);
  }
}

TEST(CliRun, CompareWritesCsvAndSummary) {
  auto c = small_config(Command::Compare);
  c.snr = SnrSpec{0, 30, 10};
  c.out_path = temp_path("cmp.csv");
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kOk);
  EXPECT_EQ(parse_pd_csv(slurp(c.out_path)).size(), 20u);
  const auto summary = slurp(summary_path(c.out_path));
  EXPECT_NE(summary.find("pd 0.9"), std::string::npos);
  EXPECT_NE(summary.find("GLRT-H"), std::string::npos);
}

TEST(CliRun, CfarCheckReport) {
  auto c = small_config(Command::CfarCheck);
  c.detectors = {DetectorKind::robust_glrt()};
  c.trials_h0 = 4000;
  c.out_path = temp_path("cfar.json");
  std::ostringstream log;
  const int code = run(c, log);
  const auto j = read_json_file(c.out_path);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(code, j[0]["pass"].get<bool>() ? kOk : kCheckFailed);
}

TEST(CliRun, VerifyOracles) {
  auto c = small_config(Command::VerifyOracles);
  c.oracle_instances = 2;
  c.out_path = temp_path("oracles.jsonl");
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kOk);
  std::istringstream lines(slurp(c.out_path));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    EXPECT_TRUE(json::parse(line).at("pass").get<bool>());
    ++count;
  }
  EXPECT_GE(count, 2 * 9);
}
