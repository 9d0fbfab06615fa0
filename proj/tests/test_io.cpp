#include <gtest/gtest.h>

#include <filesystem>

#include "rsdetect/io.hpp"

using namespace rsdetect;

TEST(ScenarioJson, RoundTripAndOverlay) {
  Scenario sc;
  sc.K_S = 40;
  sc.delta = 0.4;
  const json j = sc;
  EXPECT_EQ(j.at("K_S"), 40);
  const Scenario back = j.get<Scenario>();
  EXPECT_EQ(back.K_S, 40);
  EXPECT_EQ(back.delta, 0.4);

  Scenario partial;
  json::parse(R"({"K_P": 2})").get_to(partial);
  EXPECT_EQ(partial.K_P, 2);
  EXPECT_EQ(partial.N, 16);
  EXPECT_THROW(json::parse(R"({"KP": 2})").get<Scenario>(), Error);
}

TEST(ThresholdJson, RoundTrip) {
  const std::vector<ThresholdRecord> recs{{DetectorKind::parametric(0.2), "abc", 1e-3, 3.25, 100000, 7},
                                          {DetectorKind::gasd(), "abc", 1e-3, -0.5, 100000, 7}};
  const auto path = (std::filesystem::temp_directory_path() / "rsdetect_io_thresholds.json").string();
  write_text_file(path, thresholds_to_json(recs));
  const auto back = load_thresholds(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].detector, DetectorKind::parametric(0.2));
  EXPECT_EQ(back[0].threshold, 3.25);
  EXPECT_EQ(back[1].master_seed, 7u);
  EXPECT_EQ(back[1].scenario_digest, "abc");

  write_text_file(path, json(recs[0]).dump());
  EXPECT_EQ(load_thresholds(path).size(), 1u);
  write_text_file(path, "{not json");
  EXPECT_THROW(load_thresholds(path), Error);
  std::filesystem::remove(path);
}

TEST(PdCsv, RoundTrip) {
  PdCurve c;
  c.detector = DetectorKind::glrt_h();
  c.snr_grid_db = {5.0, 5.5};
  c.pd = {0.125, 0.9};
  c.ci_halfwidth = {pd_ci_halfwidth(0.125, 1000), pd_ci_halfwidth(0.9, 1000)};
  c.n_trials = 1000;
  c.cos2_theta = 0.4670826674948623;
  c.seed = 99;
  const auto rows = parse_pd_csv(pd_curves_to_csv({c}));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].snr_db, 5.5);
  EXPECT_EQ(rows[1].detector, "GLRT-H");
  EXPECT_EQ(rows[0].pd, 0.125);
  EXPECT_NEAR(rows[0].cos2_theta, c.cos2_theta, 1e-12);
  EXPECT_EQ(rows[0].n_trials, 1000);
  EXPECT_EQ(rows[0].seed, 99u);
}

TEST(PdCsv, RejectsBadInput) {
  EXPECT_THROW(parse_pd_csv("snr,pd\n1,2\n"), Error);
  EXPECT_THROW(parse_pd_csv(std::string(kPdCsvHeader) + "\n1,GLRT,0.5\n"), Error);
}
