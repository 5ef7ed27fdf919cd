#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "vrrw/csv.hpp"
#include "vrrw/harness.hpp"

using namespace vrrw;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg{ModelParameters::complete(3, 2.5)};
  cfg.replicas = 12;
  cfg.horizon = 3000;
  cfg.base_seed = 2024;
  return cfg;
}

}  // namespace

TEST(Harness, ReplicaSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 10000; ++r) seeds.insert(replica_seed(1, r));
  EXPECT_EQ(seeds.size(), 10000u);
  EXPECT_NE(replica_seed(1, 0), replica_seed(2, 0));
}

TEST(Harness, TailStart) {
  EXPECT_EQ(tail_start(100, 0.5), 50u);
  EXPECT_EQ(tail_start(10, 0.01), 9u);
}

TEST(Harness, DetectsTwoSiteLocalization) {
  // Alternate between sites 1 and 2 after a short burst on site 3.
  TrajectoryRecord rec;
  rec.sites_count = 3;
  rec.horizon = 1000;
  rec.sites.push_back(2);
  for (int i = 1; i <= 1000; ++i) rec.sites.push_back(i < 20 ? (i % 2 ? 0 : 2) : i % 2);
  rec.final_counts = rec.counts_at(1000);
  const auto loc = detect_localization(rec, 0.5, 0.02);
  EXPECT_EQ(loc.support, (std::vector<int>{0, 1}));
  EXPECT_NEAR(loc.profile(0), 0.5, 1e-2);
  EXPECT_EQ(loc.profile(2), 0.0);
}

TEST(Harness, CampaignIndependentOfThreadsAndOrder) {
  const auto cfg = small_config();
  const auto a = run_campaign(cfg, 1);
  const auto b = run_campaign(cfg, 3);
  std::vector<std::uint64_t> reversed;
  for (std::uint64_t r = cfg.replicas; r-- > 0;) reversed.push_back(r);
  const auto c = run_campaign(cfg, 2, reversed);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == c);
  std::uint64_t total = 0;
  for (auto h : a.support_histogram) total += h;
  EXPECT_EQ(total, cfg.replicas);
  EXPECT_THROW(run_campaign(cfg, 1, {0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), Error);
}

TEST(Harness, JsonRoundTrip) {
  const auto res = run_campaign(small_config(), 1);
  const Json j = campaign_to_json(res);
  const auto back = campaign_from_json(Json::parse(j.dump()));
  EXPECT_TRUE(back == res);
  EXPECT_EQ(j.at("code_version"), kCodeVersion);
}

TEST(Harness, ConfigJsonAndHash) {
  const auto cfg = small_config();
  const auto back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  auto other = cfg;
  other.base_seed += 1;
  EXPECT_NE(config_hash(other), config_hash(cfg));
  EXPECT_THROW(config_from_json(Json{{"model", {{"n", 3}, {"alpha", 2.0}}}, {"replicas", 0}}), Error);
  EXPECT_THROW(config_from_json(Json{{"replicas", 3}}), Error);
}

TEST(Harness, CsvHasOneRowPerReplica) {
  const auto res = run_campaign(small_config(), 1);
  std::ostringstream os;
  write_campaign_csv(os, res);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
  EXPECT_EQ(text.rfind("replica,seed,support_size,support,occ_1", 0), 0u);
}

TEST(Harness, ConvergenceDiagnosticsFindsEdgeCenter) {
  const auto p = ModelParameters::complete(3, 3.0);
  const auto rec = simulate(p, 0, 200000, 5);
  const auto eqs = classify_all(p, enumerate_all(3, 3.0));
  const auto diag = convergence_diagnostics(rec, eqs);
  ASSERT_GE(diag.target, 0);
  EXPECT_EQ(eqs[static_cast<std::size_t>(diag.target)].support.size(), 2);
}

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::exp(u(rng)) * (i % 2 ? 1 : -1);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(1.6), "1.6");
  EXPECT_EQ(format_double(0.0), "0");
}
