#include "lagree/model.hpp"

#include <vector>

#include "gtest/gtest.h"

namespace lagree {
namespace {

ExperimentConfig delta_config(int n, int f) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.f = f;
  cfg.algorithm = Algorithm::delta;
  for (int i = 0; i < n; ++i) cfg.inputs.push_back({std::string(1, 'a' + i)});
  return cfg;
}

bool has_code(const ValidationResult& r, const std::string& code) {
  for (const auto& v : r.violations) {
    if (v.code == code) return true;
  }
  return false;
}

TEST(ValidateConfig, DeltaMajorityBound) {
  EXPECT_TRUE(validate_config(delta_config(3, 1)).ok());
  auto r = validate_config(delta_config(4, 2));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_code(r, "ASYNC_F_TOO_LARGE"));
}

TEST(ValidateConfig, SyncFailureBound) {
  ExperimentConfig cfg = delta_config(3, 3);
  cfg.algorithm = Algorithm::beta;
  auto r = validate_config(cfg);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_code(r, "SYNC_F_TOO_LARGE"));
  cfg.f = 2;
  EXPECT_TRUE(validate_config(cfg).ok());
}

TEST(ValidateConfig, EmptyInput) {
  ExperimentConfig cfg = delta_config(3, 1);
  cfg.inputs[1] = LatticeValue{};
  auto r = validate_config(cfg);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_code(r, "EMPTY_INPUT"));
}

TEST(ValidateConfig, AlphaHeightHint) {
  ExperimentConfig cfg = delta_config(3, 1);
  cfg.algorithm = Algorithm::alpha;
  auto r = validate_config(cfg);
  EXPECT_TRUE(has_code(r, "H_MISSING"));
  cfg.height_hint = 2;  // join of three singletons has height 3
  EXPECT_TRUE(has_code(validate_config(cfg), "H_TOO_SMALL"));
  cfg.height_hint = 3;
  EXPECT_TRUE(validate_config(cfg).ok());
  cfg.algorithm = Algorithm::delta;
  EXPECT_TRUE(has_code(validate_config(cfg), "H_NOT_APPLICABLE"));
}

TEST(ValidateConfig, CrashRules) {
  ExperimentConfig cfg = delta_config(5, 2);
  cfg.crashes.push_back({3, 0, {}});
  cfg.crashes.push_back({3, 1, {}});
  auto r = validate_config(cfg);
  EXPECT_TRUE(has_code(r, "DUPLICATE_CRASH_VICTIM"));

  cfg.crashes = {{1, 0, {}}, {2, 0, {}}, {3, 0, {}}};
  EXPECT_TRUE(has_code(validate_config(cfg), "TOO_MANY_CRASHES"));

  cfg.crashes = {{3, 0, {1}}};
  EXPECT_TRUE(has_code(validate_config(cfg), "DELIVER_TO_ASYNC"));

  cfg.algorithm = Algorithm::beta;
  cfg.crashes = {{3, 0, {1}}};
  EXPECT_TRUE(has_code(validate_config(cfg), "BAD_CRASH_TIME"));
  cfg.crashes = {{3, 1, {1}}};
  EXPECT_TRUE(validate_config(cfg).ok());
}

TEST(ValidateConfig, GlaStreams) {
  ExperimentConfig cfg;
  cfg.n = 3;
  cfg.f = 1;
  cfg.algorithm = Algorithm::gla;
  auto r = validate_config(cfg);
  EXPECT_TRUE(has_code(r, "STREAM_COUNT"));
  cfg.client_streams.assign(3, {});
  cfg.client_streams[0].push_back({0, {"a"}});
  EXPECT_TRUE(validate_config(cfg).ok());
  cfg.client_streams[2].push_back({-1, {"b"}});
  EXPECT_TRUE(has_code(validate_config(cfg), "BAD_TICK"));
}

TEST(EncodeTrace, Shape) {
  EXPECT_EQ(encode_trace({}), "");
  Trace one{{3, EventKind::decide, 2, {{"value", LatticeValue{"a"}}}}};
  std::string bytes = encode_trace(one);
  EXPECT_NE(bytes.find("\"kind\":\"decide\""), std::string::npos);
  EXPECT_EQ(bytes.back(), '\n');
  EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '\n'), 1);
}

TEST(EncodeTrace, DeterministicBytes) {
  Trace t;
  for (int i = 0; i < 5; ++i) {
    t.push_back({i, EventKind::send, 1, {{"to", i}, {"body", {{"v", i}}}}});
  }
  EXPECT_EQ(encode_trace(t), encode_trace(t));
}

TEST(ConfigJson, RoundTrip) {
  ExperimentConfig cfg = delta_config(3, 1);
  cfg.crashes.push_back({2, 4, {}});
  cfg.seed = 99;
  cfg.delay_model.kind = DelayModel::Kind::seeded_random;
  cfg.delay_model.max_delay = 5;
  cfg.delay_model.seed = 7;
  nlohmann::json j = cfg;
  auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  EXPECT_EQ(back.n, 3);
  EXPECT_EQ(back.inputs[2], LatticeValue{"c"});
  EXPECT_EQ(back.delay_model.max_delay, 5);
}

TEST(ReportJson, RoundsKeyDependsOnModel) {
  RunReport r;
  r.algorithm = Algorithm::alpha;
  r.n = 1;
  r.f = 0;
  r.per_process[1] = {LatticeValue{"a"}, 2, false};
  nlohmann::json sync_json = r;
  EXPECT_TRUE(sync_json["perProcess"]["1"].contains("roundsUsed"));
  r.algorithm = Algorithm::delta;
  nlohmann::json async_json = r;
  EXPECT_TRUE(async_json["perProcess"]["1"].contains("roundTripsUsed"));
}

}  // namespace
}  // namespace lagree
