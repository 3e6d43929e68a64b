#include <gtest/gtest.h>

#include <cmath>

#include "rlff/config.hpp"
#include "rlff/errors.hpp"

TEST(RunConfig, DefaultsMatchDocumentedValues) {
  const rlff::RunConfig cfg;
  EXPECT_EQ(cfg.pipeline.estimator.min_views, 5);
  EXPECT_EQ(cfg.pipeline.match.min_views, 5);
  EXPECT_DOUBLE_EQ(cfg.pipeline.estimator.r2_max, 0.65);
  EXPECT_DOUBLE_EQ(cfg.pipeline.match.ratio, 0.8);
  EXPECT_TRUE(std::isinf(cfg.pipeline.match.abs_threshold));
  EXPECT_DOUBLE_EQ(cfg.pipeline.estimator.lambertian_eps, 0.05);
  EXPECT_EQ(cfg.exporter.mode, rlff::ExportMode::kMono);
  EXPECT_EQ(cfg.exporter.strategy, rlff::DescriptorStrategy::kIdentical);
  EXPECT_FALSE(cfg.pipeline.estimator.symmetric_fit);
}

TEST(RunConfig, OverridesAndRoundTrip) {
  const auto j = nlohmann::json::parse(R"({"min_views":7,"ratio":0.7,"abs_threshold":0.5,"root_sift":true,
    "r2_max":0.5,"max_residual":1e-4,"max_asymmetry":2e-3,"lambertian_eps":0.1,"trim_worst_view":true,
    "symmetric_fit":true,"mode":"stereo","stereo_baseline":0.02,"strategy":"bias","bias_scale":3,
    "descriptor_length":64})");
  const auto cfg = rlff::run_config_from_json(j);
  EXPECT_EQ(cfg.pipeline.match.min_views, 7);
  EXPECT_EQ(cfg.pipeline.estimator.min_views, 7);
  EXPECT_DOUBLE_EQ(cfg.pipeline.match.abs_threshold, 0.5);
  EXPECT_TRUE(cfg.pipeline.ingest.root_sift);
  EXPECT_EQ(cfg.exporter.strategy, rlff::DescriptorStrategy::kBias);
  EXPECT_EQ(cfg.exporter.descriptor_length, 64);
  const auto again = rlff::run_config_from_json(nlohmann::json::parse(rlff::run_config_to_json(cfg).dump()));
  EXPECT_EQ(rlff::run_config_to_json(again).dump(), rlff::run_config_to_json(cfg).dump());
}

TEST(RunConfig, NullThresholdDisables) {
  const auto cfg = rlff::run_config_from_json(nlohmann::json::parse(R"({"abs_threshold":null})"));
  EXPECT_TRUE(std::isinf(cfg.pipeline.match.abs_threshold));
  EXPECT_TRUE(rlff::run_config_to_json(cfg)["abs_threshold"].is_null());
}

TEST(RunConfig, Rejections) {
  EXPECT_THROW(rlff::run_config_from_json(nlohmann::json::parse(R"({"ratios":0.7})")), rlff::ConfigError);
  EXPECT_THROW(rlff::run_config_from_json(nlohmann::json::parse(R"({"strategy":"nope"})")), rlff::ConfigError);
  EXPECT_THROW(rlff::run_config_from_json(nlohmann::json::parse(R"({"ratio":1.5})")), rlff::ConfigError);
  EXPECT_THROW(rlff::run_config_from_json(nlohmann::json::parse(R"({"stereo_baseline":-1})")), rlff::ConfigError);
  EXPECT_THROW(rlff::run_config_from_json(nlohmann::json::parse(R"([1,2])")), rlff::ConfigError);
}
