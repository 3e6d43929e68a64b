#include <gtest/gtest.h>

#include <numbers>

#include "rlff/eval.hpp"
#include "rlff/synthetic_scene.hpp"

namespace {

rlff::RlffRecord perfect(const rlff::SceneFeature& f, double eps) {
  rlff::RlffRecord r;
  r.id = f.id;
  r.rlff = rlff::truth_rlff(f.model);
  r.feature_class = rlff::classify(r.rlff, eps);
  return r;
}

}  // namespace

TEST(TruthRlff, OrderingAndWrapping) {
  const rlff::AstigmaticLensModel m{0, 0, 1.5, 0.5, 0.2, 0.2 + std::numbers::pi / 2 + std::numbers::pi};
  const auto t = rlff::truth_rlff(m);
  EXPECT_EQ(t.pz1, 0.5);
  EXPECT_EQ(t.pz2, 1.5);
  EXPECT_NEAR(t.theta1, 0.2 + std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(t.theta2, 0.2, 1e-12);
}

TEST(Evaluate, PerfectRecoveryHasZeroErrors) {
  const auto scene = rlff::random_scene(20, 5);
  std::vector<rlff::RlffRecord> est;
  for (const auto& f : scene) est.push_back(perfect(f, 0.05));
  const auto r = rlff::evaluate(est, scene, 0.05);
  EXPECT_EQ(r.matched, 20u);
  EXPECT_EQ(r.rmse.px, 0.0);
  EXPECT_EQ(r.rmse.pz1, 0.0);
  EXPECT_EQ(r.rmse.pz2, 0.0);
  EXPECT_EQ(r.rmse.theta1, 0.0);
  EXPECT_EQ(r.angle_samples, 10u);
}

TEST(Evaluate, ConfusionMatchesConstruction) {
  rlff::RandomSceneOptions opts;
  opts.refracted_fraction = 0.25;
  const auto scene = rlff::random_scene(40, 6, opts);
  std::vector<rlff::RlffRecord> est;
  for (const auto& f : scene) est.push_back(perfect(f, 0.05));
  // flip two refracted and three Lambertian labels
  for (std::size_t n : {0u, 1u}) est[n].feature_class = rlff::FeatureClass::kLambertian;
  for (std::size_t n : {20u, 21u, 22u}) est[n].feature_class = rlff::FeatureClass::kRefracted;
  const auto r = rlff::evaluate(est, scene, 0.05);
  EXPECT_EQ(r.confusion.true_refracted, 8u);
  EXPECT_EQ(r.confusion.false_lambertian, 2u);
  EXPECT_EQ(r.confusion.false_refracted, 3u);
  EXPECT_EQ(r.confusion.true_lambertian, 27u);
  EXPECT_DOUBLE_EQ(r.confusion.precision(), 8.0 / 11.0);
  EXPECT_DOUBLE_EQ(r.confusion.recall(), 0.8);
}

TEST(Evaluate, MissingIdsListedNotFatal) {
  const auto scene = rlff::random_scene(3, 7);
  std::vector<rlff::RlffRecord> est{perfect(scene[0], 0.05)};
  est.push_back(perfect(scene[1], 0.05));
  est.back().id = 99;
  const auto r = rlff::evaluate(est, scene, 0.05);
  EXPECT_EQ(r.matched, 1u);
  EXPECT_EQ(r.unmatched_estimates, std::vector<std::int64_t>{99});
  EXPECT_EQ(r.unmatched_truth, (std::vector<std::int64_t>{1, 2}));
  const auto j = rlff::report_to_json(r);
  EXPECT_EQ(j["unmatched"]["truth"].size(), 2u);
}

TEST(Evaluate, RmseValue) {
  const auto scene = rlff::random_scene(2, 8);
  std::vector<rlff::RlffRecord> est{perfect(scene[0], 0.05), perfect(scene[1], 0.05)};
  est[0].rlff.px += 0.003;
  est[1].rlff.px -= 0.004;
  EXPECT_NEAR(rlff::evaluate(est, scene, 0.05).rmse.px, std::sqrt((9e-6 + 16e-6) / 2), 1e-15);
}
