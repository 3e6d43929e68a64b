#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "rlff/errors.hpp"
#include "rlff/feature_pipeline.hpp"
#include "rlff/io.hpp"
#include "rlff/sfm_export.hpp"
#include "rlff/synthetic_scene.hpp"

namespace fs = std::filesystem;
using rlff::CharacteristicPoints;
using rlff::FeatureClass;
using rlff::LFIntrinsics;
using rlff::PointTag;

namespace {

const LFIntrinsics& camera() {
  static const LFIntrinsics intr = LFIntrinsics::default_camera();
  return intr;
}

fs::path golden(const std::string& name) { return fs::path(RLFF_FIXTURES) / "golden" / name; }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rlff_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CharacteristicPoints lambertian_point(rlff::Point3D p, std::vector<float> d = {1, 0, 0, 0}) {
  CharacteristicPoints cp;
  cp.feature_class = FeatureClass::kLambertian;
  cp.c1 = cp.c2 = p;
  cp.descriptor = std::move(d);
  cp.scale = 2.0;
  return cp;
}

CharacteristicPoints refracted_point(rlff::Point3D c1, rlff::Point3D c2, std::vector<float> d = {0, 0.6f, 0.8f, 0}) {
  CharacteristicPoints cp;
  cp.feature_class = FeatureClass::kRefracted;
  cp.c1 = c1;
  cp.c2 = c2;
  cp.descriptor = std::move(d);
  cp.scale = 2.0;
  return cp;
}

// Pixel -> ray at a view positioned at (s,t), using only the intrinsic matrix.
Eigen::Vector3d pixel_ray_direction(const LFIntrinsics& intr, double s, double t, double k, double l) {
  const auto& m = intr.matrix();
  // solve the s,t rows for the fractional view index i,j
  Eigen::Matrix2d a;
  a << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
  const Eigen::Vector2d rhs(s - m(0, 2) * k - m(0, 3) * l - m(0, 4), t - m(1, 2) * k - m(1, 3) * l - m(1, 4));
  const Eigen::Vector2d ij = a.inverse() * rhs;
  const double u = m(2, 0) * ij(0) + m(2, 1) * ij(1) + m(2, 2) * k + m(2, 3) * l + m(2, 4);
  const double v = m(3, 0) * ij(0) + m(3, 1) * ij(1) + m(3, 2) * k + m(3, 3) * l + m(3, 4);
  return {u, v, intr.plane_separation()};
}

}  // namespace

TEST(ProjectMono, OnAxisPointAtViewCentre) {
  const auto f = rlff::project_mono(lambertian_point({0, 0, 1}), camera());
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NEAR(f[0].x, 255.5, 1e-9);
  EXPECT_NEAR(f[0].y, 255.5, 1e-9);
  EXPECT_EQ(f[0].tag, PointTag::kSingle);
}

TEST(ProjectMono, RefractedOffsetsFollowPointPlaneProjection) {
  const auto cp = refracted_point({0.01, 0, 0.5}, {0.01, 0, 1.0});
  const auto f = rlff::project_mono(cp, camera());
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].tag, PointTag::kFront);
  EXPECT_EQ(f[1].tag, PointTag::kBack);
  const double pitch = 2e-4;
  // u = (-D/Pz)(0 - Px) at the central view
  const double u1 = -0.1 / 0.5 * (0.0 - 0.01), u2 = -0.1 / 1.0 * (0.0 - 0.01);
  EXPECT_NEAR(f[0].x - f[1].x, (u1 - u2) / pitch, 1e-9);
  EXPECT_NEAR(f[0].x, 255.5 + u1 / pitch, 1e-9);
}

TEST(ProjectMono, SameLateralPositionCoincidesFromCentre) {
  const auto a = rlff::project_mono(lambertian_point({0, 0, 0.4}), camera());
  const auto b = rlff::project_mono(lambertian_point({0, 0, 1.7}), camera());
  EXPECT_NEAR(a[0].x, b[0].x, 1e-12);
  EXPECT_NEAR(a[0].y, b[0].y, 1e-12);
}

TEST(ProjectMono, BehindCameraSkippedWithWarning) {
  std::vector<std::string> warnings;
  const auto f = rlff::project_mono(refracted_point({0, 0, -0.5}, {0, 0, 1.0}), camera(), &warnings);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].tag, PointTag::kBack);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ProjectStereo, DisparityAtSeparationDepthEqualsBaseline) {
  const double b = 0.012;
  const auto sf = rlff::project_stereo(lambertian_point({0.003, 0.001, 0.1}), camera(), b);
  EXPECT_NEAR(std::abs(sf.left[0].x - sf.right[0].x) * camera().pixel_pitch(), b, 1e-15);
  EXPECT_NEAR(sf.left[0].y, sf.right[0].y, 1e-12);
}

TEST(ProjectStereo, DisparityInverselyProportionalToDepth) {
  const auto sf = rlff::project_stereo(refracted_point({0.0, 0.0, 0.5}, {0.0, 0.0, 1.0}), camera(), 0.012);
  const double d1 = sf.left[0].x - sf.right[0].x;
  const double d2 = sf.left[1].x - sf.right[1].x;
  EXPECT_NEAR(d1 / d2, 2.0, 1e-12);
}

TEST(ProjectStereo, TriangulationRecoversPoints) {
  const double b = rlff::default_stereo_baseline(camera());
  EXPECT_NEAR(b, 0.012, 1e-15);
  const auto cp = refracted_point({0.013, -0.027, 0.37}, {0.013, -0.027, 1.61});
  const auto sf = rlff::project_stereo(cp, camera(), b);
  const double sl = -b / 2, sr = b / 2;
  for (std::size_t n = 0; n < 2; ++n) {
    const Eigen::Vector3d dl = pixel_ray_direction(camera(), sl, 0.0, sf.left[n].x, sf.left[n].y);
    const Eigen::Vector3d dr = pixel_ray_direction(camera(), sr, 0.0, sf.right[n].x, sf.right[n].y);
    const Eigen::Vector3d p = oracle::triangulate({sl, 0, 0}, dl, {sr, 0, 0}, dr);
    const auto& want = n == 0 ? cp.c1 : cp.c2;
    EXPECT_NEAR(p.x(), want.x, 1e-10);
    EXPECT_NEAR(p.y(), want.y, 1e-10);
    EXPECT_NEAR(p.z(), want.z, 1e-10);
  }
}

TEST(ProjectStereo, NonPositiveBaselineRejected) {
  EXPECT_THROW(rlff::project_stereo(lambertian_point({0, 0, 1}), camera(), 0.0), rlff::ConfigError);
}

TEST(Descriptors, IdenticalStrategy) {
  const auto cp = refracted_point({0, 0, 0.5}, {0, 0, 1});
  const auto d = rlff::assign_descriptors(cp, rlff::DescriptorStrategy::kIdentical);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0], d[1]);
  EXPECT_EQ(d[0], cp.descriptor);
}

TEST(Descriptors, LambertianGetsOneDescriptor) {
  for (auto s : {rlff::DescriptorStrategy::kIdentical, rlff::DescriptorStrategy::kBias,
                 rlff::DescriptorStrategy::kExternalMatch}) {
    EXPECT_EQ(rlff::assign_descriptors(lambertian_point({0, 0, 1}), s).size(), 1u);
  }
}

TEST(Descriptors, BiasSeparatesPairBeyondRatioTest) {
  // front/back of several features: the back descriptor must not be the
  // nearest neighbour of its own front under a 0.8 ratio test, nor vice versa
  std::vector<std::vector<float>> fronts;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) fronts.push_back(rlff::random_descriptor(seed, 128));
  for (const auto& front : fronts) {
    const auto back = rlff::bias_descriptor(front, 2.0);
    double n2 = 0.0;
    for (float x : back) n2 += x * x;
    EXPECT_NEAR(n2, 1.0, 1e-6);
    const double pair = rlff::descriptor_distance(front, back);
    // with front and back as candidates in another view, a perturbed copy of
    // the front descriptor picks the front and clears the ratio test
    auto probe = front;
    for (std::size_t n = 0; n < probe.size(); ++n) probe[n] += (n % 3 == 0 ? 0.01f : -0.005f);
    rlff::normalize_descriptor(probe, false);
    EXPECT_LT(rlff::descriptor_distance(probe, front), 0.8 * rlff::descriptor_distance(probe, back));
    EXPECT_GT(pair, 0.3);
  }
}

TEST(Descriptors, UnknownStrategyName) {
  EXPECT_THROW(rlff::parse_descriptor_strategy("random"), rlff::ConfigError);
  EXPECT_EQ(rlff::parse_descriptor_strategy("external-match"), rlff::DescriptorStrategy::kExternalMatch);
  EXPECT_THROW(rlff::parse_export_mode("triple"), rlff::ConfigError);
}

TEST(FeatureFile, EmptyFileGolden) {
  EXPECT_EQ(rlff::format_feature_file({}, 128), slurp(golden("empty_128.txt")));
}

TEST(FeatureFile, SingleFeatureGolden) {
  rlff::Feature2D f;
  f.x = 100.5;
  f.y = 200.25;
  f.scale = 2.0;
  f.orientation = 0.5;
  f.descriptor = {0.5f, 0.5f, 0.5f, 0.5f};
  const std::vector<rlff::Feature2D> fs{f};
  EXPECT_EQ(rlff::format_feature_file(fs, 4), slurp(golden("single_feature.txt")));
}

TEST(FeatureFile, MixedLengthsRejected) {
  rlff::Feature2D a, b;
  a.descriptor = {1, 0};
  b.descriptor = {1};
  const std::vector<rlff::Feature2D> fs{a, b};
  EXPECT_THROW(rlff::format_feature_file(fs, 2), rlff::FormatError);
}

TEST(FeatureFile, RoundTripToSixDecimals) {
  std::vector<rlff::Feature2D> fs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 512);
  for (int n = 0; n < 30; ++n) {
    rlff::Feature2D f;
    f.x = u(rng);
    f.y = u(rng);
    f.scale = 1.0 + u(rng) / 100;
    f.orientation = u(rng) / 100 - 2.5;
    f.descriptor = rlff::random_descriptor(n, 16);
    fs.push_back(f);
  }
  const auto dir = scratch_dir("feature_roundtrip");
  rlff::write_feature_file(fs, dir / "f.txt", 16);
  std::ifstream in(dir / "f.txt");
  const auto back = rlff::parse_feature_file(in, "f.txt");
  ASSERT_EQ(back.size(), fs.size());
  const auto six = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (std::size_t n = 0; n < fs.size(); ++n) {
    EXPECT_EQ(six(back[n].x), six(fs[n].x));
    EXPECT_EQ(six(back[n].y), six(fs[n].y));
    EXPECT_EQ(six(back[n].scale), six(fs[n].scale));
    EXPECT_EQ(six(back[n].orientation), six(fs[n].orientation));
    EXPECT_NEAR(back[n].x, fs[n].x, 5e-7);
    // descriptors are floats: the decimal survives, the float may move by an ulp
    for (std::size_t d = 0; d < 16; ++d) EXPECT_EQ(six(back[n].descriptor[d]), six(fs[n].descriptor[d]));
  }
  // and the parsed values print back to the same text
  EXPECT_EQ(rlff::format_feature_file(back, 16), slurp(dir / "f.txt"));
}

TEST(ExportFrame, MonoGolden) {
  const auto dir = scratch_dir("export_mono");
  auto lam = lambertian_point({0.01, -0.02, 0.5});
  lam.id = 7;
  auto ref = refracted_point({0.01, -0.02, 0.4}, {0.01, -0.02, 0.8});
  ref.id = 9;
  const std::vector<CharacteristicPoints> pts{lam, ref};
  rlff::ExportConfig cfg;
  cfg.descriptor_length = 4;
  const auto res = rlff::export_frame(pts, camera(), cfg, dir, "f0");
  EXPECT_EQ(slurp(dir / "mono" / "f0.txt"), slurp(golden("mono_frame.txt")));
  EXPECT_EQ(res.stats.lambertian, 1u);
  EXPECT_EQ(res.stats.refracted, 1u);
  EXPECT_EQ(res.stats.emitted, 3u);
  EXPECT_DOUBLE_EQ(res.stats.normalized_feature_count, 1.5);

  const auto index = nlohmann::json::parse(slurp(dir / "mono" / "f0.json"));
  EXPECT_EQ(index["features"].size(), 2u);
  EXPECT_EQ(index["features"][1]["id"], 9);
  EXPECT_EQ(index["features"][1]["rows"][0]["row"], 1);
  EXPECT_EQ(index["features"][1]["rows"][0]["tag"], "front");
  EXPECT_EQ(index["features"][1]["rows"][1]["tag"], "back");
  EXPECT_EQ(index["features"][0]["rows"][0]["tag"], "single");
}

TEST(ExportFrame, StereoGolden) {
  const auto dir = scratch_dir("export_stereo");
  const std::vector<CharacteristicPoints> pts{lambertian_point({0.01, -0.02, 0.5}),
                                              refracted_point({0.01, -0.02, 0.4}, {0.01, -0.02, 0.8})};
  rlff::ExportConfig cfg;
  cfg.mode = rlff::ExportMode::kStereo;
  cfg.descriptor_length = 4;
  rlff::export_frame(pts, camera(), cfg, dir, "f0");
  EXPECT_EQ(slurp(dir / "stereo" / "f0_L.txt"), slurp(golden("stereo_frame_L.txt")));
  EXPECT_EQ(slurp(dir / "stereo" / "f0_R.txt"), slurp(golden("stereo_frame_R.txt")));
  const auto index = nlohmann::json::parse(slurp(dir / "stereo" / "f0.json"));
  EXPECT_DOUBLE_EQ(index["baseline"].get<double>(), 0.012);
}

TEST(ExportFrame, BiasStrategyWritesDistinctBackDescriptor) {
  const auto dir = scratch_dir("export_bias");
  const std::vector<CharacteristicPoints> pts{refracted_point({0, 0, 0.4}, {0, 0, 0.8})};
  rlff::ExportConfig cfg;
  cfg.descriptor_length = 4;
  cfg.strategy = rlff::DescriptorStrategy::kBias;
  rlff::export_frame(pts, camera(), cfg, dir, "f");
  std::ifstream in(dir / "mono" / "f.txt");
  const auto back = rlff::parse_feature_file(in, "f.txt");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_NE(back[0].descriptor, back[1].descriptor);
}
