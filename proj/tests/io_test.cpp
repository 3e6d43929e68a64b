#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rlff/errors.hpp"
#include "rlff/io.hpp"
#include "rlff/synthetic_scene.hpp"

namespace fs = std::filesystem;

TEST(Intrinsics, JsonRoundTrip) {
  const auto intr = rlff::LFIntrinsics::default_camera();
  const auto back = rlff::intrinsics_from_json(nlohmann::json::parse(rlff::intrinsics_to_json(intr).dump()));
  EXPECT_EQ(back.matrix(), intr.matrix());
  EXPECT_EQ(back.dims(), intr.dims());
  EXPECT_EQ(back.plane_separation(), intr.plane_separation());
}

TEST(Intrinsics, BadJson) {
  EXPECT_THROW(rlff::intrinsics_from_json(nlohmann::json::parse(R"({"M":[1,2],"D":0.1})")), rlff::FormatError);
  auto j = rlff::intrinsics_to_json(rlff::LFIntrinsics::default_camera());
  j["D"] = -1.0;
  EXPECT_THROW(rlff::intrinsics_from_json(nlohmann::json::parse(j.dump())), rlff::ConfigError);
}

TEST(Scene, JsonRoundTripAndDefaults) {
  const auto scene = rlff::random_scene(4, 1);
  const auto back = rlff::scene_from_json(nlohmann::json::parse(rlff::scene_to_json(scene).dump()));
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[2].model.theta1, scene[2].model.theta1);
  const auto j = nlohmann::json::parse(R"([{"Px":0,"Py":0,"Pz1":1,"Pz2":1,"theta1":0,"theta2":1.5}])");
  EXPECT_EQ(rlff::scene_from_json(j)[0].id, 0);
  const auto dup = nlohmann::json::parse(
      R"([{"id":1,"Px":0,"Py":0,"Pz1":1,"Pz2":1,"theta1":0,"theta2":0},{"id":1,"Px":0,"Py":0,"Pz1":1,"Pz2":1,"theta1":0,"theta2":0}])");
  EXPECT_THROW(rlff::scene_from_json(dup), rlff::FormatError);
  const auto bad = nlohmann::json::parse(R"([{"Px":0,"Py":0,"Pz1":-1,"Pz2":1,"theta1":0,"theta2":0}])");
  EXPECT_THROW(rlff::scene_from_json(bad), rlff::ConfigError);
}

TEST(ObservationCsv, RoundTripIsExact) {
  const auto intr = rlff::LFIntrinsics::default_camera();
  const auto sets = rlff::synth_scene(rlff::random_scene(3, 2), intr, 2e-5, 1);
  const std::string text = rlff::format_observation_csv(sets);
  std::istringstream in(text);
  const auto back = rlff::parse_observation_csv(in, "obs.csv", &intr);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(back[n].rays, sets[n].rays);
    for (std::size_t q = 0; q < back[n].size(); ++q) {
      EXPECT_NEAR(back[n].samples[q].k, sets[n].samples[q].k, 1e-9);
    }
  }
}

TEST(ObservationCsv, RowCount) {
  const auto intr = rlff::LFIntrinsics::default_camera();
  const auto sets = rlff::synth_scene(rlff::random_scene(50, 2), intr, 0.0, 1);
  const std::string text = rlff::format_observation_csv(sets);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 50 * 169);
}

TEST(ObservationCsv, DiscreteRows) {
  const auto intr = rlff::LFIntrinsics::identity({3, 3, 50, 50});
  std::istringstream in("4,1,2,10.5,20\n4,0,0,1,1\n");
  const auto sets = rlff::parse_observation_csv(in, "d.csv", &intr);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].id, 4);
  EXPECT_EQ(sets[0].rays[0], (rlff::Ray4D{1, 2, 10.5, 20}));
  std::istringstream no_intr("4,1,2,10.5,20\n");
  EXPECT_THROW(rlff::parse_observation_csv(no_intr, "d.csv", nullptr), rlff::ParseError);
}

TEST(ObservationCsv, ErrorsCarryLineNumbers) {
  const auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      rlff::parse_observation_csv(in, "x.csv", nullptr);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const rlff::ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line("feature_id,i,j,s,t,u,v\n0,0,0,0,0,0,0\n0,0,1,0,0,zz,0\n", 3);
  expect_line("0,0,0,0,0,0,0\n0,0,0,1,1,1,1\n", 2);
  expect_line("0,0,0,0,0,0,0\n0,1,0,0,0,0\n", 2);
  expect_line("0,0,0,0,0,nan,0\n", 1);
}

TEST(ObservationCsv, EmptyInput) {
  std::istringstream in("");
  EXPECT_TRUE(rlff::parse_observation_csv(in, "e.csv", nullptr).empty());
  std::istringstream header("feature_id,i,j,s,t,u,v\n");
  EXPECT_TRUE(rlff::parse_observation_csv(header, "e.csv", nullptr).empty());
}

TEST(RlffRecord, JsonRoundTrip) {
  rlff::RlffRecord r;
  r.id = 12;
  r.rlff = {0.01, -0.02, 0.4, 0.9, 0.3, 1.8707963267948966};
  r.diagnostics.rms_residual = 2e-5;
  r.diagnostics.asymmetry = 1e-4;
  r.diagnostics.r_squared = 0.01;
  r.diagnostics.n_views = 169;
  r.feature_class = rlff::FeatureClass::kRefracted;
  r.descriptor = {0.6f, 0.8f};
  r.scale = 3.0;
  const auto line = rlff::json_line(rlff::record_to_json(r));
  EXPECT_EQ(line.back(), '\n');
  EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
  EXPECT_EQ(line.rfind("{\"id\":12,\"Px\":", 0), 0u);
  std::istringstream in(line + "\n" + line);
  const auto back = rlff::parse_rlff_jsonl(in, "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].rlff.pz2, 0.9);
  EXPECT_EQ(back[0].feature_class, rlff::FeatureClass::kRefracted);
  EXPECT_EQ(back[0].descriptor, r.descriptor);
  EXPECT_EQ(back[0].scale, 3.0);
  EXPECT_EQ(back[0].diagnostics.n_views, 169);
}

TEST(RlffRecord, BadLineReportsLine) {
  std::istringstream in("{\"id\":1}\n");
  EXPECT_THROW(rlff::parse_rlff_jsonl(in, "r.jsonl"), rlff::ParseError);
  std::istringstream garbage("\n{not json\n");
  try {
    rlff::parse_rlff_jsonl(garbage, "r.jsonl");
    FAIL();
  } catch (const rlff::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(RlffRecord, CharacteristicPointsHonourRecordedClass) {
  rlff::RlffRecord r;
  r.rlff = {0.0, 0.0, 1.0, 1.2, 0, 0};
  r.feature_class = rlff::FeatureClass::kLambertian;
  auto cp = rlff::to_characteristic_points(r);
  EXPECT_TRUE(cp.single());
  EXPECT_DOUBLE_EQ(cp.c1.z, 1.1);
  r.feature_class = rlff::FeatureClass::kRefracted;
  cp = rlff::to_characteristic_points(r);
  EXPECT_EQ(cp.c1.z, 1.0);
  EXPECT_EQ(cp.c2.z, 1.2);
}

TEST(AtomicWrite, CreatesParentsAndReplaces) {
  const fs::path dir = fs::temp_directory_path() / "rlff_test_atomic";
  fs::remove_all(dir);
  rlff::write_file_atomic(dir / "a" / "b.txt", "one");
  rlff::write_file_atomic(dir / "a" / "b.txt", "two");
  EXPECT_EQ(rlff::read_file(dir / "a" / "b.txt"), "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "a")) ++files;
  EXPECT_EQ(files, 1u);
}
