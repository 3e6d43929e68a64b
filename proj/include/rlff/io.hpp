#pragma once

// File formats: intrinsics and scene JSON, observation CSV, RLFF JSON lines.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/estimator.hpp"
#include "rlff/lf_geometry.hpp"

namespace rlff {

long parse_int(std::string_view token, const std::string& source, std::size_t line);
double parse_double(std::string_view token, const std::string& source, std::size_t line);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// {"M": [25 numbers, row-major], "D": .., "Ni": .., "Nj": .., "Nk": .., "Nl": ..}
LFIntrinsics intrinsics_from_json(const nlohmann::json& j);
nlohmann::ordered_json intrinsics_to_json(const LFIntrinsics& intr);
LFIntrinsics load_intrinsics(const std::filesystem::path& path);

/// Array of {Px, Py, Pz1, Pz2, theta1, theta2[, id]}; id defaults to the array index.
std::vector<SceneFeature> scene_from_json(const nlohmann::json& j);
nlohmann::ordered_json scene_to_json(std::span<const SceneFeature> scene);
std::vector<SceneFeature> load_scene(const std::filesystem::path& path);

/// Header `feature_id,i,j,s,t,u,v` then one row per ray, grouped by feature.
std::string format_observation_csv(std::span<const ObservationSet> sets);

/// Accepts continuous rows `feature_id,i,j,s,t,u,v` or discrete rows
/// `feature_id,i,j,k,l`; the latter need intrinsics. An optional header line is
/// skipped. Output ordered by feature id. Throws ParseError with the line number.
std::vector<ObservationSet> parse_observation_csv(std::istream& in, const std::string& source,
                                                  const LFIntrinsics* intr);

/// One line of `fit`/`pipeline` output.
struct RlffRecord {
  std::int64_t id = 0;
  Rlff rlff;
  FitDiagnostics diagnostics;
  FeatureClass feature_class = FeatureClass::kLambertian;
  std::vector<float> descriptor;  // empty when the source carried none
  double scale = 1.0;
  double orientation = 0.0;
};

RlffRecord to_record(const ExtractedFeature& f);

/// Characteristic points of a stored record, honouring its recorded class.
CharacteristicPoints to_characteristic_points(const RlffRecord& r);
nlohmann::ordered_json record_to_json(const RlffRecord& r);
RlffRecord record_from_json(const nlohmann::json& j);
std::vector<RlffRecord> parse_rlff_jsonl(std::istream& in, const std::string& source);

/// Compact single-line JSON, newline terminated.
std::string json_line(const nlohmann::ordered_json& j);

}  // namespace rlff
