#include "rlff/sfm_export.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "rlff/io.hpp"

namespace rlff {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

struct Emitted {
  Point3D point;
  PointTag tag;
};

std::vector<Emitted> emitted_points(const CharacteristicPoints& cp, std::vector<std::string>* warnings) {
  std::vector<Emitted> pts;
  if (cp.single()) {
    pts.push_back({cp.c1, PointTag::kSingle});
  } else {
    pts.push_back({cp.c1, PointTag::kFront});
    pts.push_back({cp.c2, PointTag::kBack});
  }
  std::vector<Emitted> kept;
  for (const Emitted& e : pts) {
    if (e.point.z > 0.0) {
      kept.push_back(e);
    } else if (warnings != nullptr) {
      warnings->push_back("feature " + std::to_string(cp.id) + ": point behind camera skipped");
    }
  }
  return kept;
}

Feature2D make_feature(const CharacteristicPoints& cp, const Emitted& e, const Eigen::Vector2d& px) {
  Feature2D f;
  f.id = cp.id;
  f.tag = e.tag;
  f.x = px.x();
  f.y = px.y();
  f.scale = cp.scale;
  f.orientation = cp.orientation;
  return f;
}

}  // namespace

std::string_view to_string(ExportMode m) { return m == ExportMode::kMono ? "mono" : "stereo"; }

std::string_view to_string(DescriptorStrategy s) {
  switch (s) {
    case DescriptorStrategy::kIdentical:
      return "identical";
    case DescriptorStrategy::kBias:
      return "bias";
    case DescriptorStrategy::kExternalMatch:
      return "external-match";
  }
  return "identical";
}

std::string_view to_string(PointTag t) {
  switch (t) {
    case PointTag::kSingle:
      return "single";
    case PointTag::kFront:
      return "front";
    case PointTag::kBack:
      return "back";
  }
  return "single";
}

ExportMode parse_export_mode(std::string_view s) {
  if (s == "mono") return ExportMode::kMono;
  if (s == "stereo") return ExportMode::kStereo;
  throw ConfigError("unknown export mode `" + std::string(s) + "`");
}

DescriptorStrategy parse_descriptor_strategy(std::string_view s) {
  if (s == "identical") return DescriptorStrategy::kIdentical;
  if (s == "bias") return DescriptorStrategy::kBias;
  if (s == "external-match") return DescriptorStrategy::kExternalMatch;
  throw ConfigError("unknown descriptor strategy `" + std::string(s) + "`");
}

double default_stereo_baseline(const LFIntrinsics& intr) {
  const double first = intr.view_position(0, intr.central_j()).x();
  const double last = intr.view_position(intr.dims().ni - 1, intr.central_j()).x();
  return std::abs(last - first);
}

Eigen::Vector2d project_to_pixel(const Point3D& p, double s, double t, const LFIntrinsics& intr) {
  const Eigen::Vector2d uv = project_lambertian(p, s, t, intr.plane_separation());
  const Eigen::Vector4d idx = intr.continuous_index({s, t, uv.x(), uv.y()});
  return {idx(2), idx(3)};
}

std::vector<Feature2D> project_mono(const CharacteristicPoints& cp, const LFIntrinsics& intr,
                                    std::vector<std::string>* warnings) {
  const Eigen::Vector2d centre = intr.view_position(intr.central_i(), intr.central_j());
  std::vector<Feature2D> out;
  for (const Emitted& e : emitted_points(cp, warnings)) {
    out.push_back(make_feature(cp, e, project_to_pixel(e.point, centre.x(), centre.y(), intr)));
  }
  return out;
}

StereoFeatures project_stereo(const CharacteristicPoints& cp, const LFIntrinsics& intr,
                              double baseline, std::vector<std::string>* warnings) {
  if (!(baseline > 0.0)) throw ConfigError("stereo baseline must be positive");
  const Eigen::Vector2d centre = intr.view_position(intr.central_i(), intr.central_j());
  const double s_left = centre.x() - 0.5 * baseline;
  const double s_right = centre.x() + 0.5 * baseline;
  StereoFeatures out;
  for (const Emitted& e : emitted_points(cp, warnings)) {
    out.left.push_back(make_feature(cp, e, project_to_pixel(e.point, s_left, centre.y(), intr)));
    out.right.push_back(make_feature(cp, e, project_to_pixel(e.point, s_right, centre.y(), intr)));
  }
  return out;
}

std::vector<float> bias_descriptor(std::span<const float> d, double scale) {
  if (!(scale > 0.0)) throw ConfigError("bias scale must be positive");
  std::vector<float> out(d.begin(), d.end());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = static_cast<float>(out[n] * (n % 2 == 0 ? scale : 1.0 / scale));
  }
  double l2 = 0.0;
  for (float x : out) l2 += static_cast<double>(x) * x;
  if (l2 > 0.0) {
    const double inv = 1.0 / std::sqrt(l2);
    for (float& x : out) x = static_cast<float>(x * inv);
  }
  return out;
}

std::vector<std::vector<float>> assign_descriptors(const CharacteristicPoints& cp,
                                                   DescriptorStrategy strategy, double bias_scale) {
  if (cp.single()) return {cp.descriptor};
  switch (strategy) {
    case DescriptorStrategy::kIdentical:
    case DescriptorStrategy::kExternalMatch:
      return {cp.descriptor, cp.descriptor};
    case DescriptorStrategy::kBias:
      return {cp.descriptor, bias_descriptor(cp.descriptor, bias_scale)};
  }
  throw ConfigError("unknown descriptor strategy");
}

std::string format_feature_file(std::span<const Feature2D> features, int descriptor_length) {
  std::string out = std::to_string(features.size()) + " " + std::to_string(descriptor_length) + "\n";
  char buf[128];
  for (const Feature2D& f : features) {
    if (static_cast<int>(f.descriptor.size()) != descriptor_length) {
      throw FormatError("feature " + std::to_string(f.id) + " has descriptor length " +
                        std::to_string(f.descriptor.size()) + ", expected " +
                        std::to_string(descriptor_length));
    }
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f", f.x, f.y, f.scale, f.orientation);
    out += buf;
    for (float x : f.descriptor) {
      std::snprintf(buf, sizeof buf, " %.6f", static_cast<double>(x));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_feature_file(std::span<const Feature2D> features, const std::filesystem::path& path,
                        int descriptor_length) {
  write_file_atomic(path, format_feature_file(features, descriptor_length));
}

std::vector<Feature2D> parse_feature_file(std::istream& in, const std::string& source) {
  std::vector<Feature2D> out;
  std::string line;
  std::size_t line_no = 0;
  long expected = -1;
  long dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (expected < 0) {
      if (tokens.size() != 2) throw ParseError(source, line_no, "header must be `N d`");
      expected = parse_int(tokens[0], source, line_no);
      dim = parse_int(tokens[1], source, line_no);
      continue;
    }
    if (tokens.size() != static_cast<std::size_t>(4 + dim)) {
      throw ParseError(source, line_no, "wrong field count");
    }
    Feature2D f;
    f.id = static_cast<std::int64_t>(out.size());
    f.x = parse_double(tokens[0], source, line_no);
    f.y = parse_double(tokens[1], source, line_no);
    f.scale = parse_double(tokens[2], source, line_no);
    f.orientation = parse_double(tokens[3], source, line_no);
    for (long n = 0; n < dim; ++n) {
      f.descriptor.push_back(
          static_cast<float>(parse_double(tokens[static_cast<std::size_t>(4 + n)], source, line_no)));
    }
    out.push_back(std::move(f));
  }
  if (expected >= 0 && static_cast<long>(out.size()) != expected) {
    throw ParseError(source, line_no, "row count does not match header");
  }
  return out;
}

ExportResult export_frame(std::span<const CharacteristicPoints> points, const LFIntrinsics& intr,
                          const ExportConfig& cfg, const std::filesystem::path& out_dir,
                          const std::string& frame) {
  ExportResult result;
  const double baseline =
      cfg.stereo_baseline > 0.0 ? cfg.stereo_baseline : default_stereo_baseline(intr);

  std::vector<Feature2D> primary;    // mono, or the left view
  std::vector<Feature2D> secondary;  // right view
  nlohmann::ordered_json index_features = nlohmann::ordered_json::array();

  for (const CharacteristicPoints& cp : points) {
    const auto descriptors = assign_descriptors(cp, cfg.strategy, cfg.bias_scale);
    std::vector<Feature2D> first;
    std::vector<Feature2D> second;
    if (cfg.mode == ExportMode::kMono) {
      first = project_mono(cp, intr, &result.warnings);
    } else {
      StereoFeatures sf = project_stereo(cp, intr, baseline, &result.warnings);
      first = std::move(sf.left);
      second = std::move(sf.right);
    }

    const auto descriptor_for = [&](PointTag tag) -> const std::vector<float>& {
      return tag == PointTag::kBack ? descriptors.back() : descriptors.front();
    };

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t n = 0; n < first.size(); ++n) {
      first[n].descriptor = descriptor_for(first[n].tag);
      nlohmann::ordered_json row;
      row["row"] = primary.size();
      row["tag"] = std::string(to_string(first[n].tag));
      rows.push_back(std::move(row));
      primary.push_back(first[n]);
      if (cfg.mode == ExportMode::kStereo) {
        second[n].descriptor = first[n].descriptor;
        secondary.push_back(second[n]);
      }
    }
    if (first.empty()) continue;

    (cp.single() ? result.stats.lambertian : result.stats.refracted) += 1;
    nlohmann::ordered_json entry;
    entry["id"] = cp.id;
    entry["class"] = std::string(to_string(cp.feature_class));
    entry["rows"] = std::move(rows);
    index_features.push_back(std::move(entry));
  }

  result.stats.emitted = primary.size();
  result.stats.normalized_feature_count = 0.5 * static_cast<double>(primary.size());

  const std::filesystem::path mode_dir = out_dir / std::string(to_string(cfg.mode));
  if (cfg.mode == ExportMode::kMono) {
    const auto path = mode_dir / (frame + ".txt");
    write_feature_file(primary, path, cfg.descriptor_length);
    result.files.push_back(path);
  } else {
    const auto left = mode_dir / (frame + "_L.txt");
    const auto right = mode_dir / (frame + "_R.txt");
    write_feature_file(primary, left, cfg.descriptor_length);
    write_feature_file(secondary, right, cfg.descriptor_length);
    result.files.push_back(left);
    result.files.push_back(right);
  }

  nlohmann::ordered_json index;
  index["frame"] = frame;
  index["mode"] = std::string(to_string(cfg.mode));
  index["strategy"] = std::string(to_string(cfg.strategy));
  if (cfg.mode == ExportMode::kStereo) index["baseline"] = baseline;
  index["descriptor_length"] = cfg.descriptor_length;
  index["features"] = std::move(index_features);
  nlohmann::ordered_json stats;
  stats["lambertian"] = result.stats.lambertian;
  stats["refracted"] = result.stats.refracted;
  stats["emitted"] = result.stats.emitted;
  stats["normalized_feature_count"] = result.stats.normalized_feature_count;
  index["stats"] = std::move(stats);
  const auto index_path = mode_dir / (frame + ".json");
  write_file_atomic(index_path, index.dump(2) + "\n");
  result.files.push_back(index_path);
  return result;
}

}  // namespace rlff
