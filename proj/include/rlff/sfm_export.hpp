#pragma once

// Reduces RLFF characteristic points to 2D features for SfM tools that only
// accept image keypoints.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlff/estimator.hpp"
#include "rlff/lf_geometry.hpp"

namespace rlff {

enum class ExportMode { kMono, kStereo };

enum class DescriptorStrategy { kIdentical, kBias, kExternalMatch };

/// Which characteristic point a 2D feature came from.
enum class PointTag { kSingle, kFront, kBack };

std::string_view to_string(ExportMode m);
std::string_view to_string(DescriptorStrategy s);
std::string_view to_string(PointTag t);
ExportMode parse_export_mode(std::string_view s);
/// Throws ConfigError on an unknown name.
DescriptorStrategy parse_descriptor_strategy(std::string_view s);

struct ExportConfig {
  ExportMode mode = ExportMode::kMono;
  /// Meters; 0 selects the s-extent of the view grid.
  double stereo_baseline = 0.0;
  DescriptorStrategy strategy = DescriptorStrategy::kIdentical;
  /// Element-wise factor of the `bias` strategy.
  double bias_scale = 2.0;
  int descriptor_length = 128;
};

/// A 2D feature in pixel coordinates of its target view (x along k, y along l).
struct Feature2D {
  std::int64_t id = 0;
  PointTag tag = PointTag::kSingle;
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;
  double orientation = 0.0;
  std::vector<float> descriptor;
};

struct StereoFeatures {
  std::vector<Feature2D> left;
  std::vector<Feature2D> right;
};

/// Distance between the left and right virtual views, defaulting to the s-extent
/// of the calibrated grid.
double default_stereo_baseline(const LFIntrinsics& intr);

/// Pixel position in the view at (s,t) of a point, through the point-plane projection.
Eigen::Vector2d project_to_pixel(const Point3D& p, double s, double t, const LFIntrinsics& intr);

/// One feature for a Lambertian point, two (front, back) for a refracted one, in
/// the central view. Points with z <= 0 are skipped and reported in warnings.
std::vector<Feature2D> project_mono(const CharacteristicPoints& cp, const LFIntrinsics& intr,
                                    std::vector<std::string>* warnings = nullptr);

/// The same points projected into virtual views at s = centre -+ baseline/2.
StereoFeatures project_stereo(const CharacteristicPoints& cp, const LFIntrinsics& intr,
                              double baseline, std::vector<std::string>* warnings = nullptr);

/// Element-wise modification used for back points by the `bias` strategy:
/// even entries scaled by `scale`, odd entries by 1/scale, then renormalised.
std::vector<float> bias_descriptor(std::span<const float> d, double scale);

/// One descriptor for a Lambertian point, two for a refracted one (front, back).
std::vector<std::vector<float>> assign_descriptors(const CharacteristicPoints& cp,
                                                   DescriptorStrategy strategy, double bias_scale = 2.0);

/// Feature file text: `N d`, then `x y scale orientation d_1 .. d_d` with six decimals.
/// Throws FormatError when a descriptor length differs from descriptor_length.
std::string format_feature_file(std::span<const Feature2D> features, int descriptor_length);
void write_feature_file(std::span<const Feature2D> features, const std::filesystem::path& path,
                        int descriptor_length = 128);
std::vector<Feature2D> parse_feature_file(std::istream& in, const std::string& source);

struct ExportStats {
  std::size_t lambertian = 0;
  std::size_t refracted = 0;
  std::size_t emitted = 0;  // per target view
  /// Emitted count halved, since one RLFF is carried by a pair of points.
  double normalized_feature_count = 0.0;
};

struct ExportResult {
  ExportStats stats;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Writes mono/<frame>.txt or stereo/<frame>_L.txt and _R.txt under out_dir,
/// plus a <frame>.json index mapping feature ids to rows and front/back tags.
ExportResult export_frame(std::span<const CharacteristicPoints> points, const LFIntrinsics& intr,
                          const ExportConfig& cfg, const std::filesystem::path& out_dir,
                          const std::string& frame);

}  // namespace rlff
