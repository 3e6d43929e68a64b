#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/estimator.hpp"
#include "rlff/lf_geometry.hpp"

namespace rlff {

/// A 2D detection in one sub-image.
struct Keypoint {
  int i = 0;
  int j = 0;
  double k = 0.0;
  double l = 0.0;
  double scale = 1.0;
  double orientation = 0.0;
  std::vector<float> descriptor;
};

/// Keypoints grouped by view, ordered by (i,j).
using PerViewKeypoints = std::map<ViewIndex, std::vector<Keypoint>>;

struct IngestOptions {
  /// L1-normalise then take the element-wise square root (RootSIFT).
  bool root_sift = false;
};

struct MatchConfig {
  int min_views = 5;
  double ratio = 0.8;
  double abs_threshold = std::numeric_limits<double>::infinity();
};

/// One keypoint per view; keypoints[reference] comes from the reference view.
struct FeatureTrack {
  std::int64_t id = 0;
  std::vector<Keypoint> keypoints;
  std::size_t reference = 0;
};

struct PipelineConfig {
  MatchConfig match;
  IngestOptions ingest;
  EstimatorConfig estimator;
};

struct PipelineResult {
  FeatureTrack track;
  Extraction extraction;
};

/// Unit L2 norm, or the RootSIFT transform when root is set. Negative entries keep
/// their sign under the square root.
void normalize_descriptor(std::vector<float>& d, bool root);

double descriptor_distance(std::span<const float> a, std::span<const float> b);

/// Parses one `view_<i>_<j>.txt` stream: header `N d`, then N rows
/// `k l scale orientation d_1 .. d_d`. Throws ParseError with the line number.
std::vector<Keypoint> parse_keypoint_file(std::istream& in, ViewIndex view, const std::string& source,
                                          const IngestOptions& opts);

/// Reads every `view_<i>_<j>.txt` in a directory. Views without a file are absent.
/// Throws BoundsError for a file naming a view outside the grid and FormatError
/// when descriptor lengths differ between files.
PerViewKeypoints ingest_keypoints(const std::filesystem::path& dir, const GridDims& dims,
                                  const IngestOptions& opts);

void write_keypoint_file(const std::filesystem::path& path, std::span<const Keypoint> keypoints,
                         int descriptor_length);
void write_keypoint_files(const std::filesystem::path& dir, const PerViewKeypoints& views,
                          int descriptor_length);

/// Central view, or the nearest view holding keypoints when the centre is empty.
ViewIndex reference_view(const PerViewKeypoints& views, const GridDims& dims);

/// Serial reference matcher. Every reference keypoint is matched greedily to its
/// nearest descriptor in each other view subject to the absolute and ratio tests;
/// a keypoint claimed by two tracks stays with the closer one.
std::vector<FeatureTrack> match_across_views_serial(const PerViewKeypoints& views,
                                                    const GridDims& dims, const MatchConfig& cfg);

/// OpenMP matcher; identical output to match_across_views_serial.
std::vector<FeatureTrack> match_across_views(const PerViewKeypoints& views, const GridDims& dims,
                                             const MatchConfig& cfg);

/// Decodes each track's keypoints to rays. Throws BoundsError on samples off the grid.
ObservationSet track_to_observations(const FeatureTrack& track, const LFIntrinsics& intr);
std::vector<ObservationSet> tracks_to_observations(std::span<const FeatureTrack> tracks,
                                                   const LFIntrinsics& intr);

/// Matches, decodes and extracts. A failing track becomes a rejection; the run
/// never aborts on one track. Output ordered by track id.
std::vector<PipelineResult> run_pipeline(const PerViewKeypoints& views, const LFIntrinsics& intr,
                                         const PipelineConfig& cfg);
std::vector<PipelineResult> run_pipeline(const std::filesystem::path& keypoint_dir,
                                         const LFIntrinsics& intr, const PipelineConfig& cfg);

}  // namespace rlff
