#pragma once

// Synthetic scenes and per-view keypoint files with known correspondences.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/feature_pipeline.hpp"

namespace rlff {

struct RandomSceneOptions {
  double depth_min = 0.2;
  double depth_max = 2.0;
  double offset = 0.05;  // |Px|, |Py| bound
  double refracted_fraction = 0.5;
  /// Smallest (Pz2 - Pz1) / Pz1 of a refracted feature.
  double min_relative_gap = 0.3;
};

/// Toric features with uniformly drawn depths, offsets and axes. The first
/// round(count * refracted_fraction) ids are refracted, the rest Lambertian.
std::vector<SceneFeature> random_scene(std::size_t count, std::uint64_t seed,
                                       const RandomSceneOptions& opts = {});

/// Non-negative unit descriptor drawn from its own stream.
std::vector<float> random_descriptor(std::uint64_t seed, int length);

struct KeypointSynthOptions {
  double position_noise_px = 0.0;
  double descriptor_noise = 0.02;
  int descriptor_length = 128;
  double scale = 2.0;
  std::uint64_t seed = 0;
  /// Shuffle keypoint order inside each view so ordering carries no correspondence.
  bool shuffle = true;
};

using Visibility = std::function<bool(const SceneFeature&, ViewIndex)>;

struct SyntheticKeypoints {
  PerViewKeypoints views;
  /// Scene id of every keypoint, parallel to views.
  std::map<ViewIndex, std::vector<std::int64_t>> truth;
  std::map<std::int64_t, std::vector<float>> descriptors;
};

/// Projects every feature into every visible view at its noiseless (u,v), adds
/// pixel noise, and perturbs a per-feature base descriptor. Keypoints that fall
/// off the sensor are dropped.
SyntheticKeypoints synth_keypoints(std::span<const SceneFeature> scene, const LFIntrinsics& intr,
                                   const KeypointSynthOptions& opts, const Visibility& visible = {});

}  // namespace rlff
