#pragma once

// Forward model of a point seen through a thin astigmatic lens. Everything the
// estimator is tested against is generated here.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "rlff/lf_geometry.hpp"

namespace rlff {

struct ViewIndex {
  int i = 0;
  int j = 0;

  friend bool operator==(const ViewIndex&, const ViewIndex&) = default;
  friend auto operator<=>(const ViewIndex&, const ViewIndex&) = default;
};

/// Ground-truth lens/point pair. Focal-line axis k is V_k = (cos theta_k, sin theta_k);
/// depth Pz_k is where the pencil collapses along V_k.
struct AstigmaticLensModel {
  double px = 0.0;
  double py = 0.0;
  double pz1 = 1.0;
  double pz2 = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;

  /// Rotated toric lens: orthogonal axes, theta2 = theta + pi/2.
  static AstigmaticLensModel toric(double px, double py, double pz1, double pz2, double theta);
  static AstigmaticLensModel lambertian(const Point3D& p);

  Eigen::Vector2d axis1() const;
  Eigen::Vector2d axis2() const;
  /// [V1, V2] column-wise.
  Eigen::Matrix2d axes() const;

  bool is_lambertian() const { return pz1 == pz2; }

  /// Throws ConfigError on non-positive or non-finite depths.
  void validate() const;
};

/// A single feature's observations. rays[n] was decoded from samples[n].
struct ObservationSet {
  std::int64_t id = 0;
  std::vector<Ray4D> rays;
  std::vector<DiscreteSample> samples;

  std::size_t size() const { return rays.size(); }
};

struct SceneFeature {
  std::int64_t id = 0;
  AstigmaticLensModel model;
};

/// H = V S V^-1 with S = diag(-D/Pz1, -D/Pz2).
/// Throws DegenerateAxesError when the axes are parallel and the depths differ.
Eigen::Matrix2d h_from_model(const AstigmaticLensModel& m, double plane_separation);

/// Every view of the grid observes the feature at its centre-pixel (s,t):
/// [u,v] = H [s,t] + X, X = -H [Px,Py], plus N(0, noise_sigma) on u and v.
/// samples hold the sub-pixel (k,l) that decodes to each ray's u,v.
ObservationSet synth_observations(const AstigmaticLensModel& m, const LFIntrinsics& intr,
                                  double noise_sigma, std::uint64_t seed, std::int64_t id = 0);

/// As above, restricted to the listed views.
ObservationSet synth_observations(const AstigmaticLensModel& m, const LFIntrinsics& intr,
                                  std::span<const ViewIndex> views, double noise_sigma,
                                  std::uint64_t seed, std::int64_t id = 0);

/// Serial reference for scene synthesis. Feature n draws its noise from a stream
/// keyed on (seed, id) so the result is independent of evaluation order.
std::vector<ObservationSet> synth_scene_serial(std::span<const SceneFeature> scene,
                                               const LFIntrinsics& intr, double noise_sigma,
                                               std::uint64_t seed);

/// OpenMP version of synth_scene_serial; identical output.
std::vector<ObservationSet> synth_scene(std::span<const SceneFeature> scene,
                                        const LFIntrinsics& intr, double noise_sigma,
                                        std::uint64_t seed);

struct FocalLine {
  Point3D anchor;
  Eigen::Vector3d direction;
};

/// The two focal lines and the interval of Sturm joining them.
struct FocalGeometry {
  FocalLine first;   // at depth Pz1
  FocalLine second;  // at depth Pz2
  Point3D c1;
  Point3D c2;

  double interval_length() const;
};

/// Line k sits at depth Pz_k through (Px,Py). Rays converge along V_k there, so
/// the line itself runs along the other axis.
FocalGeometry focal_lines(const AstigmaticLensModel& m);

/// Ray through (s,t,0) and (s+u, t+v, D) as origin/direction in camera space.
struct Ray3D {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;
};
Ray3D ray_in_space(const Ray4D& r, double plane_separation);

/// Mixes a run seed and a feature id into one stream seed.
std::uint64_t feature_seed(std::uint64_t seed, std::int64_t id);

}  // namespace rlff
