#pragma once

#include <Eigen/Core>

#include "rlff/errors.hpp"

namespace rlff {

/// Default separation of the two reference planes, meters.
inline constexpr double kDefaultPlaneSeparation = 0.1;

/// A continuous light-field sample in the relative two-plane parameterization.
/// s,t lie on the far (camera-side) plane; u,v on the near plane, relative to s,t.
struct Ray4D {
  double s = 0.0;
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;

  bool finite() const;
  friend bool operator==(const Ray4D&, const Ray4D&) = default;
};

/// Discrete light-field sample: view (i,j) and a sub-pixel position (k,l) inside it.
struct DiscreteSample {
  int i = 0;
  int j = 0;
  double k = 0.0;
  double l = 0.0;

  friend bool operator==(const DiscreteSample&, const DiscreteSample&) = default;
};

/// Camera-frame point, meters. z is measured from the s,t plane toward the scene.
struct Point3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3D&, const Point3D&) = default;
};

struct GridDims {
  int ni = 0;
  int nj = 0;
  int nk = 0;
  int nl = 0;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Linear intrinsic model of a light-field camera: a 5x5 homogeneous matrix taking
/// [i,j,k,l,1] to [s,t,u,v,1], the plane separation D, and the sampling grid.
class LFIntrinsics {
 public:
  using Matrix5d = Eigen::Matrix<double, 5, 5>;

  /// Throws ConfigError when D <= 0, the last row is not [0,0,0,0,1], M is
  /// singular, or a grid dimension is not positive.
  LFIntrinsics(const Matrix5d& m, double plane_separation, GridDims dims);

  /// s=i, t=j, u=k, v=l.
  static LFIntrinsics identity(GridDims dims, double plane_separation = kDefaultPlaneSeparation);

  /// 13x13 views of 512x512 pixels; 1 mm view pitch, 0.2 mm pixel pitch on the
  /// u,v plane at D = 0.1 m, centred so the middle view and pixel map to zero.
  static LFIntrinsics default_camera();

  const Matrix5d& matrix() const { return m_; }
  double plane_separation() const { return d_; }
  const GridDims& dims() const { return dims_; }

  bool contains_view(int i, int j) const;
  bool contains(const DiscreteSample& n) const;

  int central_i() const { return dims_.ni / 2; }
  int central_j() const { return dims_.nj / 2; }

  /// (s,t) of the ray through the centre pixel of view (i,j).
  Eigen::Vector2d view_position(int i, int j) const;

  /// Pixel (k,l) in view (i,j) whose decoded ray has the given u,v.
  Eigen::Vector2d pixel_for(int i, int j, double u, double v) const;

  /// Continuous [i,j,k,l] mapping exactly onto the ray. i,j are fractional for
  /// rays that do not originate on a sampled view.
  Eigen::Vector4d continuous_index(const Ray4D& ray) const;

  /// Metric size of one pixel on the u,v plane, sqrt(|det d(u,v)/d(k,l)|).
  double pixel_pitch() const;

 private:
  Matrix5d m_;
  Matrix5d m_inv_;
  double d_;
  GridDims dims_;
};

/// Maps a discrete sample through the intrinsic matrix. Throws BoundsError when
/// the sample lies outside the grid.
Ray4D decode_sample(const DiscreteSample& n, const LFIntrinsics& intr);

/// u = (-D/Pz)(s - Px), v = (-D/Pz)(t - Py).
Eigen::Vector2d project_lambertian(const Point3D& p, double s, double t, double plane_separation);

/// -D / Pz. Throws SingularDepthError for Pz == 0.
double slope_of_depth(double depth, double plane_separation);

/// -D / slope. Throws SingularDepthError for a zero slope.
double depth_of_slope(double slope, double plane_separation);

}  // namespace rlff
