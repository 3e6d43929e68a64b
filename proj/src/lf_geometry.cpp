#include "rlff/lf_geometry.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

namespace rlff {

bool Ray4D::finite() const {
  return std::isfinite(s) && std::isfinite(t) && std::isfinite(u) && std::isfinite(v);
}

LFIntrinsics::LFIntrinsics(const Matrix5d& m, double plane_separation, GridDims dims)
    : m_(m), d_(plane_separation), dims_(dims) {
  if (!(d_ > 0.0) || !std::isfinite(d_)) {
    throw ConfigError("plane separation D must be positive, got " + std::to_string(d_));
  }
  if (dims_.ni <= 0 || dims_.nj <= 0 || dims_.nk <= 0 || dims_.nl <= 0) {
    throw ConfigError("grid dimensions must be positive");
  }
  if (!m_.allFinite()) {
    throw ConfigError("intrinsic matrix has non-finite entries");
  }
  for (int c = 0; c < 4; ++c) {
    if (m_(4, c) != 0.0) throw ConfigError("intrinsic matrix last row must be [0,0,0,0,1]");
  }
  if (m_(4, 4) != 1.0) throw ConfigError("intrinsic matrix last row must be [0,0,0,0,1]");

  const Eigen::FullPivLU<Matrix5d> lu(m_);
  if (!lu.isInvertible()) throw ConfigError("intrinsic matrix is singular");
  m_inv_ = lu.inverse();
}

LFIntrinsics LFIntrinsics::identity(GridDims dims, double plane_separation) {
  return LFIntrinsics(Matrix5d::Identity(), plane_separation, dims);
}

LFIntrinsics LFIntrinsics::default_camera() {
  const GridDims dims{13, 13, 512, 512};
  constexpr double view_pitch = 1e-3;
  constexpr double pixel_pitch = 2e-4;
  Matrix5d m = Matrix5d::Identity();
  m(0, 0) = view_pitch;
  m(1, 1) = view_pitch;
  m(2, 2) = pixel_pitch;
  m(3, 3) = pixel_pitch;
  m(0, 4) = -view_pitch * (dims.ni / 2);
  m(1, 4) = -view_pitch * (dims.nj / 2);
  m(2, 4) = -pixel_pitch * 0.5 * (dims.nk - 1);
  m(3, 4) = -pixel_pitch * 0.5 * (dims.nl - 1);
  return LFIntrinsics(m, kDefaultPlaneSeparation, dims);
}

bool LFIntrinsics::contains_view(int i, int j) const {
  return i >= 0 && i < dims_.ni && j >= 0 && j < dims_.nj;
}

bool LFIntrinsics::contains(const DiscreteSample& n) const {
  return contains_view(n.i, n.j) && n.k >= 0.0 && n.k < dims_.nk && n.l >= 0.0 && n.l < dims_.nl;
}

Eigen::Vector2d LFIntrinsics::view_position(int i, int j) const {
  const Eigen::Matrix<double, 5, 1> idx(i, j, 0.5 * (dims_.nk - 1), 0.5 * (dims_.nl - 1), 1.0);
  const Eigen::Matrix<double, 5, 1> ray = m_ * idx;
  return {ray(0), ray(1)};
}

Eigen::Vector2d LFIntrinsics::pixel_for(int i, int j, double u, double v) const {
  const Eigen::Matrix2d block = m_.block<2, 2>(2, 2);
  if (std::abs(block.determinant()) == 0.0) {
    throw ConfigError("intrinsic u,v rows do not depend on pixel position");
  }
  const Eigen::Vector2d rhs(u - m_(2, 0) * i - m_(2, 1) * j - m_(2, 4),
                            v - m_(3, 0) * i - m_(3, 1) * j - m_(3, 4));
  return block.inverse() * rhs;
}

Eigen::Vector4d LFIntrinsics::continuous_index(const Ray4D& ray) const {
  const Eigen::Matrix<double, 5, 1> r(ray.s, ray.t, ray.u, ray.v, 1.0);
  return (m_inv_ * r).head<4>();
}

double LFIntrinsics::pixel_pitch() const {
  return std::sqrt(std::abs(m_.block<2, 2>(2, 2).determinant()));
}

Ray4D decode_sample(const DiscreteSample& n, const LFIntrinsics& intr) {
  if (!intr.contains(n)) {
    throw BoundsError("sample [" + std::to_string(n.i) + "," + std::to_string(n.j) + "," +
                      std::to_string(n.k) + "," + std::to_string(n.l) + "] outside the grid");
  }
  const Eigen::Matrix<double, 5, 1> idx(n.i, n.j, n.k, n.l, 1.0);
  const Eigen::Matrix<double, 5, 1> r = intr.matrix() * idx;
  return {r(0), r(1), r(2), r(3)};
}

Eigen::Vector2d project_lambertian(const Point3D& p, double s, double t, double plane_separation) {
  const double slope = slope_of_depth(p.z, plane_separation);
  return {slope * (s - p.x), slope * (t - p.y)};
}

double slope_of_depth(double depth, double plane_separation) {
  if (depth == 0.0 || !std::isfinite(depth)) {
    throw SingularDepthError("depth must be finite and non-zero");
  }
  return -plane_separation / depth;
}

double depth_of_slope(double slope, double plane_separation) {
  if (slope == 0.0 || !std::isfinite(slope)) {
    throw SingularDepthError("slope must be finite and non-zero");
  }
  return -plane_separation / slope;
}

}  // namespace rlff
