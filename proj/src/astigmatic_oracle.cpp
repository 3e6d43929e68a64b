#include "rlff/astigmatic_oracle.hpp"

#include <Eigen/LU>
#include <cmath>
#include <numbers>
#include <random>

namespace rlff {

AstigmaticLensModel AstigmaticLensModel::toric(double px, double py, double pz1, double pz2,
                                               double theta) {
  return {px, py, pz1, pz2, theta, theta + 0.5 * std::numbers::pi};
}

AstigmaticLensModel AstigmaticLensModel::lambertian(const Point3D& p) {
  return {p.x, p.y, p.z, p.z, 0.0, 0.5 * std::numbers::pi};
}

Eigen::Vector2d AstigmaticLensModel::axis1() const { return {std::cos(theta1), std::sin(theta1)}; }

Eigen::Vector2d AstigmaticLensModel::axis2() const { return {std::cos(theta2), std::sin(theta2)}; }

Eigen::Matrix2d AstigmaticLensModel::axes() const {
  Eigen::Matrix2d v;
  v.col(0) = axis1();
  v.col(1) = axis2();
  return v;
}

void AstigmaticLensModel::validate() const {
  const bool finite = std::isfinite(px) && std::isfinite(py) && std::isfinite(pz1) &&
                      std::isfinite(pz2) && std::isfinite(theta1) && std::isfinite(theta2);
  if (!finite) throw ConfigError("lens model has non-finite parameters");
  if (!(pz1 > 0.0) || !(pz2 > 0.0)) throw ConfigError("lens model depths must be positive");
}

Eigen::Matrix2d h_from_model(const AstigmaticLensModel& m, double plane_separation) {
  m.validate();
  const double s1 = slope_of_depth(m.pz1, plane_separation);
  const double s2 = slope_of_depth(m.pz2, plane_separation);
  if (s1 == s2) return s1 * Eigen::Matrix2d::Identity();

  const Eigen::Matrix2d v = m.axes();
  if (std::abs(v.determinant()) < 1e-12) {
    throw DegenerateAxesError("focal-line axes are parallel");
  }
  return v * Eigen::Vector2d(s1, s2).asDiagonal() * v.inverse();
}

std::uint64_t feature_seed(std::uint64_t seed, std::int64_t id) {
  // splitmix64 finaliser over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(id) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ObservationSet synth_observations(const AstigmaticLensModel& m, const LFIntrinsics& intr,
                                  double noise_sigma, std::uint64_t seed, std::int64_t id) {
  std::vector<ViewIndex> views;
  views.reserve(static_cast<std::size_t>(intr.dims().ni) * intr.dims().nj);
  for (int i = 0; i < intr.dims().ni; ++i) {
    for (int j = 0; j < intr.dims().nj; ++j) views.push_back({i, j});
  }
  return synth_observations(m, intr, views, noise_sigma, seed, id);
}

ObservationSet synth_observations(const AstigmaticLensModel& m, const LFIntrinsics& intr,
                                  std::span<const ViewIndex> views, double noise_sigma,
                                  std::uint64_t seed, std::int64_t id) {
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  const Eigen::Matrix2d h = h_from_model(m, intr.plane_separation());
  const Eigen::Vector2d offset = -h * Eigen::Vector2d(m.px, m.py);

  std::mt19937_64 rng(feature_seed(seed, id));
  std::normal_distribution<double> noise(0.0, 1.0);

  ObservationSet obs;
  obs.id = id;
  obs.rays.reserve(views.size());
  obs.samples.reserve(views.size());
  for (const ViewIndex& view : views) {
    if (!intr.contains_view(view.i, view.j)) {
      throw BoundsError("view (" + std::to_string(view.i) + "," + std::to_string(view.j) +
                        ") outside the grid");
    }
    const Eigen::Vector2d st = intr.view_position(view.i, view.j);
    Eigen::Vector2d uv = h * st + offset;
    if (noise_sigma > 0.0) {
      const double du = noise(rng);
      const double dv = noise(rng);
      uv += noise_sigma * Eigen::Vector2d(du, dv);
    }
    const Eigen::Vector2d kl = intr.pixel_for(view.i, view.j, uv.x(), uv.y());
    obs.rays.push_back({st.x(), st.y(), uv.x(), uv.y()});
    obs.samples.push_back({view.i, view.j, kl.x(), kl.y()});
  }
  return obs;
}

std::vector<ObservationSet> synth_scene_serial(std::span<const SceneFeature> scene,
                                               const LFIntrinsics& intr, double noise_sigma,
                                               std::uint64_t seed) {
  std::vector<ObservationSet> out;
  out.reserve(scene.size());
  for (const SceneFeature& f : scene) {
    out.push_back(synth_observations(f.model, intr, noise_sigma, seed, f.id));
  }
  return out;
}

std::vector<ObservationSet> synth_scene(std::span<const SceneFeature> scene,
                                        const LFIntrinsics& intr, double noise_sigma,
                                        std::uint64_t seed) {
  std::vector<ObservationSet> out(scene.size());
  const auto n = static_cast<std::ptrdiff_t>(scene.size());
  // Exceptions cannot leave an OpenMP region; the first one is rethrown after it.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    try {
      const SceneFeature& f = scene[static_cast<std::size_t>(idx)];
      out[static_cast<std::size_t>(idx)] = synth_observations(f.model, intr, noise_sigma, seed, f.id);
    } catch (...) {
#pragma omp critical(rlff_synth_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double FocalGeometry::interval_length() const { return std::abs(c2.z - c1.z); }

FocalGeometry focal_lines(const AstigmaticLensModel& m) {
  m.validate();
  const Eigen::Vector2d v1 = m.axis1();
  const Eigen::Vector2d v2 = m.axis2();
  FocalGeometry g;
  g.c1 = {m.px, m.py, m.pz1};
  g.c2 = {m.px, m.py, m.pz2};
  g.first = {g.c1, Eigen::Vector3d(v2.x(), v2.y(), 0.0)};
  g.second = {g.c2, Eigen::Vector3d(v1.x(), v1.y(), 0.0)};
  return g;
}

Ray3D ray_in_space(const Ray4D& r, double plane_separation) {
  return {Eigen::Vector3d(r.s, r.t, 0.0), Eigen::Vector3d(r.u, r.v, plane_separation)};
}

}  // namespace rlff
