#include "rlff/estimator.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

namespace rlff {

namespace {

// Relative eigenvalue gap below which the two depths are treated as one.
constexpr double kRepeatedEigenTolerance = 1e-9;

// Centre and isotropic scale of the (s,t) cloud, used to condition the design matrix.
struct Normalization {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double scale = 1.0;
};

Normalization normalization_of(std::span<const Ray4D> rays) {
  Normalization n;
  for (const Ray4D& r : rays) n.mean += Eigen::Vector2d(r.s, r.t);
  n.mean /= static_cast<double>(rays.size());
  double ss = 0.0;
  for (const Ray4D& r : rays) ss += (Eigen::Vector2d(r.s, r.t) - n.mean).squaredNorm();
  n.scale = std::sqrt(ss / static_cast<double>(rays.size()));
  if (!(n.scale > 0.0)) throw DegenerateGeometryError("all observations share one view position");
  return n;
}

void require_rays(std::span<const Ray4D> rays, std::size_t minimum) {
  if (rays.size() < minimum) {
    throw InsufficientViewsError("need at least " + std::to_string(minimum) + " observations, got " +
                                 std::to_string(rays.size()));
  }
}

Eigen::VectorXd solve_or_throw(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) {
    throw DegenerateGeometryError("design matrix is rank deficient (collinear views)");
  }
  return qr.solve(b);
}

// Undo the (s,t) conditioning: u = Hn (st - mean)/scale + Xn.
LinearFit denormalize(const Eigen::Matrix2d& hn, const Eigen::Vector2d& xn, const Normalization& n,
                      std::span<const Ray4D> rays) {
  LinearFit fit;
  fit.h_hat = hn / n.scale;
  fit.x_hat = xn - fit.h_hat * n.mean;
  fit.rms_residual = rms_residual(rays, fit.h_hat, fit.x_hat);
  return fit;
}

std::size_t worst_observation(std::span<const Ray4D> rays, const LinearFit& fit) {
  std::size_t worst = 0;
  double worst_err = -1.0;
  for (std::size_t n = 0; n < rays.size(); ++n) {
    const Ray4D& r = rays[n];
    const double err =
        (Eigen::Vector2d(r.u, r.v) - fit.h_hat * Eigen::Vector2d(r.s, r.t) - fit.x_hat).squaredNorm();
    if (err > worst_err) {
      worst_err = err;
      worst = n;
    }
  }
  return worst;
}

Rejection reject(std::int64_t id, RejectReason reason, std::string detail) {
  return Rejection{id, reason, std::move(detail)};
}

}  // namespace

std::string_view to_string(FeatureClass c) {
  return c == FeatureClass::kLambertian ? "lambertian" : "refracted";
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kViews:
      return "views";
    case RejectReason::kDiversity:
      return "diversity";
    case RejectReason::kResidual:
      return "residual";
    case RejectReason::kAsymmetry:
      return "asymmetry";
    case RejectReason::kGeometry:
      return "geometry";
  }
  return "geometry";
}

double wrap_axis_angle(double theta) {
  double w = std::fmod(theta, std::numbers::pi);
  if (w < 0.0) w += std::numbers::pi;
  if (w >= std::numbers::pi) w = 0.0;
  return w;
}

double axis_angle_distance(double a, double b) {
  const double d = wrap_axis_angle(a - b);
  return std::min(d, std::numbers::pi - d);
}

Eigen::Matrix2d Decomposition::reconstructed() const {
  return axes * slopes.asDiagonal() * axes.inverse();
}

double view_diversity(std::span<const Ray4D> rays) {
  require_rays(rays, 3);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Ray4D& r : rays) mean += Eigen::Vector2d(r.s, r.t);
  mean /= static_cast<double>(rays.size());

  double sss = 0.0, stt = 0.0, sst = 0.0;
  for (const Ray4D& r : rays) {
    const double ds = r.s - mean.x();
    const double dt = r.t - mean.y();
    sss += ds * ds;
    stt += dt * dt;
    sst += ds * dt;
  }
  const double total = sss + stt;
  if (!(total > 0.0)) return 1.0;
  // Scatter eigenvalues are total/2 +- half_gap; the best line's R^2 is
  // ((l1 - l2) / (l1 + l2))^2.
  const double half_gap = std::hypot(0.5 * (sss - stt), sst);
  const double ratio = 2.0 * half_gap / total;
  return std::clamp(ratio * ratio, 0.0, 1.0);
}

double view_diversity(const ObservationSet& obs) { return view_diversity(obs.rays); }

double rms_residual(std::span<const Ray4D> rays, const Eigen::Matrix2d& h, const Eigen::Vector2d& x) {
  if (rays.empty()) return 0.0;
  double sum = 0.0;
  for (const Ray4D& r : rays) {
    sum += (Eigen::Vector2d(r.u, r.v) - h * Eigen::Vector2d(r.s, r.t) - x).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(rays.size()));
}

LinearFit fit_linear_system(std::span<const Ray4D> rays) {
  require_rays(rays, 4);
  const Normalization norm = normalization_of(rays);
  const auto n = static_cast<Eigen::Index>(rays.size());

  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd b(n, 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Ray4D& ray = rays[static_cast<std::size_t>(r)];
    const Eigen::Vector2d st = (Eigen::Vector2d(ray.s, ray.t) - norm.mean) / norm.scale;
    a.row(r) << st.x(), st.y(), 1.0;
    b.row(r) << ray.u, ray.v;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw DegenerateGeometryError("design matrix is rank deficient (collinear views)");
  const Eigen::MatrixXd sol = qr.solve(b);  // 3x2: rows h_s, h_t, x; columns u, v

  Eigen::Matrix2d hn;
  hn << sol(0, 0), sol(1, 0), sol(0, 1), sol(1, 1);
  return denormalize(hn, Eigen::Vector2d(sol(2, 0), sol(2, 1)), norm, rays);
}

LinearFit fit_symmetric_system(std::span<const Ray4D> rays) {
  require_rays(rays, 4);
  const Normalization norm = normalization_of(rays);
  const auto n = static_cast<Eigen::Index>(rays.size());

  // unknowns: h1, h2 (= h3), h4, x1, x2
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 5);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Ray4D& ray = rays[static_cast<std::size_t>(r)];
    const Eigen::Vector2d st = (Eigen::Vector2d(ray.s, ray.t) - norm.mean) / norm.scale;
    a.row(2 * r) << st.x(), st.y(), 0.0, 1.0, 0.0;
    a.row(2 * r + 1) << 0.0, st.x(), st.y(), 0.0, 1.0;
    b(2 * r) = ray.u;
    b(2 * r + 1) = ray.v;
  }
  const Eigen::VectorXd sol = solve_or_throw(a, b);

  Eigen::Matrix2d hn;
  hn << sol(0), sol(1), sol(1), sol(2);
  return denormalize(hn, Eigen::Vector2d(sol(3), sol(4)), norm, rays);
}

Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& h_hat) { return 0.5 * (h_hat + h_hat.transpose()); }

Decomposition decompose(const Eigen::Matrix2d& h_sym, double plane_separation) {
  const double a = h_sym(0, 0);
  const double b = 0.5 * (h_sym(0, 1) + h_sym(1, 0));
  const double c = h_sym(1, 1);
  const double mid = 0.5 * (a + c);
  const double half_gap = std::hypot(0.5 * (a - c), b);
  const double s_low = mid - half_gap;   // most negative slope: nearest depth
  const double s_high = mid + half_gap;

  if (!(s_high < 0.0)) {
    throw BehindCameraError("slope matrix has a non-negative eigenvalue");
  }

  Decomposition d;
  if (2.0 * half_gap < kRepeatedEigenTolerance * std::abs(s_low)) {
    d.slopes = Eigen::Vector2d(mid, mid);
    d.axes = Eigen::Matrix2d::Identity();
    d.pz1 = d.pz2 = depth_of_slope(mid, plane_separation);
    d.theta1 = d.theta2 = 0.0;
    return d;
  }

  // Eigenvector of s_high lies at phi; s_low's is perpendicular.
  const double phi = 0.5 * std::atan2(2.0 * b, a - c);
  d.theta1 = wrap_axis_angle(phi + 0.5 * std::numbers::pi);
  d.theta2 = wrap_axis_angle(phi);
  d.slopes = Eigen::Vector2d(s_low, s_high);
  d.axes.col(0) = Eigen::Vector2d(std::cos(d.theta1), std::sin(d.theta1));
  d.axes.col(1) = Eigen::Vector2d(std::cos(d.theta2), std::sin(d.theta2));
  d.pz1 = depth_of_slope(s_low, plane_separation);
  d.pz2 = depth_of_slope(s_high, plane_separation);
  return d;
}

Eigen::Vector2d recover_offsets(const Eigen::Matrix2d& h_rec, const Eigen::Vector2d& x_hat) {
  const double det = h_rec.determinant();
  const double scale = h_rec.squaredNorm();
  if (!std::isfinite(det) || std::abs(det) <= 1e-14 * scale || scale == 0.0) {
    throw OffsetUnrecoverableError("reconstructed slope matrix is singular");
  }
  return -h_rec.inverse() * x_hat;
}

double asymmetry_residual(const Eigen::Matrix2d& h_hat, const Eigen::Matrix2d& h_rec) {
  return (h_hat - h_rec).norm();
}

FeatureClass classify(const Rlff& rlff, double eps_rel) {
  return (rlff.pz2 - rlff.pz1) / rlff.pz1 > eps_rel ? FeatureClass::kRefracted
                                                     : FeatureClass::kLambertian;
}

Extraction extract_rlff(const ObservationSet& obs, const LFIntrinsics& intr,
                        const EstimatorConfig& cfg) {
  const std::int64_t id = obs.id;
  const auto n_views = static_cast<int>(obs.rays.size());
  if (n_views < std::max(cfg.min_views, 4)) {
    return reject(id, RejectReason::kViews, std::to_string(n_views) + " views");
  }

  std::vector<Ray4D> rays = obs.rays;
  const double r2 = view_diversity(rays);
  if (r2 > cfg.r2_max) {
    return reject(id, RejectReason::kDiversity, "R^2 " + std::to_string(r2));
  }

  const auto fit_rays = [&cfg](std::span<const Ray4D> r) {
    return cfg.symmetric_fit ? fit_symmetric_system(r) : fit_linear_system(r);
  };

  LinearFit fit;
  try {
    fit = fit_rays(rays);
    if (fit.rms_residual > cfg.max_residual && cfg.trim_worst_view && n_views > cfg.min_views) {
      rays.erase(rays.begin() + static_cast<std::ptrdiff_t>(worst_observation(rays, fit)));
      fit = fit_rays(rays);
    }
  } catch (const Error& e) {
    return reject(id, RejectReason::kGeometry, e.what());
  }
  if (!(fit.rms_residual <= cfg.max_residual)) {
    return reject(id, RejectReason::kResidual, "rms " + std::to_string(fit.rms_residual));
  }

  ExtractedFeature out;
  out.id = id;
  out.matrices.h_hat = fit.h_hat;
  out.matrices.x_hat = fit.x_hat;
  out.matrices.h_sym = symmetrize(fit.h_hat);

  Decomposition dec;
  try {
    dec = decompose(out.matrices.h_sym, intr.plane_separation());
  } catch (const Error& e) {
    return reject(id, RejectReason::kGeometry, e.what());
  }
  out.matrices.h_rec = dec.reconstructed();

  const double asym = asymmetry_residual(fit.h_hat, out.matrices.h_rec);
  if (!(asym <= cfg.max_asymmetry)) {
    return reject(id, RejectReason::kAsymmetry, "asymmetry " + std::to_string(asym));
  }

  Eigen::Vector2d offsets;
  try {
    offsets = recover_offsets(out.matrices.h_rec, fit.x_hat);
  } catch (const Error& e) {
    return reject(id, RejectReason::kGeometry, e.what());
  }

  out.rlff = {offsets.x(), offsets.y(), dec.pz1, dec.pz2, dec.theta1, dec.theta2};
  out.diagnostics.rms_residual = fit.rms_residual;
  out.diagnostics.asymmetry = asym;
  out.diagnostics.r_squared = r2;
  out.diagnostics.n_views = static_cast<int>(rays.size());
  out.diagnostics.interval_length = out.rlff.interval_length();
  out.feature_class = classify(out.rlff, cfg.lambertian_eps);
  return out;
}

std::int64_t extraction_id(const Extraction& e) {
  return std::visit([](const auto& v) { return v.id; }, e);
}

namespace {

void sort_by_id(std::vector<Extraction>& out) {
  std::stable_sort(out.begin(), out.end(), [](const Extraction& a, const Extraction& b) {
    return extraction_id(a) < extraction_id(b);
  });
}

}  // namespace

std::vector<Extraction> extract_batch_serial(std::span<const ObservationSet> batch,
                                             const LFIntrinsics& intr, const EstimatorConfig& cfg) {
  std::vector<Extraction> out;
  out.reserve(batch.size());
  for (const ObservationSet& obs : batch) out.push_back(extract_rlff(obs, intr, cfg));
  sort_by_id(out);
  return out;
}

std::vector<Extraction> extract_batch(std::span<const ObservationSet> batch,
                                      const LFIntrinsics& intr, const EstimatorConfig& cfg) {
  std::vector<Extraction> out(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    try {
      const auto k = static_cast<std::size_t>(idx);
      out[k] = extract_rlff(batch[k], intr, cfg);
    } catch (...) {
#pragma omp critical(rlff_extract_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  sort_by_id(out);
  return out;
}

CharacteristicPoints interval_of_sturm(const Rlff& rlff, double eps_rel) {
  CharacteristicPoints cp;
  cp.feature_class = classify(rlff, eps_rel);
  if (cp.feature_class == FeatureClass::kLambertian) {
    const Point3D mid{rlff.px, rlff.py, 0.5 * (rlff.pz1 + rlff.pz2)};
    cp.c1 = mid;
    cp.c2 = mid;
  } else {
    cp.c1 = {rlff.px, rlff.py, rlff.pz1};
    cp.c2 = {rlff.px, rlff.py, rlff.pz2};
  }
  return cp;
}

}  // namespace rlff
