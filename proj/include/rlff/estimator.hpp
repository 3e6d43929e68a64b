#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/lf_geometry.hpp"

namespace rlff {

/// Six-parameter refracted light-field feature. Pz1 <= Pz2, thetas in [0, pi).
struct Rlff {
  double px = 0.0;
  double py = 0.0;
  double pz1 = 0.0;
  double pz2 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;

  double interval_length() const { return pz2 - pz1; }
};

struct FitMatrices {
  Eigen::Matrix2d h_hat = Eigen::Matrix2d::Zero();
  Eigen::Vector2d x_hat = Eigen::Vector2d::Zero();
  Eigen::Matrix2d h_sym = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d h_rec = Eigen::Matrix2d::Zero();
};

struct FitDiagnostics {
  double rms_residual = 0.0;
  double asymmetry = 0.0;
  double r_squared = 0.0;
  int n_views = 0;
  double interval_length = 0.0;
};

enum class FeatureClass { kLambertian, kRefracted };

enum class RejectReason { kViews, kDiversity, kResidual, kAsymmetry, kGeometry };

std::string_view to_string(FeatureClass c);
std::string_view to_string(RejectReason r);

struct Rejection {
  std::int64_t id = 0;
  RejectReason reason = RejectReason::kGeometry;
  std::string detail;
};

struct ExtractedFeature {
  std::int64_t id = 0;
  Rlff rlff;
  FitDiagnostics diagnostics;
  FitMatrices matrices;
  FeatureClass feature_class = FeatureClass::kLambertian;
};

using Extraction = std::variant<ExtractedFeature, Rejection>;

// Noise floor of the default camera at 0.1 pixel pitch of u,v noise, measured by
// tools/calibrate_thresholds and frozen in tests/fixtures/calibration.json.
inline constexpr double kResidualNoiseFloor = 2.8025e-5;
inline constexpr double kAsymmetryNoiseFloor = 3.2931e-4;

struct EstimatorConfig {
  int min_views = 5;
  double r2_max = 0.65;
  double max_residual = 3.0 * kResidualNoiseFloor;
  double max_asymmetry = 3.0 * kAsymmetryNoiseFloor;
  /// Relative interval (Pz2 - Pz1) / Pz1 above which a feature is refracted.
  double lambertian_eps = 0.05;
  /// Drop the single worst observation and refit once when the residual gate fails.
  bool trim_worst_view = false;
  /// Fit H constrained symmetric instead of fit-then-symmetrize.
  bool symmetric_fit = false;
};

/// Least-squares solution of [u,v] = H [s,t] + X over a set of rays.
struct LinearFit {
  Eigen::Matrix2d h_hat = Eigen::Matrix2d::Zero();
  Eigen::Vector2d x_hat = Eigen::Vector2d::Zero();
  double rms_residual = 0.0;
};

/// Eigen-structure of a symmetric slope matrix, ordered by depth.
struct Decomposition {
  Eigen::Matrix2d axes = Eigen::Matrix2d::Identity();  // columns V1, V2
  Eigen::Vector2d slopes = Eigen::Vector2d::Zero();    // s1, s2; Pz_k = -D / s_k
  double pz1 = 0.0;
  double pz2 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;

  /// H_R = V S V^-1.
  Eigen::Matrix2d reconstructed() const;
};

/// Collinearity of the observing views' (s,t): the coefficient of determination
/// of the best-fitting line through them, maximised over line orientation.
/// 1 for collinear views, 0 for an isotropic spread. Needs >= 3 rays.
double view_diversity(std::span<const Ray4D> rays);
double view_diversity(const ObservationSet& obs);

/// Unconstrained fit of all six unknowns. Needs >= 4 rays with non-collinear (s,t).
LinearFit fit_linear_system(std::span<const Ray4D> rays);

/// Fit with h2 = h3 imposed (five unknowns).
LinearFit fit_symmetric_system(std::span<const Ray4D> rays);

/// Root-mean-square 2D residual of rays against a fitted (H, X).
double rms_residual(std::span<const Ray4D> rays, const Eigen::Matrix2d& h,
                    const Eigen::Vector2d& x);

Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& h_hat);

/// Throws BehindCameraError when an eigenvalue is not strictly negative.
Decomposition decompose(const Eigen::Matrix2d& h_sym, double plane_separation);

/// [Px,Py] = -H_R^-1 X. Throws OffsetUnrecoverableError when H_R is singular.
Eigen::Vector2d recover_offsets(const Eigen::Matrix2d& h_rec, const Eigen::Vector2d& x_hat);

/// Frobenius norm of H_hat - H_R.
double asymmetry_residual(const Eigen::Matrix2d& h_hat, const Eigen::Matrix2d& h_rec);

FeatureClass classify(const Rlff& rlff, double eps_rel);

/// Full chain from rays to an accepted feature or a rejection with its reason.
Extraction extract_rlff(const ObservationSet& obs, const LFIntrinsics& intr,
                        const EstimatorConfig& cfg);

/// Serial reference for batch extraction; output sorted by feature id.
std::vector<Extraction> extract_batch_serial(std::span<const ObservationSet> batch,
                                             const LFIntrinsics& intr, const EstimatorConfig& cfg);

/// OpenMP batch extraction; identical output to extract_batch_serial.
std::vector<Extraction> extract_batch(std::span<const ObservationSet> batch,
                                      const LFIntrinsics& intr, const EstimatorConfig& cfg);

std::int64_t extraction_id(const Extraction& e);

/// Endpoints of the interval of Sturm. Lambertian features collapse to one point.
struct CharacteristicPoints {
  std::int64_t id = 0;
  FeatureClass feature_class = FeatureClass::kLambertian;
  Point3D c1;
  Point3D c2;
  std::vector<float> descriptor;
  double scale = 1.0;
  double orientation = 0.0;

  bool single() const { return feature_class == FeatureClass::kLambertian; }
};

CharacteristicPoints interval_of_sturm(const Rlff& rlff, double eps_rel);

/// theta wrapped into [0, pi).
double wrap_axis_angle(double theta);

/// Smallest difference between two axis angles, in [0, pi/2].
double axis_angle_distance(double a, double b);

}  // namespace rlff
