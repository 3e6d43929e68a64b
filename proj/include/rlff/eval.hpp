#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/estimator.hpp"
#include "rlff/io.hpp"

namespace rlff {

/// Ground truth expressed the way the estimator reports it: depths ordered,
/// axes wrapped to [0, pi), and a repeated depth given the identity axes.
Rlff truth_rlff(const AstigmaticLensModel& m);

struct ParameterErrors {
  double px = 0.0;
  double py = 0.0;
  double pz1 = 0.0;
  double pz2 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Refracted is the positive class.
struct Confusion {
  std::size_t true_refracted = 0;
  std::size_t false_refracted = 0;
  std::size_t true_lambertian = 0;
  std::size_t false_lambertian = 0;

  double precision() const;
  double recall() const;
};

struct EvalReport {
  std::size_t matched = 0;
  ParameterErrors rmse;
  /// Axis RMSE only covers features refracted in the ground truth.
  std::size_t angle_samples = 0;
  Confusion confusion;
  std::vector<std::int64_t> unmatched_estimates;
  std::vector<std::int64_t> unmatched_truth;
};

EvalReport evaluate(std::span<const RlffRecord> estimates, std::span<const SceneFeature> truth,
                    double eps_rel);

nlohmann::ordered_json report_to_json(const EvalReport& r);

}  // namespace rlff
