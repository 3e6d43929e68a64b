#include "rlff/eval.hpp"

#include <cmath>
#include <map>

namespace rlff {

Rlff truth_rlff(const AstigmaticLensModel& m) {
  if (m.pz1 == m.pz2) return {m.px, m.py, m.pz1, m.pz2, 0.0, 0.0};
  if (m.pz1 < m.pz2) {
    return {m.px, m.py, m.pz1, m.pz2, wrap_axis_angle(m.theta1), wrap_axis_angle(m.theta2)};
  }
  return {m.px, m.py, m.pz2, m.pz1, wrap_axis_angle(m.theta2), wrap_axis_angle(m.theta1)};
}

double Confusion::precision() const {
  const std::size_t predicted = true_refracted + false_refracted;
  return predicted == 0 ? 1.0 : static_cast<double>(true_refracted) / static_cast<double>(predicted);
}

double Confusion::recall() const {
  const std::size_t actual = true_refracted + false_lambertian;
  return actual == 0 ? 1.0 : static_cast<double>(true_refracted) / static_cast<double>(actual);
}

EvalReport evaluate(std::span<const RlffRecord> estimates, std::span<const SceneFeature> truth,
                    double eps_rel) {
  std::map<std::int64_t, const SceneFeature*> by_id;
  for (const SceneFeature& f : truth) by_id[f.id] = &f;
  std::map<std::int64_t, bool> seen;

  EvalReport r;
  ParameterErrors sq;
  for (const RlffRecord& est : estimates) {
    const auto it = by_id.find(est.id);
    if (it == by_id.end()) {
      r.unmatched_estimates.push_back(est.id);
      continue;
    }
    seen[est.id] = true;
    ++r.matched;
    const Rlff gt = truth_rlff(it->second->model);
    sq.px += std::pow(est.rlff.px - gt.px, 2);
    sq.py += std::pow(est.rlff.py - gt.py, 2);
    sq.pz1 += std::pow(est.rlff.pz1 - gt.pz1, 2);
    sq.pz2 += std::pow(est.rlff.pz2 - gt.pz2, 2);

    const FeatureClass truth_class = classify(gt, eps_rel);
    if (truth_class == FeatureClass::kRefracted) {
      ++r.angle_samples;
      sq.theta1 += std::pow(axis_angle_distance(est.rlff.theta1, gt.theta1), 2);
      sq.theta2 += std::pow(axis_angle_distance(est.rlff.theta2, gt.theta2), 2);
    }

    const bool est_refracted = est.feature_class == FeatureClass::kRefracted;
    const bool gt_refracted = truth_class == FeatureClass::kRefracted;
    if (est_refracted && gt_refracted) ++r.confusion.true_refracted;
    if (est_refracted && !gt_refracted) ++r.confusion.false_refracted;
    if (!est_refracted && !gt_refracted) ++r.confusion.true_lambertian;
    if (!est_refracted && gt_refracted) ++r.confusion.false_lambertian;
  }
  for (const auto& [id, f] : by_id) {
    if (!seen.contains(id)) r.unmatched_truth.push_back(id);
  }

  if (r.matched > 0) {
    const double n = static_cast<double>(r.matched);
    r.rmse.px = std::sqrt(sq.px / n);
    r.rmse.py = std::sqrt(sq.py / n);
    r.rmse.pz1 = std::sqrt(sq.pz1 / n);
    r.rmse.pz2 = std::sqrt(sq.pz2 / n);
  }
  if (r.angle_samples > 0) {
    const double n = static_cast<double>(r.angle_samples);
    r.rmse.theta1 = std::sqrt(sq.theta1 / n);
    r.rmse.theta2 = std::sqrt(sq.theta2 / n);
  }
  return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["matched"] = r.matched;
  nlohmann::ordered_json rmse;
  rmse["Px"] = r.rmse.px;
  rmse["Py"] = r.rmse.py;
  rmse["Pz1"] = r.rmse.pz1;
  rmse["Pz2"] = r.rmse.pz2;
  rmse["theta1"] = r.rmse.theta1;
  rmse["theta2"] = r.rmse.theta2;
  j["rmse"] = std::move(rmse);
  j["angle_samples"] = r.angle_samples;
  nlohmann::ordered_json conf;
  conf["true_refracted"] = r.confusion.true_refracted;
  conf["false_refracted"] = r.confusion.false_refracted;
  conf["true_lambertian"] = r.confusion.true_lambertian;
  conf["false_lambertian"] = r.confusion.false_lambertian;
  conf["precision"] = r.confusion.precision();
  conf["recall"] = r.confusion.recall();
  j["classification"] = std::move(conf);
  nlohmann::ordered_json unmatched;
  unmatched["estimates"] = r.unmatched_estimates;
  unmatched["truth"] = r.unmatched_truth;
  j["unmatched"] = std::move(unmatched);
  return j;
}

}  // namespace rlff
