// Measures the estimator's noise floor on the default camera at 0.1 pixel pitch
// of ray noise. The printed JSON is what tests/fixtures/calibration.json holds;
// the default residual/asymmetry gates are three times these means.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/estimator.hpp"

namespace {

struct Calibration {
  int trials = 0;
  double noise_sigma = 0.0;
  double mean_rms_residual = 0.0;
  double mean_asymmetry = 0.0;
  double lambertian_rel_interval_p99 = 0.0;
};

Calibration calibrate(int trials, std::uint64_t seed) {
  const rlff::LFIntrinsics intr = rlff::LFIntrinsics::default_camera();
  const double sigma = 0.1 * intr.pixel_pitch();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> depth(0.2, 2.0);
  std::uniform_real_distribution<double> offset(-0.05, 0.05);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);

  Calibration c;
  c.trials = trials;
  c.noise_sigma = sigma;
  std::vector<double> lambertian_rel;
  for (int n = 0; n < trials; ++n) {
    const double px = offset(rng), py = offset(rng), z1 = depth(rng), z2 = depth(rng), th = angle(rng);
    const auto toric = rlff::AstigmaticLensModel::toric(px, py, z1, z2, th);
    const auto obs = rlff::synth_observations(toric, intr, sigma, seed, n);
    const auto fit = rlff::fit_linear_system(obs.rays);
    const auto dec = rlff::decompose(rlff::symmetrize(fit.h_hat), intr.plane_separation());
    c.mean_rms_residual += fit.rms_residual;
    c.mean_asymmetry += rlff::asymmetry_residual(fit.h_hat, dec.reconstructed());

    const auto flat = rlff::AstigmaticLensModel::lambertian({px, py, z1});
    const auto lobs = rlff::synth_observations(flat, intr, sigma, seed + 1, n);
    const auto lfit = rlff::fit_linear_system(lobs.rays);
    const auto ldec = rlff::decompose(rlff::symmetrize(lfit.h_hat), intr.plane_separation());
    lambertian_rel.push_back((ldec.pz2 - ldec.pz1) / ldec.pz1);
  }
  c.mean_rms_residual /= trials;
  c.mean_asymmetry /= trials;
  std::sort(lambertian_rel.begin(), lambertian_rel.end());
  c.lambertian_rel_interval_p99 =
      lambertian_rel[static_cast<std::size_t>(0.99 * (lambertian_rel.size() - 1))];
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate the estimator noise floor for the default camera"};
  int trials = 2000;
  std::uint64_t seed = 20200601;
  app.add_option("--trials", trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  const Calibration c = calibrate(trials, seed);
  nlohmann::ordered_json j;
  j["trials"] = c.trials;
  j["seed"] = seed;
  j["noise_sigma"] = c.noise_sigma;
  j["mean_rms_residual"] = c.mean_rms_residual;
  j["mean_asymmetry"] = c.mean_asymmetry;
  j["lambertian_rel_interval_p99"] = c.lambertian_rel_interval_p99;
  std::cout << j.dump(2) << "\n";
  return 0;
}
