// Times the serial reference kernels against their OpenMP counterparts and
// checks that both produce the same output.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>

#include <CLI11.hpp>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/estimator.hpp"
#include "rlff/feature_pipeline.hpp"
#include "rlff/synthetic_scene.hpp"

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %9.4f s  openmp %9.4f s  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "outputs match" : "OUTPUTS DIFFER");
}

bool same_extractions(const std::vector<rlff::Extraction>& a, const std::vector<rlff::Extraction>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n].index() != b[n].index() || rlff::extraction_id(a[n]) != rlff::extraction_id(b[n])) return false;
    if (const auto* fa = std::get_if<rlff::ExtractedFeature>(&a[n])) {
      const auto& fb = std::get<rlff::ExtractedFeature>(b[n]);
      if (fa->rlff.pz1 != fb.rlff.pz1 || fa->rlff.pz2 != fb.rlff.pz2 || fa->rlff.px != fb.rlff.px) return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel timings"};
  std::size_t features = 2000;
  std::size_t match_features = 200;
  int reps = 3;
  app.add_option("--features", features, "Features for synthesis and extraction");
  app.add_option("--match-features", match_features, "Features for the matcher");
  app.add_option("--reps", reps, "Repetitions, best time reported");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  const auto intr = rlff::LFIntrinsics::default_camera();
  const double sigma = 0.1 * intr.pixel_pitch();
  const auto scene = rlff::random_scene(features, 7);

  std::vector<rlff::ObservationSet> s1, s2;
  const double ts = best_of(reps, [&] { s1 = rlff::synth_scene_serial(scene, intr, sigma, 11); });
  const double tp = best_of(reps, [&] { s2 = rlff::synth_scene(scene, intr, sigma, 11); });
  bool same = s1.size() == s2.size();
  for (std::size_t n = 0; same && n < s1.size(); ++n) {
    same = s1[n].rays.size() == s2[n].rays.size() && s1[n].rays.back().u == s2[n].rays.back().u;
  }
  report("synth_scene", ts, tp, same);

  const rlff::EstimatorConfig cfg;
  std::vector<rlff::Extraction> e1, e2;
  const double es = best_of(reps, [&] { e1 = rlff::extract_batch_serial(s1, intr, cfg); });
  const double ep = best_of(reps, [&] { e2 = rlff::extract_batch(s1, intr, cfg); });
  report("extract_batch", es, ep, same_extractions(e1, e2));

  rlff::KeypointSynthOptions kopts;
  kopts.seed = 5;
  const auto kp = rlff::synth_keypoints(rlff::random_scene(match_features, 9), intr, kopts);
  const rlff::MatchConfig mcfg;
  std::vector<rlff::FeatureTrack> m1, m2;
  const double ms = best_of(reps, [&] { m1 = rlff::match_across_views_serial(kp.views, intr.dims(), mcfg); });
  const double mp = best_of(reps, [&] { m2 = rlff::match_across_views(kp.views, intr.dims(), mcfg); });
  bool msame = m1.size() == m2.size();
  for (std::size_t n = 0; msame && n < m1.size(); ++n) {
    msame = m1[n].id == m2[n].id && m1[n].keypoints.size() == m2[n].keypoints.size();
  }
  report("match_across_views", ms, mp, msame);
  return 0;
}
