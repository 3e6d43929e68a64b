#include "rlff/synthetic_scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace rlff {

std::vector<SceneFeature> random_scene(std::size_t count, std::uint64_t seed,
                                       const RandomSceneOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> depth(opts.depth_min, opts.depth_max);
  std::uniform_real_distribution<double> offset(-opts.offset, opts.offset);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);

  const auto n_refracted =
      static_cast<std::size_t>(std::llround(static_cast<double>(count) * opts.refracted_fraction));
  std::vector<SceneFeature> scene;
  scene.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double px = offset(rng);
    const double py = offset(rng);
    const double theta = angle(rng);
    double pz1 = depth(rng);
    double pz2 = pz1;
    if (n < n_refracted) {
      // redraw until the pair is separated enough to be unambiguous
      do {
        pz1 = depth(rng);
        pz2 = depth(rng);
        if (pz2 < pz1) std::swap(pz1, pz2);
      } while ((pz2 - pz1) / pz1 < opts.min_relative_gap);
    }
    scene.push_back({static_cast<std::int64_t>(n), AstigmaticLensModel::toric(px, py, pz1, pz2, theta)});
  }
  return scene;
}

std::vector<float> random_descriptor(std::uint64_t seed, int length) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> d(static_cast<std::size_t>(length));
  for (float& x : d) x = static_cast<float>(std::abs(g(rng)));
  normalize_descriptor(d, false);
  return d;
}

SyntheticKeypoints synth_keypoints(std::span<const SceneFeature> scene, const LFIntrinsics& intr,
                                   const KeypointSynthOptions& opts, const Visibility& visible) {
  SyntheticKeypoints out;
  const GridDims& dims = intr.dims();

  for (const SceneFeature& f : scene) {
    out.descriptors[f.id] = random_descriptor(feature_seed(opts.seed ^ 0xD35C5EEDULL, f.id),
                                              opts.descriptor_length);
  }

  for (const SceneFeature& f : scene) {
    const Eigen::Matrix2d h = h_from_model(f.model, intr.plane_separation());
    const Eigen::Vector2d x = -h * Eigen::Vector2d(f.model.px, f.model.py);
    std::mt19937_64 rng(feature_seed(opts.seed, f.id));
    std::normal_distribution<double> g(0.0, 1.0);
    const std::vector<float>& base = out.descriptors.at(f.id);

    for (int i = 0; i < dims.ni; ++i) {
      for (int j = 0; j < dims.nj; ++j) {
        const ViewIndex view{i, j};
        // draw unconditionally so visibility does not shift the noise stream
        const double dk = g(rng) * opts.position_noise_px;
        const double dl = g(rng) * opts.position_noise_px;
        std::vector<float> desc(base.size());
        for (std::size_t n = 0; n < base.size(); ++n) {
          desc[n] = static_cast<float>(std::abs(base[n] + opts.descriptor_noise * g(rng)));
        }
        if (visible && !visible(f, view)) continue;

        const Eigen::Vector2d st = intr.view_position(i, j);
        const Eigen::Vector2d uv = h * st + x;
        const Eigen::Vector2d kl = intr.pixel_for(i, j, uv.x(), uv.y()) + Eigen::Vector2d(dk, dl);
        if (kl.x() < 0.0 || kl.x() >= dims.nk || kl.y() < 0.0 || kl.y() >= dims.nl) continue;

        normalize_descriptor(desc, false);
        Keypoint kp;
        kp.i = i;
        kp.j = j;
        kp.k = kl.x();
        kp.l = kl.y();
        kp.scale = opts.scale;
        kp.orientation = 0.0;
        kp.descriptor = std::move(desc);
        out.views[view].push_back(std::move(kp));
        out.truth[view].push_back(f.id);
      }
    }
  }

  if (opts.shuffle) {
    for (auto& [view, kps] : out.views) {
      std::vector<std::size_t> perm(kps.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(feature_seed(opts.seed ^ 0x5A1F7EULL, view.i * 1000 + view.j));
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Keypoint> shuffled;
      std::vector<std::int64_t> ids;
      const auto& truth = out.truth[view];
      for (std::size_t p : perm) {
        shuffled.push_back(kps[p]);
        ids.push_back(truth[p]);
      }
      kps = std::move(shuffled);
      out.truth[view] = std::move(ids);
    }
  }
  return out;
}

}  // namespace rlff
