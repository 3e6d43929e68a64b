// rlff: simulate, fit, pipeline, export and eval refracted light-field features.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlff/astigmatic_oracle.hpp"
#include "rlff/config.hpp"
#include "rlff/estimator.hpp"
#include "rlff/eval.hpp"
#include "rlff/feature_pipeline.hpp"
#include "rlff/io.hpp"
#include "rlff/sfm_export.hpp"
#include "rlff/synthetic_scene.hpp"

namespace {

constexpr const char* kVersion = "rlff 0.1.0";
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonOptions {
  std::string intrinsics;
  std::string config;
  std::string out;
};

rlff::LFIntrinsics intrinsics_or_default(const std::string& path) {
  return path.empty() ? rlff::LFIntrinsics::default_camera() : rlff::load_intrinsics(path);
}

rlff::RunConfig config_or_default(const std::string& path) {
  return path.empty() ? rlff::RunConfig{} : rlff::load_run_config(path);
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    rlff::write_file_atomic(out_path, content);
  }
}

void echo_config(const char* command, const nlohmann::ordered_json& effective) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["effective_config"] = effective;
  std::cerr << j.dump() << "\n";
}

void log_rejection(const rlff::Rejection& r) {
  std::cerr << "feature " << r.id << " rejected: " << rlff::to_string(r.reason) << " (" << r.detail
            << ")\n";
}

// simulate ------------------------------------------------------------------

struct SimulateOptions {
  CommonOptions common;
  std::string scene;
  std::size_t random_count = 0;
  double refracted_fraction = 0.5;
  std::string scene_out;
  double noise = 0.0;
  double noise_px = -1.0;
  std::uint64_t seed = 0;
  std::string keypoints_dir;
  double position_noise_px = 0.0;
  double descriptor_noise = 0.02;
  int descriptor_length = 128;
};

int run_simulate(const SimulateOptions& o) {
  const rlff::LFIntrinsics intr = intrinsics_or_default(o.common.intrinsics);
  std::vector<rlff::SceneFeature> scene;
  if (!o.scene.empty()) {
    scene = rlff::load_scene(o.scene);
  } else {
    rlff::RandomSceneOptions ropts;
    ropts.refracted_fraction = o.refracted_fraction;
    scene = rlff::random_scene(o.random_count, o.seed, ropts);
  }
  if (!o.scene_out.empty()) rlff::write_file_atomic(o.scene_out, rlff::scene_to_json(scene).dump(2) + "\n");

  const double sigma = o.noise_px >= 0.0 ? o.noise_px * intr.pixel_pitch() : o.noise;
  nlohmann::ordered_json effective;
  effective["noise_sigma"] = sigma;
  effective["seed"] = o.seed;
  effective["features"] = scene.size();
  effective["intrinsics"] = rlff::intrinsics_to_json(intr);
  echo_config("simulate", effective);

  const auto sets = rlff::synth_scene(scene, intr, sigma, o.seed);
  emit(o.common.out, rlff::format_observation_csv(sets));

  if (!o.keypoints_dir.empty()) {
    rlff::KeypointSynthOptions kopts;
    kopts.seed = o.seed;
    kopts.position_noise_px = o.position_noise_px;
    kopts.descriptor_noise = o.descriptor_noise;
    kopts.descriptor_length = o.descriptor_length;
    const auto kps = rlff::synth_keypoints(scene, intr, kopts);
    rlff::write_keypoint_files(o.keypoints_dir, kps.views, o.descriptor_length);
  }
  return 0;
}

// fit -----------------------------------------------------------------------

struct FitOptions {
  CommonOptions common;
  std::string observations;
};

int run_fit(const FitOptions& o) {
  const rlff::RunConfig cfg = config_or_default(o.common.config);
  const rlff::LFIntrinsics intr = intrinsics_or_default(o.common.intrinsics);
  echo_config("fit", rlff::run_config_to_json(cfg));

  std::ifstream in(o.observations);
  if (!in) throw rlff::FormatError("cannot open " + o.observations);
  const auto sets = rlff::parse_observation_csv(in, o.observations, &intr);
  const auto results = rlff::extract_batch(sets, intr, cfg.pipeline.estimator);

  std::string out;
  for (const auto& r : results) {
    if (const auto* f = std::get_if<rlff::ExtractedFeature>(&r)) {
      out += rlff::json_line(rlff::record_to_json(rlff::to_record(*f)));
    } else {
      log_rejection(std::get<rlff::Rejection>(r));
    }
  }
  emit(o.common.out, out);
  return 0;
}

// pipeline ------------------------------------------------------------------

struct PipelineOptions {
  CommonOptions common;
  std::string keypoints_dir;
};

int run_pipeline_cmd(const PipelineOptions& o) {
  const rlff::RunConfig cfg = config_or_default(o.common.config);
  const rlff::LFIntrinsics intr = intrinsics_or_default(o.common.intrinsics);
  echo_config("pipeline", rlff::run_config_to_json(cfg));

  const auto results = rlff::run_pipeline(o.keypoints_dir, intr, cfg.pipeline);
  std::string out;
  for (const auto& r : results) {
    if (const auto* f = std::get_if<rlff::ExtractedFeature>(&r.extraction)) {
      rlff::RlffRecord rec = rlff::to_record(*f);
      const rlff::Keypoint& ref = r.track.keypoints.at(r.track.reference);
      rec.descriptor = ref.descriptor;
      rec.scale = ref.scale;
      rec.orientation = ref.orientation;
      out += rlff::json_line(rlff::record_to_json(rec));
    } else {
      log_rejection(std::get<rlff::Rejection>(r.extraction));
    }
  }
  emit(o.common.out, out);
  return 0;
}

// export --------------------------------------------------------------------

struct ExportOptions {
  CommonOptions common;
  std::string rlff;
  std::string out_dir;
  std::string frame = "frame";
  std::optional<std::string> mode;
  std::optional<std::string> strategy;
  std::optional<double> baseline;
};

int run_export(const ExportOptions& o) {
  rlff::RunConfig cfg = config_or_default(o.common.config);
  if (o.mode) cfg.exporter.mode = rlff::parse_export_mode(*o.mode);
  if (o.strategy) cfg.exporter.strategy = rlff::parse_descriptor_strategy(*o.strategy);
  if (o.baseline) {
    if (!(*o.baseline > 0.0)) throw rlff::ConfigError("--baseline must be positive");
    cfg.exporter.stereo_baseline = *o.baseline;
  }
  const rlff::LFIntrinsics intr = intrinsics_or_default(o.common.intrinsics);

  std::ifstream in(o.rlff);
  if (!in) throw rlff::FormatError("cannot open " + o.rlff);
  const auto records = rlff::parse_rlff_jsonl(in, o.rlff);

  std::vector<rlff::CharacteristicPoints> points;
  points.reserve(records.size());
  std::optional<std::size_t> dim;
  for (const auto& rec : records) {
    if (dim && *dim != rec.descriptor.size()) {
      throw rlff::FormatError("records carry descriptors of different lengths");
    }
    dim = rec.descriptor.size();
    points.push_back(rlff::to_characteristic_points(rec));
  }
  if (dim) cfg.exporter.descriptor_length = static_cast<int>(*dim);
  echo_config("export", rlff::run_config_to_json(cfg));

  const auto result = rlff::export_frame(points, intr, cfg.exporter, o.out_dir, o.frame);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  nlohmann::ordered_json summary;
  summary["files"] = nlohmann::ordered_json::array();
  for (const auto& f : result.files) summary["files"].push_back(f.lexically_relative(o.out_dir).string());
  summary["lambertian"] = result.stats.lambertian;
  summary["refracted"] = result.stats.refracted;
  summary["emitted"] = result.stats.emitted;
  summary["normalized_feature_count"] = result.stats.normalized_feature_count;
  emit(o.common.out, rlff::json_line(summary));
  return 0;
}

// eval ----------------------------------------------------------------------

struct EvalOptions {
  CommonOptions common;
  std::string rlff;
  std::string scene;
};

int run_eval(const EvalOptions& o) {
  const rlff::RunConfig cfg = config_or_default(o.common.config);
  echo_config("eval", rlff::run_config_to_json(cfg));
  std::ifstream in(o.rlff);
  if (!in) throw rlff::FormatError("cannot open " + o.rlff);
  const auto records = rlff::parse_rlff_jsonl(in, o.rlff);
  const auto scene = rlff::load_scene(o.scene);
  const auto report = rlff::evaluate(records, scene, cfg.pipeline.estimator.lambertian_eps);
  emit(o.common.out, rlff::report_to_json(report).dump(2) + "\n");
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& c, bool with_intrinsics = true) {
  if (with_intrinsics) {
    cmd->add_option("--intrinsics", c.intrinsics, "Intrinsics JSON (default: built-in 13x13 camera)")
        ->check(CLI::ExistingFile);
  }
  cmd->add_option("--config", c.config, "Config JSON overriding defaults")->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", c.out, "Output file (default: stdout)");
  cmd->set_version_flag("--version", kVersion);
}

void apply_thread_env() {
  if (const char* env = std::getenv("RLFF_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Refracted light-field feature tools"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Synthesize observations from a scene of lens models");
  add_common(simulate, sim.common);
  auto* scene_opt = simulate->add_option("--scene", sim.scene, "Scene JSON")->check(CLI::ExistingFile);
  auto* random_opt = simulate->add_option("--random", sim.random_count, "Generate a random scene of N features");
  scene_opt->excludes(random_opt);
  simulate->add_option("--refracted-fraction", sim.refracted_fraction, "Share of refracted features (--random)")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--scene-out", sim.scene_out, "Write the simulated scene JSON");
  simulate->add_option("--noise", sim.noise, "u,v noise sigma, meters")->check(CLI::NonNegativeNumber);
  simulate->add_option("--noise-px", sim.noise_px, "u,v noise sigma, pixel pitches (overrides --noise)")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--keypoints-dir", sim.keypoints_dir, "Also write per-view keypoint files here");
  simulate->add_option("--position-noise-px", sim.position_noise_px, "Keypoint position noise, pixels")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--descriptor-noise", sim.descriptor_noise, "Keypoint descriptor noise")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--descriptor-length", sim.descriptor_length, "Keypoint descriptor length")
      ->check(CLI::PositiveNumber);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit RLFFs to an observation CSV");
  add_common(fit_cmd, fit.common);
  fit_cmd->add_option("--obs", fit.observations, "Observation CSV")->required()->check(CLI::ExistingFile);

  PipelineOptions pipe;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Match per-view keypoints and fit RLFFs");
  add_common(pipe_cmd, pipe.common);
  pipe_cmd->add_option("--keypoints", pipe.keypoints_dir, "Directory of view_<i>_<j>.txt files")
      ->required()
      ->check(CLI::ExistingDirectory);

  ExportOptions exp;
  auto* exp_cmd = app.add_subcommand("export", "Write SfM feature files from RLFF records");
  add_common(exp_cmd, exp.common);
  exp_cmd->add_option("--rlff", exp.rlff, "RLFF JSON lines")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out-dir", exp.out_dir, "Output directory")->required();
  exp_cmd->add_option("--frame", exp.frame, "Frame name");
  exp_cmd->add_option("--mode", exp.mode, "mono | stereo");
  exp_cmd->add_option("--strategy", exp.strategy, "identical | bias | external-match");
  exp_cmd->add_option("--baseline", exp.baseline, "Stereo baseline, meters");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare RLFF records against a ground-truth scene");
  add_common(eval_cmd, ev.common, false);
  eval_cmd->add_option("--rlff", ev.rlff, "RLFF JSON lines")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scene", ev.scene, "Ground-truth scene JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (simulate->parsed() && sim.scene.empty() && sim.random_count == 0) {
    std::cerr << "simulate: one of --scene or --random is required\n";
    return kExitUsage;
  }

  apply_thread_env();
  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (pipe_cmd->parsed()) return run_pipeline_cmd(pipe);
    if (exp_cmd->parsed()) return run_export(exp);
    if (eval_cmd->parsed()) return run_eval(ev);
  } catch (const rlff::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
