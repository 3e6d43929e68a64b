#pragma once

#include <filesystem>

#include <json.hpp>

#include "rlff/feature_pipeline.hpp"
#include "rlff/sfm_export.hpp"

namespace rlff {

/// Every tunable of a run. Loaded from JSON over the built-in defaults.
struct RunConfig {
  PipelineConfig pipeline;
  ExportConfig exporter;
};

/// Keys: min_views, ratio, abs_threshold, root_sift, r2_max, max_residual,
/// max_asymmetry, lambertian_eps, trim_worst_view, symmetric_fit, mode,
/// stereo_baseline, strategy, bias_scale, descriptor_length. Unknown keys are
/// a ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Effective configuration, abs_threshold as null when disabled.
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

}  // namespace rlff
