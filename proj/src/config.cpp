#include "rlff/config.hpp"

#include <cmath>
#include <limits>

#include "rlff/io.hpp"

namespace rlff {

namespace {

double get_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key `" + key + "` must be a number");
  return v.get<double>();
}

int get_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key `" + key + "` must be an integer");
  return v.get<int>();
}

bool get_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key `" + key + "` must be a boolean");
  return v.get<bool>();
}

std::string get_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key `" + key + "` must be a string");
  return v.get<std::string>();
}

void validate(const RunConfig& cfg) {
  const EstimatorConfig& e = cfg.pipeline.estimator;
  if (cfg.pipeline.match.min_views < 1) throw ConfigError("min_views must be >= 1");
  if (!(cfg.pipeline.match.ratio > 0.0 && cfg.pipeline.match.ratio <= 1.0)) {
    throw ConfigError("ratio must lie in (0, 1]");
  }
  if (!(e.r2_max >= 0.0 && e.r2_max <= 1.0)) throw ConfigError("r2_max must lie in [0, 1]");
  if (!(e.max_residual > 0.0)) throw ConfigError("max_residual must be positive");
  if (!(e.max_asymmetry > 0.0)) throw ConfigError("max_asymmetry must be positive");
  if (!(e.lambertian_eps >= 0.0)) throw ConfigError("lambertian_eps must be non-negative");
  if (cfg.exporter.stereo_baseline < 0.0) throw ConfigError("stereo_baseline must be >= 0");
  if (!(cfg.exporter.bias_scale > 0.0)) throw ConfigError("bias_scale must be positive");
  if (cfg.exporter.descriptor_length < 0) throw ConfigError("descriptor_length must be >= 0");
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig cfg) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "min_views") {
      cfg.pipeline.match.min_views = get_int(v, key);
      cfg.pipeline.estimator.min_views = cfg.pipeline.match.min_views;
    } else if (key == "ratio") {
      cfg.pipeline.match.ratio = get_number(v, key);
    } else if (key == "abs_threshold") {
      cfg.pipeline.match.abs_threshold =
          v.is_null() ? std::numeric_limits<double>::infinity() : get_number(v, key);
    } else if (key == "root_sift") {
      cfg.pipeline.ingest.root_sift = get_bool(v, key);
    } else if (key == "r2_max") {
      cfg.pipeline.estimator.r2_max = get_number(v, key);
    } else if (key == "max_residual") {
      cfg.pipeline.estimator.max_residual = get_number(v, key);
    } else if (key == "max_asymmetry") {
      cfg.pipeline.estimator.max_asymmetry = get_number(v, key);
    } else if (key == "lambertian_eps") {
      cfg.pipeline.estimator.lambertian_eps = get_number(v, key);
    } else if (key == "trim_worst_view") {
      cfg.pipeline.estimator.trim_worst_view = get_bool(v, key);
    } else if (key == "symmetric_fit") {
      cfg.pipeline.estimator.symmetric_fit = get_bool(v, key);
    } else if (key == "mode") {
      cfg.exporter.mode = parse_export_mode(get_string(v, key));
    } else if (key == "stereo_baseline") {
      cfg.exporter.stereo_baseline = get_number(v, key);
    } else if (key == "strategy") {
      cfg.exporter.strategy = parse_descriptor_strategy(get_string(v, key));
    } else if (key == "bias_scale") {
      cfg.exporter.bias_scale = get_number(v, key);
    } else if (key == "descriptor_length") {
      cfg.exporter.descriptor_length = get_int(v, key);
    } else {
      throw ConfigError("unknown config key `" + key + "`");
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["min_views"] = cfg.pipeline.match.min_views;
  j["ratio"] = cfg.pipeline.match.ratio;
  if (std::isfinite(cfg.pipeline.match.abs_threshold)) {
    j["abs_threshold"] = cfg.pipeline.match.abs_threshold;
  } else {
    j["abs_threshold"] = nullptr;
  }
  j["root_sift"] = cfg.pipeline.ingest.root_sift;
  j["r2_max"] = cfg.pipeline.estimator.r2_max;
  j["max_residual"] = cfg.pipeline.estimator.max_residual;
  j["max_asymmetry"] = cfg.pipeline.estimator.max_asymmetry;
  j["lambertian_eps"] = cfg.pipeline.estimator.lambertian_eps;
  j["trim_worst_view"] = cfg.pipeline.estimator.trim_worst_view;
  j["symmetric_fit"] = cfg.pipeline.estimator.symmetric_fit;
  j["mode"] = std::string(to_string(cfg.exporter.mode));
  j["stereo_baseline"] = cfg.exporter.stereo_baseline;
  j["strategy"] = std::string(to_string(cfg.exporter.strategy));
  j["bias_scale"] = cfg.exporter.bias_scale;
  j["descriptor_length"] = cfg.exporter.descriptor_length;
  return j;
}

}  // namespace rlff
