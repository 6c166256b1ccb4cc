#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ovtrack {

// Flat key-value configuration for the whole pipeline. Key names carry units
// (suffix _m, _s, _px, _mps, _rad). Unknown keys in a config file are hard
// errors; every key can be overridden through an OVTRACK_<UPPERCASE_KEY>
// environment variable.
struct Config {
  // general
  int64_t seed = 1;
  int64_t n_scenes = 5;
  int64_t n_frames = 40;
  double dt_s = 0.5;
  std::string split = "rare";

  // tracker
  double d_max_m = 3.0;
  double iou_min = 0.1;
  int64_t max_age = 3;
  double affinity_min = 0.05;
  std::string affinity_kind = "geometric";  // or learned_logistic
  bool use_confidence_model = true;

  // labeling + consistency scoring
  double min_iou_2d = 0.0;
  double alpha_p = 0.2;
  double beta_ar = 2.5;
  double lambda_s = 250.0;
  double lambda_c = 0.5;
  double score_floor_2d = 0.01;
  std::string consistency_rule = "mean_times_frequency";

  // evaluation
  double match_dist_m = 2.0;
  int64_t n_recall_levels = 40;

  // simulator: world and population
  double sim_world_extent_m = 60.0;
  double sim_min_spawn_dist_m = 8.0;
  int64_t sim_count_bicycle = 1;
  int64_t sim_count_bus = 1;
  int64_t sim_count_car = 4;
  int64_t sim_count_motorcycle = 1;
  int64_t sim_count_pedestrian = 3;
  int64_t sim_count_trailer = 1;
  int64_t sim_count_truck = 2;
  std::vector<double> sim_size_mean_bicycle = {0.60, 1.70, 1.28};
  std::vector<double> sim_size_mean_bus = {2.94, 11.0, 3.47};
  std::vector<double> sim_size_mean_car = {1.95, 4.62, 1.73};
  std::vector<double> sim_size_mean_motorcycle = {0.77, 2.11, 1.46};
  std::vector<double> sim_size_mean_pedestrian = {0.67, 0.73, 1.77};
  std::vector<double> sim_size_mean_trailer = {2.90, 12.29, 3.87};
  std::vector<double> sim_size_mean_truck = {2.51, 6.93, 2.84};
  double sim_size_sigma_frac = 0.05;
  double sim_speed_min_mps = 0.5;
  double sim_speed_max_mps = 8.0;
  double sim_heading_jitter_rad = 0.02;
  double sim_late_spawn_prob = 0.3;

  // simulator: 3D proposal corruption
  double sim_pos_sigma_m = 0.3;
  double sim_size_noise_frac = 0.05;
  double sim_yaw_sigma_rad = 0.05;
  double sim_vel_sigma_mps = 0.2;
  double sim_fp_rate = 1.0;
  double sim_fn_prob = 0.05;
  double sim_score_s0_m = 2.0;
  double sim_score_noise = 0.05;

  // simulator: 2D detection corruption
  double sim_miss_prob = 0.1;
  double sim_mislabel_prob = 0.1;
  std::vector<std::string> sim_mislabel_classes = {};
  double sim_mislabel_distance_extra = 0.0;
  double sim_pixel_jitter_px = 4.0;
  double sim_score_mean_2d = 0.75;
  double sim_score_sigma_2d = 0.1;

  // simulator: camera rig
  int64_t sim_n_cameras = 6;
  double sim_fx_px = 1266.0;
  int64_t sim_image_width_px = 1600;
  int64_t sim_image_height_px = 900;
  double sim_camera_height_m = 1.5;

  // Throws std::invalid_argument naming the offending key.
  void validate() const;
};

// All defined keys, sorted.
std::vector<std::string> config_keys();

nlohmann::json config_to_json(const Config& config);

// A config plus where each key's value came from: "default", "file", "env",
// or "override" (programmatic / CLI).
struct LoadedConfig {
  Config values;
  std::map<std::string, std::string> provenance;

  LoadedConfig();
  void set_from_json(const std::string& key, const nlohmann::json& value,
                     const std::string& source);
  nlohmann::json resolved_json() const;  // {"values": ..., "provenance": ...}
};

// Defaults -> optional JSON file -> OVTRACK_* environment overrides, then
// validation. Unknown keys and malformed values raise std::invalid_argument
// naming the key.
LoadedConfig load_config(const std::optional<std::string>& path);

}  // namespace ovtrack
