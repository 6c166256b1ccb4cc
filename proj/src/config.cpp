#include "ovtrack/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "ovtrack/consistency.hpp"
#include "ovtrack/metrics.hpp"

namespace ovtrack {

namespace {

using nlohmann::json;

struct KeyEntry {
  std::string name;
  std::function<json(const Config&)> get;
  std::function<void(Config&, const json&)> set;
};

template <typename T>
T checked_get(const std::string& key, const json& value) {
  try {
    if constexpr (std::is_same_v<T, int64_t>) {
      if (!value.is_number_integer()) {
        throw std::invalid_argument("expected an integer");
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw std::invalid_argument("expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw std::invalid_argument("expected a string");
    } else {
      if (!value.is_array()) throw std::invalid_argument("expected an array");
    }
    return value.get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

template <typename T>
KeyEntry make_entry(const std::string& name, T Config::* member) {
  return KeyEntry{
      name,
      [member](const Config& c) { return json(c.*member); },
      [member, name](Config& c, const json& v) { c.*member = checked_get<T>(name, v); }};
}

const std::vector<KeyEntry>& registry() {
  static const std::vector<KeyEntry> entries = [] {
    std::vector<KeyEntry> r;
    r.push_back(make_entry("seed", &Config::seed));
    r.push_back(make_entry("n_scenes", &Config::n_scenes));
    r.push_back(make_entry("n_frames", &Config::n_frames));
    r.push_back(make_entry("dt_s", &Config::dt_s));
    r.push_back(make_entry("split", &Config::split));
    r.push_back(make_entry("d_max_m", &Config::d_max_m));
    r.push_back(make_entry("iou_min", &Config::iou_min));
    r.push_back(make_entry("max_age", &Config::max_age));
    r.push_back(make_entry("affinity_min", &Config::affinity_min));
    r.push_back(make_entry("affinity_kind", &Config::affinity_kind));
    r.push_back(make_entry("use_confidence_model", &Config::use_confidence_model));
    r.push_back(make_entry("min_iou_2d", &Config::min_iou_2d));
    r.push_back(make_entry("alpha_p", &Config::alpha_p));
    r.push_back(make_entry("beta_ar", &Config::beta_ar));
    r.push_back(make_entry("lambda_s", &Config::lambda_s));
    r.push_back(make_entry("lambda_c", &Config::lambda_c));
    r.push_back(make_entry("score_floor_2d", &Config::score_floor_2d));
    r.push_back(make_entry("consistency_rule", &Config::consistency_rule));
    r.push_back(make_entry("match_dist_m", &Config::match_dist_m));
    r.push_back(make_entry("n_recall_levels", &Config::n_recall_levels));
    r.push_back(make_entry("sim_world_extent_m", &Config::sim_world_extent_m));
    r.push_back(make_entry("sim_min_spawn_dist_m", &Config::sim_min_spawn_dist_m));
    r.push_back(make_entry("sim_count_bicycle", &Config::sim_count_bicycle));
    r.push_back(make_entry("sim_count_bus", &Config::sim_count_bus));
    r.push_back(make_entry("sim_count_car", &Config::sim_count_car));
    r.push_back(make_entry("sim_count_motorcycle", &Config::sim_count_motorcycle));
    r.push_back(make_entry("sim_count_pedestrian", &Config::sim_count_pedestrian));
    r.push_back(make_entry("sim_count_trailer", &Config::sim_count_trailer));
    r.push_back(make_entry("sim_count_truck", &Config::sim_count_truck));
    r.push_back(make_entry("sim_size_mean_bicycle", &Config::sim_size_mean_bicycle));
    r.push_back(make_entry("sim_size_mean_bus", &Config::sim_size_mean_bus));
    r.push_back(make_entry("sim_size_mean_car", &Config::sim_size_mean_car));
    r.push_back(make_entry("sim_size_mean_motorcycle", &Config::sim_size_mean_motorcycle));
    r.push_back(make_entry("sim_size_mean_pedestrian", &Config::sim_size_mean_pedestrian));
    r.push_back(make_entry("sim_size_mean_trailer", &Config::sim_size_mean_trailer));
    r.push_back(make_entry("sim_size_mean_truck", &Config::sim_size_mean_truck));
    r.push_back(make_entry("sim_size_sigma_frac", &Config::sim_size_sigma_frac));
    r.push_back(make_entry("sim_speed_min_mps", &Config::sim_speed_min_mps));
    r.push_back(make_entry("sim_speed_max_mps", &Config::sim_speed_max_mps));
    r.push_back(make_entry("sim_heading_jitter_rad", &Config::sim_heading_jitter_rad));
    r.push_back(make_entry("sim_late_spawn_prob", &Config::sim_late_spawn_prob));
    r.push_back(make_entry("sim_pos_sigma_m", &Config::sim_pos_sigma_m));
    r.push_back(make_entry("sim_size_noise_frac", &Config::sim_size_noise_frac));
    r.push_back(make_entry("sim_yaw_sigma_rad", &Config::sim_yaw_sigma_rad));
    r.push_back(make_entry("sim_vel_sigma_mps", &Config::sim_vel_sigma_mps));
    r.push_back(make_entry("sim_fp_rate", &Config::sim_fp_rate));
    r.push_back(make_entry("sim_fn_prob", &Config::sim_fn_prob));
    r.push_back(make_entry("sim_score_s0_m", &Config::sim_score_s0_m));
    r.push_back(make_entry("sim_score_noise", &Config::sim_score_noise));
    r.push_back(make_entry("sim_miss_prob", &Config::sim_miss_prob));
    r.push_back(make_entry("sim_mislabel_prob", &Config::sim_mislabel_prob));
    r.push_back(make_entry("sim_mislabel_classes", &Config::sim_mislabel_classes));
    r.push_back(make_entry("sim_mislabel_distance_extra",
                           &Config::sim_mislabel_distance_extra));
    r.push_back(make_entry("sim_pixel_jitter_px", &Config::sim_pixel_jitter_px));
    r.push_back(make_entry("sim_score_mean_2d", &Config::sim_score_mean_2d));
    r.push_back(make_entry("sim_score_sigma_2d", &Config::sim_score_sigma_2d));
    r.push_back(make_entry("sim_n_cameras", &Config::sim_n_cameras));
    r.push_back(make_entry("sim_fx_px", &Config::sim_fx_px));
    r.push_back(make_entry("sim_image_width_px", &Config::sim_image_width_px));
    r.push_back(make_entry("sim_image_height_px", &Config::sim_image_height_px));
    r.push_back(make_entry("sim_camera_height_m", &Config::sim_camera_height_m));
    std::sort(r.begin(), r.end(),
              [](const KeyEntry& a, const KeyEntry& b) { return a.name < b.name; });
    return r;
  }();
  return entries;
}

const KeyEntry* find_entry(const std::string& name) {
  const auto& r = registry();
  const auto it = std::lower_bound(
      r.begin(), r.end(), name,
      [](const KeyEntry& e, const std::string& n) { return e.name < n; });
  if (it == r.end() || it->name != name) return nullptr;
  return &*it;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void check_prob(double v, const std::string& key) {
  check(v >= 0.0 && v <= 1.0, "config key '" + key + "' must lie in [0, 1]");
}

void check_nonneg(double v, const std::string& key) {
  check(v >= 0.0, "config key '" + key + "' must be non-negative");
}

void check_pos(double v, const std::string& key) {
  check(v > 0.0, "config key '" + key + "' must be positive");
}

// Keys whose default values are tuning choices of this implementation rather
// than constants fixed by the scoring formulation; flagged in emitted configs
// so downstream consumers know which defaults are fair game to retune.
const std::vector<std::string>& design_decision_keys() {
  static const std::vector<std::string> keys = {
      "affinity_min", "iou_min",    "match_dist_m",
      "max_age",      "min_iou_2d", "n_recall_levels"};
  return keys;
}

}  // namespace

void Config::validate() const {
  check(n_scenes >= 1, "config key 'n_scenes' must be >= 1");
  check(n_frames >= 1, "config key 'n_frames' must be >= 1");
  check_pos(dt_s, "dt_s");
  split_by_name(split);  // throws with the valid names
  check_pos(d_max_m, "d_max_m");
  check(iou_min > 0.0 && iou_min < 1.0, "config key 'iou_min' must lie in (0, 1)");
  check(max_age >= 0, "config key 'max_age' must be >= 0");
  check_prob(affinity_min, "affinity_min");
  check(affinity_kind == "geometric" || affinity_kind == "learned_logistic",
        "config key 'affinity_kind' must be geometric or learned_logistic");
  check_prob(min_iou_2d, "min_iou_2d");
  check(alpha_p >= 0.0 && alpha_p < 1.0, "config key 'alpha_p' must lie in [0, 1)");
  check_pos(beta_ar, "beta_ar");
  check_pos(lambda_s, "lambda_s");
  check_nonneg(lambda_c, "lambda_c");
  check_prob(score_floor_2d, "score_floor_2d");
  combination_rule_from_string(consistency_rule);  // throws with valid names
  check_pos(match_dist_m, "match_dist_m");
  check(n_recall_levels >= 2, "config key 'n_recall_levels' must be >= 2");

  check_pos(sim_world_extent_m, "sim_world_extent_m");
  check(sim_min_spawn_dist_m >= 0.0 && sim_min_spawn_dist_m < sim_world_extent_m,
        "config key 'sim_min_spawn_dist_m' must lie in [0, sim_world_extent_m)");
  for (const auto& [key, count] :
       std::initializer_list<std::pair<std::string, int64_t>>{
           {"sim_count_bicycle", sim_count_bicycle},
           {"sim_count_bus", sim_count_bus},
           {"sim_count_car", sim_count_car},
           {"sim_count_motorcycle", sim_count_motorcycle},
           {"sim_count_pedestrian", sim_count_pedestrian},
           {"sim_count_trailer", sim_count_trailer},
           {"sim_count_truck", sim_count_truck}}) {
    check(count >= 0, "config key '" + key + "' must be >= 0");
  }
  for (const auto& [key, mean] :
       std::initializer_list<std::pair<std::string, const std::vector<double>*>>{
           {"sim_size_mean_bicycle", &sim_size_mean_bicycle},
           {"sim_size_mean_bus", &sim_size_mean_bus},
           {"sim_size_mean_car", &sim_size_mean_car},
           {"sim_size_mean_motorcycle", &sim_size_mean_motorcycle},
           {"sim_size_mean_pedestrian", &sim_size_mean_pedestrian},
           {"sim_size_mean_trailer", &sim_size_mean_trailer},
           {"sim_size_mean_truck", &sim_size_mean_truck}}) {
    check(mean->size() == 3, "config key '" + key + "' must be a [w, l, h] triple");
    for (double v : *mean) check_pos(v, key);
  }
  check_nonneg(sim_size_sigma_frac, "sim_size_sigma_frac");
  check(sim_speed_min_mps >= 0.0 && sim_speed_min_mps <= sim_speed_max_mps,
        "config keys 'sim_speed_min_mps'/'sim_speed_max_mps' must satisfy 0 <= min <= max");
  check_nonneg(sim_heading_jitter_rad, "sim_heading_jitter_rad");
  check_prob(sim_late_spawn_prob, "sim_late_spawn_prob");
  check_nonneg(sim_pos_sigma_m, "sim_pos_sigma_m");
  check_nonneg(sim_size_noise_frac, "sim_size_noise_frac");
  check_nonneg(sim_yaw_sigma_rad, "sim_yaw_sigma_rad");
  check_nonneg(sim_vel_sigma_mps, "sim_vel_sigma_mps");
  check_nonneg(sim_fp_rate, "sim_fp_rate");
  check_prob(sim_fn_prob, "sim_fn_prob");
  check_pos(sim_score_s0_m, "sim_score_s0_m");
  check_nonneg(sim_score_noise, "sim_score_noise");
  check_prob(sim_miss_prob, "sim_miss_prob");
  check_prob(sim_mislabel_prob, "sim_mislabel_prob");
  for (const std::string& c : sim_mislabel_classes) {
    const auto& classes = all_classes();
    check(std::find(classes.begin(), classes.end(), c) != classes.end(),
          "config key 'sim_mislabel_classes' contains unknown class '" + c + "'");
  }
  check_prob(sim_mislabel_distance_extra, "sim_mislabel_distance_extra");
  check_nonneg(sim_pixel_jitter_px, "sim_pixel_jitter_px");
  check_prob(sim_score_mean_2d, "sim_score_mean_2d");
  check_nonneg(sim_score_sigma_2d, "sim_score_sigma_2d");
  check(sim_n_cameras >= 1, "config key 'sim_n_cameras' must be >= 1");
  check_pos(sim_fx_px, "sim_fx_px");
  check(sim_image_width_px >= 1 && sim_image_height_px >= 1,
        "config keys 'sim_image_width_px'/'sim_image_height_px' must be >= 1");
  check_nonneg(sim_camera_height_m, "sim_camera_height_m");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const KeyEntry& e : registry()) keys.push_back(e.name);
  return keys;
}

nlohmann::json config_to_json(const Config& config) {
  json out = json::object();
  for (const KeyEntry& e : registry()) out[e.name] = e.get(config);
  return out;
}

LoadedConfig::LoadedConfig() {
  for (const KeyEntry& e : registry()) provenance[e.name] = "default";
}

void LoadedConfig::set_from_json(const std::string& key, const nlohmann::json& value,
                                 const std::string& source) {
  const KeyEntry* entry = find_entry(key);
  if (!entry) throw std::invalid_argument("unknown config key '" + key + "'");
  entry->set(values, value);
  provenance[key] = source;
}

nlohmann::json LoadedConfig::resolved_json() const {
  json out;
  out["values"] = config_to_json(values);
  out["provenance"] = provenance;
  out["design_decisions"] = design_decision_keys();
  return out;
}

LoadedConfig load_config(const std::optional<std::string>& path) {
  LoadedConfig loaded;

  if (path) {
    std::ifstream in(*path);
    if (!in) throw std::invalid_argument("cannot open config file '" + *path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config file '" + *path + "': " + e.what());
    }
    if (!doc.is_object()) {
      throw std::invalid_argument("config file '" + *path + "' must hold a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      loaded.set_from_json(key, value, "file");
    }
  }

  for (const KeyEntry& e : registry()) {
    std::string env_name = "OVTRACK_";
    for (char c : e.name) env_name.push_back(static_cast<char>(std::toupper(c)));
    const char* env = std::getenv(env_name.c_str());
    if (!env) continue;
    json value = json::parse(env, nullptr, false);
    if (value.is_discarded()) value = json(std::string(env));  // bare strings allowed
    loaded.set_from_json(e.name, value, "env");
  }

  loaded.values.validate();
  return loaded;
}

}  // namespace ovtrack
