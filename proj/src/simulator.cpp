#include "ovtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ovtrack {

std::vector<ClassSpec> SimConfig::default_classes() {
  return {
      {"car", 4, {1.95, 4.62, 1.73}},
      {"pedestrian", 3, {0.67, 0.73, 1.77}},
      {"truck", 2, {2.51, 6.93, 2.84}},
      {"bus", 1, {2.94, 11.0, 3.47}},
      {"bicycle", 1, {0.60, 1.70, 1.28}},
      {"motorcycle", 1, {0.77, 2.11, 1.46}},
      {"trailer", 1, {2.90, 12.29, 3.87}},
  };
}

void SimConfig::validate() const {
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(world_extent > 0.0)) throw std::invalid_argument("world_extent must be positive");
  if (!(min_spawn_dist >= 0.0 && min_spawn_dist < world_extent)) {
    throw std::invalid_argument("min_spawn_dist must lie in [0, world_extent)");
  }
  for (double p : {late_spawn_prob, fn_prob, miss_prob, mislabel_prob,
                   mislabel_distance_extra}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
  }
  for (double s : {size_sigma_frac, heading_jitter, pos_sigma, size_noise_frac,
                   yaw_sigma, vel_sigma, score_noise, pixel_jitter, score_sigma_2d}) {
    if (!(s >= 0.0)) throw std::invalid_argument("sigmas must be non-negative");
  }
  if (!(speed_min >= 0.0 && speed_min <= speed_max)) {
    throw std::invalid_argument("speed range must satisfy 0 <= min <= max");
  }
  if (!(fp_rate >= 0.0)) throw std::invalid_argument("fp_rate must be non-negative");
  if (!(score_s0 > 0.0)) throw std::invalid_argument("score_s0 must be positive");
  if (n_cameras < 1) throw std::invalid_argument("n_cameras must be >= 1");
  if (!(fx > 0.0)) throw std::invalid_argument("fx must be positive");
  if (image_width < 1 || image_height < 1) {
    throw std::invalid_argument("image dimensions must be >= 1");
  }
  if (!(camera_height >= 0.0)) throw std::invalid_argument("camera_height must be >= 0");
  if (!(score_floor_2d >= 0.0 && score_floor_2d <= 1.0)) {
    throw std::invalid_argument("score_floor_2d must lie in [0, 1]");
  }
  for (const ClassSpec& c : classes) {
    if (c.count < 0) throw std::invalid_argument("class counts must be >= 0");
    if (!(c.size_mean.minCoeff() > 0.0)) {
      throw std::invalid_argument("class size priors must be positive");
    }
  }
}

uint64_t scene_seed(uint64_t config_seed, int scene_index) {
  // splitmix64 of the combined words; decorrelates consecutive scene indices.
  uint64_t z = config_seed + 0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(scene_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::map<std::string, CameraCalib> make_camera_rig(const SimConfig& config) {
  std::map<std::string, CameraCalib> rig;
  for (int i = 0; i < config.n_cameras; ++i) {
    const double phi = 2.0 * kPi * i / config.n_cameras;
    // Rows are the camera axes in world coordinates: right, down, forward.
    Eigen::Matrix3d rotation;
    rotation << std::sin(phi), -std::cos(phi), 0.0,
                0.0,            0.0,          -1.0,
                std::cos(phi),  std::sin(phi), 0.0;
    const Eigen::Vector3d position(0.0, 0.0, config.camera_height);
    const Eigen::Vector3d translation = -rotation * position;
    rig.emplace("cam" + std::to_string(i),
                CameraCalib(config.fx, config.fx, config.image_width / 2.0,
                            config.image_height / 2.0, rotation, translation,
                            config.image_width, config.image_height));
  }
  return rig;
}

namespace {

struct SimObject {
  int64_t track_id = 0;
  std::string class_name;
  Eigen::Vector3d size{1, 1, 1};
  Eigen::Vector2d pos{0, 0};
  double yaw = 0.0;
  double speed = 0.0;
  int spawn_frame = 0;
  bool alive = true;
};

// Bit-portable samplers. mt19937_64's output sequence is fixed by the
// standard but the std:: distributions are not, so scenes generated through
// them could differ across standard libraries. These transforms pin every
// draw to the raw engine output.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // 53-bit, in [0, 1)
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double normal(std::mt19937_64& rng) {
  // Box-Muller with two fresh draws per variate; no cached spare, no state.
  const double u1 = 1.0 - uniform01(rng);  // (0, 1] keeps the log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

int poisson(std::mt19937_64& rng, double mean) {
  // Knuth's multiplication method over chunks of at most 16 so exp(-chunk)
  // stays far from underflow at any configured rate.
  int total = 0;
  while (mean > 0.0) {
    const double chunk = std::min(mean, 16.0);
    mean -= chunk;
    const double limit = std::exp(-chunk);
    int k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform01(rng);
    } while (prod > limit);
    total += k - 1;
  }
  return total;
}

}  // namespace

std::vector<std::vector<Detection3D>> corrupt_3d(
    const std::vector<std::vector<GtBox>>& gt_frames, const SimConfig& config,
    std::mt19937_64& rng) {
  config.validate();
  std::vector<std::vector<Detection3D>> frames(gt_frames.size());

  for (size_t f = 0; f < gt_frames.size(); ++f) {
    int next_id = 0;
    for (const GtBox& gt : gt_frames[f]) {
      if (config.fn_prob > 0.0 && uniform01(rng) < config.fn_prob) continue;
      const Eigen::Vector3d pos_err(normal(rng) * config.pos_sigma,
                                    normal(rng) * config.pos_sigma,
                                    normal(rng) * config.pos_sigma * 0.3);
      Eigen::Vector3d size = gt.box.size;
      for (int k = 0; k < 3; ++k) {
        size[k] = std::max(0.05, size[k] * (1.0 + normal(rng) * config.size_noise_frac));
      }
      const double yaw = gt.box.yaw + normal(rng) * config.yaw_sigma;
      const Eigen::Vector2d velocity =
          gt.box.velocity + Eigen::Vector2d(normal(rng), normal(rng)) * config.vel_sigma;

      Detection3D det;
      det.box = Box3D(gt.box.center + pos_err, size, yaw, velocity);
      det.frame_index = static_cast<int>(f);
      det.detection_id = next_id++;
      det.class_name = gt.class_name;
      det.source_score = std::clamp(
          1.0 - pos_err.norm() / config.score_s0 + normal(rng) * config.score_noise, 0.0,
          1.0);
      frames[f].push_back(std::move(det));
    }

    const int n_fp = config.fp_rate > 0.0 ? poisson(rng, config.fp_rate) : 0;
    for (int k = 0; k < n_fp; ++k) {
      const ClassSpec& spec =
          config.classes[static_cast<size_t>(uniform(rng, 0.0, 1.0) * config.classes.size()) %
                         config.classes.size()];
      Eigen::Vector3d size = spec.size_mean;
      for (int j = 0; j < 3; ++j) {
        size[j] = std::max(0.05, size[j] * (1.0 + normal(rng) * config.size_sigma_frac));
      }
      const Eigen::Vector3d center(uniform(rng, -config.world_extent, config.world_extent),
                                   uniform(rng, -config.world_extent, config.world_extent),
                                   size.z() / 2.0);
      const double yaw = uniform(rng, -kPi, kPi);
      const Eigen::Vector2d velocity(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));

      double nearest = 1e9;
      for (const GtBox& gt : gt_frames[f]) {
        nearest = std::min(nearest, (gt.box.center - center).norm());
      }
      Detection3D det;
      det.box = Box3D(center, size, yaw, velocity);
      det.frame_index = static_cast<int>(f);
      det.detection_id = next_id++;
      det.class_name = spec.name;
      det.source_score = std::clamp(
          1.0 - nearest / config.score_s0 + normal(rng) * config.score_noise, 0.0, 1.0);
      frames[f].push_back(std::move(det));
    }
  }
  return frames;
}

std::vector<std::vector<Detection2D>> corrupt_2d(
    const std::vector<std::vector<GtBox>>& gt_frames,
    const std::map<std::string, CameraCalib>& calibs, const SimConfig& config,
    std::mt19937_64& rng) {
  config.validate();

  const std::vector<std::string>& classes = all_classes();
  auto other_class = [&](const std::string& cls, double u) {
    std::vector<std::string> others;
    for (const std::string& c : classes) {
      if (c != cls) others.push_back(c);
    }
    return others[std::min(others.size() - 1,
                           static_cast<size_t>(u * static_cast<double>(others.size())))];
  };
  auto eligible = [&](const std::string& cls) {
    return config.mislabel_classes.empty() ||
           std::find(config.mislabel_classes.begin(), config.mislabel_classes.end(),
                     cls) != config.mislabel_classes.end();
  };

  // Persistent confusion target per ground-truth track, pre-sampled in sorted
  // id order so the draw sequence does not depend on visibility.
  std::map<int64_t, std::string> confusion_target;
  {
    std::set<std::pair<int64_t, std::string>> ids;
    for (const auto& frame : gt_frames) {
      for (const GtBox& gt : frame) ids.emplace(gt.track_id, gt.class_name);
    }
    for (const auto& [id, cls] : ids) {
      confusion_target[id] = other_class(cls, uniform(rng, 0.0, 1.0));
    }
  }

  std::vector<std::vector<Detection2D>> frames(gt_frames.size());
  for (size_t f = 0; f < gt_frames.size(); ++f) {
    for (const auto& [camera_id, calib] : calibs) {
      for (const GtBox& gt : gt_frames[f]) {
        const auto proj = project_box_to_image(gt.box, calib);
        if (!proj) continue;
        if (config.miss_prob > 0.0 && uniform(rng, 0.0, 1.0) < config.miss_prob) continue;

        double x1 = proj->x1 + normal(rng) * config.pixel_jitter;
        double y1 = proj->y1 + normal(rng) * config.pixel_jitter;
        double x2 = proj->x2 + normal(rng) * config.pixel_jitter;
        double y2 = proj->y2 + normal(rng) * config.pixel_jitter;
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        x1 = std::clamp(x1, 0.0, static_cast<double>(calib.image_width));
        x2 = std::clamp(x2, 0.0, static_cast<double>(calib.image_width));
        y1 = std::clamp(y1, 0.0, static_cast<double>(calib.image_height));
        y2 = std::clamp(y2, 0.0, static_cast<double>(calib.image_height));
        if (x2 - x1 < 0.5 || y2 - y1 < 0.5) continue;

        std::string label = gt.class_name;
        if (eligible(label)) {
          if (config.mislabel_prob > 0.0 && uniform(rng, 0.0, 1.0) < config.mislabel_prob) {
            label = other_class(label, uniform(rng, 0.0, 1.0));
          } else if (config.mislabel_distance_extra > 0.0) {
            // Cubic growth keeps mid-range labels mostly clean while the
            // confusion rate saturates toward the world edge.
            const double t = std::clamp(
                gt.box.center.head<2>().norm() / config.world_extent, 0.0, 1.0);
            if (uniform(rng, 0.0, 1.0) < config.mislabel_distance_extra * t * t * t) {
              label = confusion_target.at(gt.track_id);
            }
          }
        }

        Detection2D det;
        det.camera_id = camera_id;
        det.frame_index = static_cast<int>(f);
        det.box = Box2D(x1, y1, x2, y2);
        det.class_name = label;
        det.score = std::clamp(config.score_mean_2d + normal(rng) * config.score_sigma_2d,
                               config.score_floor_2d, 1.0);
        frames[f].push_back(std::move(det));
      }
    }
  }
  return frames;
}

SimScene generate_scene(const SimConfig& config, int scene_index) {
  config.validate();
  std::mt19937_64 rng(scene_seed(config.seed, scene_index));

  std::vector<SimObject> objects;
  int64_t next_id = 1;
  for (const ClassSpec& spec : config.classes) {
    for (int k = 0; k < spec.count; ++k) {
      SimObject obj;
      obj.track_id = next_id++;
      obj.class_name = spec.name;
      for (int j = 0; j < 3; ++j) {
        obj.size[j] =
            std::max(0.05, spec.size_mean[j] * (1.0 + normal(rng) * config.size_sigma_frac));
      }
      const double r = uniform(rng, config.min_spawn_dist, config.world_extent * 0.95);
      const double theta = uniform(rng, -kPi, kPi);
      obj.pos = Eigen::Vector2d(r * std::cos(theta), r * std::sin(theta));
      obj.yaw = uniform(rng, -kPi, kPi);
      obj.speed = uniform(rng, config.speed_min, config.speed_max);
      obj.spawn_frame = 0;
      if (config.n_frames > 4 && uniform(rng, 0.0, 1.0) < config.late_spawn_prob) {
        obj.spawn_frame = 1 + static_cast<int>(uniform(rng, 0.0, 1.0) * (config.n_frames / 2));
      }
      objects.push_back(std::move(obj));
    }
  }

  SimScene scene;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03d", scene_index);
  scene.scene_id = buf;
  scene.n_frames = config.n_frames;
  scene.calibs = make_camera_rig(config);
  scene.gt_frames.resize(config.n_frames);

  for (int f = 0; f < config.n_frames; ++f) {
    for (SimObject& obj : objects) {
      if (!obj.alive || f < obj.spawn_frame) continue;
      if (f > obj.spawn_frame) {
        const Eigen::Vector2d vel(obj.speed * std::cos(obj.yaw),
                                  obj.speed * std::sin(obj.yaw));
        obj.pos += vel * config.dt;
        obj.yaw = normalize_angle(obj.yaw + normal(rng) * config.heading_jitter);
        if (std::abs(obj.pos.x()) > config.world_extent ||
            std::abs(obj.pos.y()) > config.world_extent) {
          obj.alive = false;
          continue;
        }
      }
      const Eigen::Vector2d velocity(obj.speed * std::cos(obj.yaw),
                                     obj.speed * std::sin(obj.yaw));
      GtBox gt;
      gt.box = Box3D(Eigen::Vector3d(obj.pos.x(), obj.pos.y(), obj.size.z() / 2.0),
                     obj.size, obj.yaw, velocity);
      gt.track_id = obj.track_id;
      gt.class_name = obj.class_name;
      scene.gt_frames[f].push_back(std::move(gt));
    }
  }

  scene.det3d_frames = corrupt_3d(scene.gt_frames, config, rng);
  scene.det2d_frames = corrupt_2d(scene.gt_frames, scene.calibs, config, rng);
  return scene;
}

}  // namespace ovtrack
