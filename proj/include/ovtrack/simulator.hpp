#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ovtrack/geometry.hpp"
#include "ovtrack/metrics.hpp"
#include "ovtrack/types.hpp"

namespace ovtrack {

struct ClassSpec {
  std::string name;
  int count = 0;
  Eigen::Vector3d size_mean{1.0, 1.0, 1.0};  // (w, l, h), metres
};

// All knobs of the synthetic scene generator. Defaults give a moderate-noise
// scenario; zeroing every sigma/probability yields detections identical to
// ground truth.
struct SimConfig {
  uint64_t seed = 1;
  int n_frames = 40;
  double dt = 0.5;                 // seconds per frame
  double world_extent = 60.0;      // half-extent of the square world, metres
  double min_spawn_dist = 8.0;     // metres from the rig at spawn
  std::vector<ClassSpec> classes;  // object population per class

  // trajectory generation
  double size_sigma_frac = 0.05;   // spawn-time size variation
  double speed_min = 0.5;          // m/s
  double speed_max = 8.0;
  double heading_jitter = 0.02;    // radians per frame
  double late_spawn_prob = 0.3;    // chance an object enters mid-scene

  // 3D proposal corruption
  double pos_sigma = 0.3;          // metres (x, y; z uses 0.3x)
  double size_noise_frac = 0.05;
  double yaw_sigma = 0.05;         // radians
  double vel_sigma = 0.2;          // m/s per component
  double fp_rate = 1.0;            // Poisson mean false boxes per frame
  double fn_prob = 0.05;           // per-object drop probability
  double score_s0 = 2.0;           // metres; source_score = 1 - err/s0 + noise
  double score_noise = 0.05;

  // 2D detection corruption
  double miss_prob = 0.1;
  double mislabel_prob = 0.1;          // uniform confusion to another class
  std::vector<std::string> mislabel_classes;  // empty = every class eligible
  double mislabel_distance_extra = 0.0;  // extra far-range systematic confusion
  double pixel_jitter = 4.0;           // corner jitter sigma, pixels
  double score_mean_2d = 0.75;
  double score_sigma_2d = 0.1;
  double score_floor_2d = 0.01;

  // camera rig: n cameras evenly spaced in azimuth, co-located at the origin
  int n_cameras = 6;
  double fx = 1266.0;              // = fy, pixels
  int image_width = 1600;
  int image_height = 900;
  double camera_height = 1.5;      // metres above ground

  static std::vector<ClassSpec> default_classes();
  void validate() const;
};

struct SimScene {
  std::string scene_id;
  int n_frames = 0;
  std::map<std::string, CameraCalib> calibs;
  std::vector<std::vector<GtBox>> gt_frames;
  std::vector<std::vector<Detection3D>> det3d_frames;
  std::vector<std::vector<Detection2D>> det2d_frames;
};

// Deterministic per-scene seed derived from the config seed and scene index.
uint64_t scene_seed(uint64_t config_seed, int scene_index);

// Cameras "cam0".."camN-1" at yaw i * 2pi/N, co-located at the origin at
// camera_height; +z optical axis, +x right, +y down.
std::map<std::string, CameraCalib> make_camera_rig(const SimConfig& config);

// Noisy 3D proposals from ground truth: Gaussian center/size/yaw/velocity
// perturbation, Bernoulli drops, Poisson uniform false positives. Every
// detection carries a claimed class (true class; random for false positives)
// and a source_score = clamp(1 - |position error| / s0 + noise, 0, 1).
std::vector<std::vector<Detection3D>> corrupt_3d(
    const std::vector<std::vector<GtBox>>& gt_frames, const SimConfig& config,
    std::mt19937_64& rng);

// Corrupted per-camera 2D detections: project each ground-truth box into each
// camera, drop with miss_prob, jitter corners, mislabel per config, sample a
// score clamped to [score_floor_2d, 1]. Mislabeling has a uniform per-box
// component plus an optional distance-growing component that confuses an
// object to one persistent wrong class (far-away labels are less reliable).
std::vector<std::vector<Detection2D>> corrupt_2d(
    const std::vector<std::vector<GtBox>>& gt_frames,
    const std::map<std::string, CameraCalib>& calibs, const SimConfig& config,
    std::mt19937_64& rng);

// Full scene: constant-velocity ground-truth trajectories with heading
// jitter (objects despawn on leaving the world extent, some spawn late), plus
// corrupted 3D and 2D detection sets. Deterministic given (config, index).
SimScene generate_scene(const SimConfig& config, int scene_index);

}  // namespace ovtrack
