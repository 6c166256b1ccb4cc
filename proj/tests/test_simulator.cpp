#include "ovtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"

using namespace ovtrack;

namespace {

SimConfig small_config() {
  SimConfig config;
  config.n_frames = 12;
  config.classes = {{"car", 4, {1.9, 4.6, 1.7}}, {"pedestrian", 3, {0.7, 0.7, 1.8}}};
  return config;
}

SimConfig noiseless(SimConfig config) {
  config.pos_sigma = 0.0;
  config.size_noise_frac = 0.0;
  config.yaw_sigma = 0.0;
  config.vel_sigma = 0.0;
  config.fp_rate = 0.0;
  config.fn_prob = 0.0;
  config.score_noise = 0.0;
  config.miss_prob = 0.0;
  config.mislabel_prob = 0.0;
  config.mislabel_distance_extra = 0.0;
  config.pixel_jitter = 0.0;
  config.score_sigma_2d = 0.0;
  return config;
}

bool same_box(const Box3D& a, const Box3D& b) {
  return a.center == b.center && a.size == b.size && a.yaw == b.yaw &&
         a.velocity == b.velocity;
}

}  // namespace

TEST_CASE("scene_seed: distinct per scene, stable across calls") {
  std::set<uint64_t> seeds;
  for (int i = 0; i < 100; ++i) seeds.insert(scene_seed(42, i));
  CHECK(seeds.size() == 100);
  CHECK(scene_seed(42, 7) == scene_seed(42, 7));
  CHECK(scene_seed(42, 7) != scene_seed(43, 7));
}

TEST_CASE("make_camera_rig: six forward cameras covering the circle") {
  const SimConfig config = small_config();
  const auto rig = make_camera_rig(config);
  REQUIRE(rig.size() == 6);
  for (const auto& [name, calib] : rig) {
    CHECK(calib.image_width == config.image_width);
    CHECK(calib.image_height == config.image_height);
    CHECK(calib.fx == doctest::Approx(config.fx));
    // Rotation matrices are orthonormal with determinant 1.
    CHECK((calib.rotation * calib.rotation.transpose() - Eigen::Matrix3d::Identity())
              .norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(calib.rotation.determinant() == doctest::Approx(1.0));
  }
  // A nearby object is visible in at least one camera of the full rig.
  const bool visible_somewhere = [&] {
    for (const auto& [name, calib] : rig) {
      if (project_box_to_image(Box3D(Eigen::Vector3d(0.0, 20.0, 0.9),
                                     Eigen::Vector3d(1.9, 4.6, 1.7), 0.0),
                               calib)) {
        return true;
      }
    }
    return false;
  }();
  CHECK(visible_somewhere);
}

TEST_CASE("generate_scene: identical seeds give bit-identical scenes") {
  const SimConfig config = small_config();
  const SimScene a = generate_scene(config, 3);
  const SimScene b = generate_scene(config, 3);
  CHECK(a.scene_id == b.scene_id);
  REQUIRE(a.gt_frames.size() == b.gt_frames.size());
  for (size_t f = 0; f < a.gt_frames.size(); ++f) {
    REQUIRE(a.gt_frames[f].size() == b.gt_frames[f].size());
    for (size_t i = 0; i < a.gt_frames[f].size(); ++i) {
      CHECK(same_box(a.gt_frames[f][i].box, b.gt_frames[f][i].box));
      CHECK(a.gt_frames[f][i].track_id == b.gt_frames[f][i].track_id);
    }
    REQUIRE(a.det3d_frames[f].size() == b.det3d_frames[f].size());
    for (size_t i = 0; i < a.det3d_frames[f].size(); ++i) {
      CHECK(same_box(a.det3d_frames[f][i].box, b.det3d_frames[f][i].box));
      CHECK(a.det3d_frames[f][i].source_score == b.det3d_frames[f][i].source_score);
    }
    REQUIRE(a.det2d_frames[f].size() == b.det2d_frames[f].size());
    for (size_t i = 0; i < a.det2d_frames[f].size(); ++i) {
      CHECK(a.det2d_frames[f][i].class_name == b.det2d_frames[f][i].class_name);
      CHECK(a.det2d_frames[f][i].score == b.det2d_frames[f][i].score);
      CHECK(a.det2d_frames[f][i].box.x1 == b.det2d_frames[f][i].box.x1);
    }
  }

  // Different scene indices decorrelate.
  const SimScene c = generate_scene(config, 4);
  CHECK(c.scene_id != a.scene_id);
  bool any_difference = c.gt_frames[0].size() != a.gt_frames[0].size();
  if (!any_difference) {
    for (size_t i = 0; i < a.gt_frames[0].size(); ++i) {
      if (!same_box(a.gt_frames[0][i].box, c.gt_frames[0][i].box)) any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("generate_scene: structural invariants of the ground truth") {
  const SimConfig config = small_config();
  const SimScene scene = generate_scene(config, 0);
  CHECK(scene.n_frames == config.n_frames);
  CHECK(scene.gt_frames.size() == static_cast<size_t>(config.n_frames));
  CHECK(scene.calibs.size() == 6);

  std::map<int64_t, int> last_seen;
  std::map<int64_t, std::string> class_of;
  for (int f = 0; f < scene.n_frames; ++f) {
    std::set<int64_t> in_frame;
    for (const GtBox& g : scene.gt_frames[f]) {
      CHECK(in_frame.insert(g.track_id).second);  // unique ids per frame
      CHECK(std::abs(g.box.center.x()) <= config.world_extent);
      CHECK(std::abs(g.box.center.y()) <= config.world_extent);
      const auto it = class_of.find(g.track_id);
      if (it == class_of.end()) {
        class_of[g.track_id] = g.class_name;
      } else {
        CHECK(it->second == g.class_name);  // class is constant per track
      }
      // Tracks are contiguous: once gone they never return.
      const auto seen = last_seen.find(g.track_id);
      if (seen != last_seen.end()) CHECK(seen->second == f - 1);
      last_seen[g.track_id] = f;
    }
  }

  std::map<std::string, int> per_class;
  for (const auto& [id, cls] : class_of) per_class[cls] += 1;
  CHECK(per_class.at("car") == 4);
  CHECK(per_class.at("pedestrian") == 3);
}

TEST_CASE("corrupt_3d: noiseless config reproduces ground truth exactly") {
  const SimConfig config = noiseless(small_config());
  const SimScene scene = generate_scene(config, 1);
  REQUIRE(scene.det3d_frames.size() == scene.gt_frames.size());
  for (size_t f = 0; f < scene.gt_frames.size(); ++f) {
    REQUIRE(scene.det3d_frames[f].size() == scene.gt_frames[f].size());
    for (size_t i = 0; i < scene.gt_frames[f].size(); ++i) {
      CHECK(same_box(scene.det3d_frames[f][i].box, scene.gt_frames[f][i].box));
      CHECK(*scene.det3d_frames[f][i].class_name == scene.gt_frames[f][i].class_name);
      CHECK(*scene.det3d_frames[f][i].source_score == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("corrupt_2d: noiseless labels match the projected class") {
  const SimConfig config = noiseless(small_config());
  const SimScene scene = generate_scene(config, 1);
  std::set<std::string> seen_classes;
  int n_2d = 0;
  for (const auto& frame : scene.det2d_frames) {
    for (const Detection2D& d : frame) {
      ++n_2d;
      seen_classes.insert(d.class_name);
      CHECK(d.score == doctest::Approx(config.score_mean_2d));
      CHECK(scene.calibs.count(d.camera_id) == 1);
      CHECK(d.box.area() > 0.0);
    }
  }
  CHECK(n_2d > 0);
  for (const std::string& cls : seen_classes) {
    CHECK((cls == "car" || cls == "pedestrian"));
  }
}

TEST_CASE("corrupt_3d: false positive count follows the configured rate") {
  // With everything else off, detections beyond the ground-truth count are
  // exactly the Poisson false positives. Mean over many scenes must approach
  // n_frames * fp_rate; 100 scenes at mean 24 gives sd ~0.5, so +-2.5 is a
  // 5-sigma band.
  SimConfig config = noiseless(small_config());
  config.n_frames = 12;
  config.fp_rate = 2.0;
  double total_fp = 0.0;
  int scenes = 0;
  for (int i = 0; i < 100; ++i) {
    const SimScene scene = generate_scene(config, i);
    for (size_t f = 0; f < scene.gt_frames.size(); ++f) {
      total_fp += static_cast<double>(scene.det3d_frames[f].size()) -
                  static_cast<double>(scene.gt_frames[f].size());
    }
    ++scenes;
  }
  const double mean_fp_per_scene = total_fp / scenes;
  CHECK(mean_fp_per_scene > 24.0 - 2.5);
  CHECK(mean_fp_per_scene < 24.0 + 2.5);
}

TEST_CASE("corrupt_3d: drop probability one removes every true detection") {
  SimConfig config = noiseless(small_config());
  config.fn_prob = 1.0;
  const SimScene scene = generate_scene(config, 2);
  for (const auto& frame : scene.det3d_frames) CHECK(frame.empty());
}

TEST_CASE("corrupt_2d: miss probability one removes every 2D detection") {
  SimConfig config = noiseless(small_config());
  config.miss_prob = 1.0;
  const SimScene scene = generate_scene(config, 2);
  for (const auto& frame : scene.det2d_frames) CHECK(frame.empty());
}

TEST_CASE("corrupt_2d: per-detection mislabel frequency matches the probability") {
  // Single-object world: every 2D detection stems from that one object, so a
  // label differing from its class is exactly a mislabel event.
  SimConfig config = noiseless(SimConfig{});
  config.n_frames = 40;
  config.classes = {{"car", 1, {1.9, 4.6, 1.7}}};
  config.mislabel_prob = 0.25;
  config.speed_min = 0.0;
  config.speed_max = 0.5;
  config.late_spawn_prob = 0.0;

  int wrong = 0, total = 0;
  std::map<std::string, int> wrong_into;
  for (int i = 0; i < 60; ++i) {
    const SimScene scene = generate_scene(config, i);
    for (const auto& frame : scene.det2d_frames) {
      for (const Detection2D& d : frame) {
        ++total;
        if (d.class_name != "car") {
          ++wrong;
          wrong_into[d.class_name] += 1;
        }
      }
    }
  }
  REQUIRE(total > 500);
  const double rate = static_cast<double>(wrong) / total;
  // Binomial sd at n >= 500 is < 0.02; allow five of those.
  CHECK(rate > 0.25 - 0.1);
  CHECK(rate < 0.25 + 0.1);
  // Uniform confusion: all six other classes appear.
  CHECK(wrong_into.size() == 6);
  for (const auto& [cls, n] : wrong_into) {
    CHECK(cls != "car");
    CHECK(static_cast<double>(n) / wrong > 1.0 / 6.0 - 0.12);
    CHECK(static_cast<double>(n) / wrong < 1.0 / 6.0 + 0.12);
  }
}

TEST_CASE("corrupt_2d: distance-dependent confusion grows with range") {
  // Restrict eligibility to pedestrians and give the distance component full
  // strength: far pedestrians flip to one persistent wrong class while near
  // ones stay mostly correct.
  SimConfig config = noiseless(SimConfig{});
  config.n_frames = 30;
  config.world_extent = 50.0;
  config.classes = {{"pedestrian", 6, {0.7, 0.7, 1.8}}};
  config.mislabel_prob = 0.0;
  config.mislabel_classes = {"pedestrian"};
  config.mislabel_distance_extra = 1.0;
  config.speed_min = 0.0;
  config.speed_max = 0.5;
  config.late_spawn_prob = 0.0;

  int near_total = 0, near_wrong = 0, far_total = 0, far_wrong = 0;
  for (int i = 0; i < 40; ++i) {
    const SimScene scene = generate_scene(config, i);
    // Recover each detection's source object by projecting ground truth and
    // taking the best 2D overlap (noiseless: jitter-free projections).
    for (size_t f = 0; f < scene.gt_frames.size(); ++f) {
      for (const Detection2D& d : scene.det2d_frames[f]) {
        const CameraCalib& calib = scene.calibs.at(d.camera_id);
        double best_iou = 0.0;
        const GtBox* src = nullptr;
        for (const GtBox& g : scene.gt_frames[f]) {
          const auto proj = project_box_to_image(g.box, calib);
          if (!proj) continue;
          const double iou = iou_2d(*proj, d.box);
          if (iou > best_iou) {
            best_iou = iou;
            src = &g;
          }
        }
        if (!src || best_iou < 0.99) continue;
        const double range = src->box.center.head<2>().norm();
        if (range < 15.0) {
          ++near_total;
          if (d.class_name != "pedestrian") ++near_wrong;
        } else if (range > 35.0) {
          ++far_total;
          if (d.class_name != "pedestrian") ++far_wrong;
        }
      }
    }
  }
  REQUIRE(near_total > 100);
  REQUIRE(far_total > 100);
  const double near_rate = static_cast<double>(near_wrong) / near_total;
  const double far_rate = static_cast<double>(far_wrong) / far_total;
  CHECK(near_rate < 0.1);
  CHECK(far_rate > near_rate + 0.2);
}

TEST_CASE("simulator config validation rejects nonsense") {
  SimConfig config = small_config();
  config.n_frames = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = small_config();
  config.fn_prob = 1.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = small_config();
  config.speed_min = 5.0;
  config.speed_max = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = small_config();
  config.n_cameras = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
