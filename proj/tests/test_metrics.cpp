#include "ovtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

using namespace ovtrack;

namespace {

Box3D box_at(double x, double y) {
  return Box3D(Eigen::Vector3d(x, y, 0.5), Eigen::Vector3d(2.0, 4.0, 1.5), 0.0);
}

GtBox gt(double x, double y, int64_t id, const std::string& cls = "car") {
  return GtBox{box_at(x, y), id, cls};
}

PredBox pred(double x, double y, int64_t id, double score,
             const std::string& cls = "car") {
  return PredBox{box_at(x, y), id, cls, score};
}

// A scene where `n` parallel tracks of one class move +x at 1 m/frame and the
// predictions reproduce them exactly, each with the given per-track score.
EvalScene perfect_scene(const std::string& scene_id, int n_tracks, int n_frames,
                        const std::vector<double>& scores,
                        const std::string& cls = "car") {
  EvalScene scene;
  scene.scene_id = scene_id;
  scene.gt_frames.resize(n_frames);
  scene.pred_frames.resize(n_frames);
  for (int f = 0; f < n_frames; ++f) {
    for (int t = 0; t < n_tracks; ++t) {
      scene.gt_frames[f].push_back(gt(1.0 * f, 6.0 * t, 1000 + t, cls));
      scene.pred_frames[f].push_back(pred(1.0 * f, 6.0 * t, 1 + t, scores[t], cls));
    }
  }
  return scene;
}

}  // namespace

TEST_CASE("match_frame: exact predictions count as pure true positives") {
  const std::vector<GtBox> gts = {gt(0, 0, 1), gt(10, 0, 2), gt(0, 10, 3)};
  std::vector<PredBox> preds;
  for (const GtBox& g : gts) preds.push_back(pred(g.box.center.x(), g.box.center.y(),
                                                  g.track_id + 100, 0.9));
  std::map<int64_t, int64_t> last;
  std::vector<int> matched;
  const FrameCounts c = match_frame(gts, preds, 2.0, last, &matched);
  CHECK(c.tp == 3);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  CHECK(c.ids == 0);
  CHECK(c.dist_sum == doctest::Approx(0.0));
  CHECK(matched.size() == 3);
}

TEST_CASE("match_frame: no predictions means one miss per ground truth") {
  const std::vector<GtBox> gts = {gt(0, 0, 1), gt(5, 0, 2)};
  std::map<int64_t, int64_t> last;
  const FrameCounts c = match_frame(gts, {}, 2.0, last);
  CHECK(c.tp == 0);
  CHECK(c.fn == 2);
  CHECK(c.fp == 0);
}

TEST_CASE("match_frame: distance gate is inclusive at the boundary") {
  const std::vector<GtBox> gts = {gt(0, 0, 1)};
  std::map<int64_t, int64_t> last;
  const FrameCounts in = match_frame(gts, {pred(2.0, 0, 7, 0.9)}, 2.0, last);
  CHECK(in.tp == 1);
  CHECK(in.dist_sum == doctest::Approx(2.0));
  last.clear();
  const FrameCounts out = match_frame(gts, {pred(2.001, 0, 7, 0.9)}, 2.0, last);
  CHECK(out.tp == 0);
  CHECK(out.fp == 1);
  CHECK(out.fn == 1);
}

TEST_CASE("match_frame: higher score claims the contested ground truth") {
  const std::vector<GtBox> gts = {gt(0, 0, 1)};
  const std::vector<PredBox> preds = {pred(0.5, 0, 7, 0.3), pred(1.0, 0, 8, 0.9)};
  std::map<int64_t, int64_t> last;
  const FrameCounts c = match_frame(gts, preds, 2.0, last);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  // The farther but higher-scoring prediction won, as the distance shows.
  CHECK(c.dist_sum == doctest::Approx(1.0));
  CHECK(last.at(1) == 8);
}

TEST_CASE("match_frame: identity switches are counted against the last match") {
  const std::vector<GtBox> gts = {gt(0, 0, 5)};
  std::map<int64_t, int64_t> last;

  FrameCounts c = match_frame(gts, {pred(0, 0, 7, 0.9)}, 2.0, last);
  CHECK(c.ids == 0);  // first match cannot switch

  c = match_frame(gts, {pred(0, 0, 7, 0.9)}, 2.0, last);
  CHECK(c.ids == 0);  // same predicted id continues

  c = match_frame(gts, {pred(0, 0, 9, 0.9)}, 2.0, last);
  CHECK(c.ids == 1);  // id 7 -> 9 on the same ground-truth track

  // A gap (no predictions) does not reset the memory: re-acquiring with yet
  // another id still switches.
  c = match_frame(gts, {}, 2.0, last);
  CHECK(c.fn == 1);
  c = match_frame(gts, {pred(0, 0, 11, 0.9)}, 2.0, last);
  CHECK(c.ids == 1);
}

TEST_CASE("evaluate_class: perfect tracking scores AMOTA 1 and AMOTP 0") {
  const std::vector<EvalScene> scenes = {
      perfect_scene("s0", 3, 10, {0.9, 0.8, 0.7}),
      perfect_scene("s1", 2, 10, {0.85, 0.75})};
  const auto m = evaluate_class(scenes, "car", 2.0, 40);
  REQUIRE(m.has_value());
  CHECK(m->gt_count == 50);
  CHECK(m->amota == doctest::Approx(1.0));
  CHECK(m->amotp == doctest::Approx(0.0));
  CHECK(m->levels.size() == 39);
  for (const RecallLevel& level : m->levels) {
    CHECK(level.achieved);
    CHECK(level.ids == 0);
    CHECK(level.fp == 0);
    CHECK(level.motar == doctest::Approx(1.0));
  }
}

TEST_CASE("evaluate_class: no predictions scores zero") {
  EvalScene scene = perfect_scene("s0", 2, 5, {0.9, 0.8});
  for (auto& frame : scene.pred_frames) frame.clear();
  const auto m = evaluate_class({scene}, "car", 2.0, 40);
  REQUIRE(m.has_value());
  CHECK(m->amota == doctest::Approx(0.0));
  CHECK(m->amotp == doctest::Approx(2.0));  // convention: match_dist when unachieved
  for (const RecallLevel& level : m->levels) CHECK_FALSE(level.achieved);
}

TEST_CASE("evaluate_class: absent class yields no metrics") {
  const std::vector<EvalScene> scenes = {perfect_scene("s0", 2, 5, {0.9, 0.8})};
  CHECK_FALSE(evaluate_class(scenes, "bus", 2.0, 40).has_value());
}

TEST_CASE("evaluate_class: one persistent miss out of ten tracks gives 35/39") {
  // Ten single-frame ground-truth boxes; nine are predicted exactly with
  // distinct scores, the tenth is never predicted. Recall levels above 0.9
  // are unachievable, and 10 * i / 39 <= 9 holds exactly for i <= 35.
  EvalScene scene;
  scene.scene_id = "s0";
  scene.gt_frames.resize(1);
  scene.pred_frames.resize(1);
  for (int t = 0; t < 10; ++t) {
    scene.gt_frames[0].push_back(gt(0.0, 6.0 * t, 100 + t));
    if (t > 0) {
      scene.pred_frames[0].push_back(pred(0.0, 6.0 * t, t, 0.5 + 0.05 * t));
    }
  }
  const auto m = evaluate_class({scene}, "car", 2.0, 40);
  REQUIRE(m.has_value());
  CHECK(m->amota == doctest::Approx(35.0 / 39.0).epsilon(1e-12));
  CHECK(m->amotp == doctest::Approx(0.0));
  int achieved = 0;
  for (const RecallLevel& level : m->levels) {
    if (level.achieved) {
      ++achieved;
      CHECK(level.motar == doctest::Approx(1.0));
      CHECK(level.fp == 0);
    } else {
      CHECK(level.motar == 0.0);
    }
  }
  CHECK(achieved == 35);
}

TEST_CASE("evaluate_class: per-level MOTAR follows the clamped formula") {
  // Mix of exact tracks and far false positives so levels see nonzero FP.
  std::vector<EvalScene> scenes = {perfect_scene("s0", 4, 12, {0.9, 0.8, 0.7, 0.6})};
  for (size_t f = 0; f < scenes[0].pred_frames.size(); ++f) {
    scenes[0].pred_frames[f].push_back(pred(200.0, 200.0, 50, 0.82));
    scenes[0].pred_frames[f].push_back(pred(220.0, 220.0, 51, 0.65));
  }
  const auto m = evaluate_class(scenes, "car", 2.0, 40);
  REQUIRE(m.has_value());
  const double P = m->gt_count;
  for (const RecallLevel& level : m->levels) {
    if (!level.achieved) continue;
    CHECK(level.tp + level.fn == m->gt_count);
    const double r = level.recall_target;
    const double raw = 1.0 - (level.ids + level.fp + level.fn - (1.0 - r) * P) / (r * P);
    CHECK(level.motar == doctest::Approx(std::clamp(raw, 0.0, 1.0)).epsilon(1e-12));
  }
  CHECK(m->amota < 1.0);  // the false positives must cost something
}

TEST_CASE("evaluate_class: far false positives never raise the score") {
  oracle::Rng rng(23);
  std::vector<EvalScene> scenes = {perfect_scene("s0", 3, 15, {0.9, 0.7, 0.5})};
  const auto clean = evaluate_class(scenes, "car", 2.0, 40);
  REQUIRE(clean.has_value());

  double prev_amota = clean->amota;
  for (int wave = 0; wave < 4; ++wave) {
    // Sprinkle false positives far from every ground-truth box, with scores
    // interleaved among the true ones.
    for (size_t f = 0; f < scenes[0].pred_frames.size(); ++f) {
      if (f % 3 != static_cast<size_t>(wave) % 3) continue;
      scenes[0].pred_frames[f].push_back(
          pred(300.0 + 10.0 * wave, 300.0, 900 + wave, rng.uniform(0.3, 1.0)));
    }
    const auto noisy = evaluate_class(scenes, "car", 2.0, 40);
    REQUIRE(noisy.has_value());
    CHECK(noisy->amota <= prev_amota + 1e-12);
    prev_amota = noisy->amota;
  }
}

TEST_CASE("evaluate_class: randomized range and partition invariants") {
  oracle::Rng rng(71);
  for (int iter = 0; iter < 10; ++iter) {
    EvalScene scene;
    scene.scene_id = "s";
    const int n_frames = 8;
    scene.gt_frames.resize(n_frames);
    scene.pred_frames.resize(n_frames);
    const int n_tracks = 3 + (iter % 3);
    for (int f = 0; f < n_frames; ++f) {
      for (int t = 0; t < n_tracks; ++t) {
        const double x = 1.0 * f, y = 8.0 * t;
        scene.gt_frames[f].push_back(gt(x, y, t));
        if (rng.uniform(0.0, 1.0) < 0.85) {
          scene.pred_frames[f].push_back(pred(x + rng.uniform(-1.0, 1.0),
                                              y + rng.uniform(-1.0, 1.0),
                                              rng.uniform(0.0, 1.0) < 0.9 ? t : t + 50,
                                              rng.uniform(0.05, 1.0)));
        }
        if (rng.uniform(0.0, 1.0) < 0.2) {
          scene.pred_frames[f].push_back(pred(rng.uniform(100.0, 150.0),
                                              rng.uniform(100.0, 150.0), 77,
                                              rng.uniform(0.05, 1.0)));
        }
      }
    }
    const auto m = evaluate_class({scene}, "car", 2.0, 40);
    REQUIRE(m.has_value());
    CHECK(m->amota >= 0.0);
    CHECK(m->amota <= 1.0);
    CHECK(m->amotp >= 0.0);
    CHECK(m->amotp <= 2.0);
    for (const RecallLevel& level : m->levels) {
      CHECK(level.motar >= 0.0);
      CHECK(level.motar <= 1.0);
      if (level.achieved) {
        CHECK(level.tp + level.fn == m->gt_count);
        CHECK(level.tp >= 1);
        if (level.mean_dist > 0.0) CHECK(level.mean_dist <= 2.0);
      }
    }
  }
}

TEST_CASE("evaluate_class: scene order does not matter") {
  oracle::Rng rng(29);
  std::vector<EvalScene> scenes;
  for (int s = 0; s < 4; ++s) {
    EvalScene scene = perfect_scene("s" + std::to_string(s), 3, 10,
                                    {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0),
                                     rng.uniform(0.3, 1.0)});
    // Perturb one prediction per scene so the metric is not trivially 1.
    scene.pred_frames[2][0].box = box_at(100.0, 100.0);
    scenes.push_back(scene);
  }
  const auto forward = evaluate_class(scenes, "car", 2.0, 40);
  std::reverse(scenes.begin(), scenes.end());
  const auto backward = evaluate_class(scenes, "car", 2.0, 40);
  REQUIRE(forward.has_value());
  REQUIRE(backward.has_value());
  CHECK(forward->amota == backward->amota);
  CHECK(forward->amotp == backward->amotp);
}

TEST_CASE("evaluate_class: input validation") {
  const std::vector<EvalScene> scenes = {perfect_scene("s0", 1, 3, {0.9})};
  CHECK_THROWS_AS(evaluate_class(scenes, "car", 2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_class(scenes, "car", 0.0, 40), std::invalid_argument);
  EvalScene misaligned = scenes[0];
  misaligned.pred_frames.pop_back();
  CHECK_THROWS_AS(evaluate_class({misaligned}, "car", 2.0, 40), std::invalid_argument);
}

TEST_CASE("split definitions: frozen class partitions") {
  const auto& classes = all_classes();
  CHECK(classes == std::vector<std::string>{"bicycle", "bus", "car", "motorcycle",
                                            "pedestrian", "trailer", "truck"});
  CHECK(std::is_sorted(classes.begin(), classes.end()));

  const SplitDefinition rare = split_by_name("rare");
  CHECK(rare.novel_classes == std::vector<std::string>{"bicycle", "bus", "motorcycle"});
  CHECK(rare.base_classes == std::vector<std::string>{"car", "pedestrian", "trailer",
                                                      "truck"});
  const SplitDefinition urban = split_by_name("urban");
  CHECK(urban.novel_classes == std::vector<std::string>{"bicycle", "bus", "pedestrian"});
  CHECK(urban.base_classes == std::vector<std::string>{"car", "motorcycle", "trailer",
                                                       "truck"});
  const SplitDefinition diverse = split_by_name("diverse");
  CHECK(diverse.novel_classes == std::vector<std::string>{"motorcycle", "pedestrian",
                                                          "truck"});
  CHECK(diverse.base_classes == std::vector<std::string>{"bicycle", "bus", "car",
                                                         "trailer"});

  for (const auto& split : {rare, urban, diverse}) {
    CHECK(split.base_classes.size() + split.novel_classes.size() == 7);
  }
  CHECK_THROWS_WITH_AS(split_by_name("compact"),
                       "unknown split 'compact' (expected one of: rare, urban, diverse)",
                       std::invalid_argument);
}

TEST_CASE("evaluate_split: aggregates average the present classes") {
  // Cars tracked perfectly, pedestrians completely missed, buses absent.
  std::vector<EvalScene> scenes = {perfect_scene("s0", 2, 8, {0.9, 0.8}, "car")};
  EvalScene peds = perfect_scene("s1", 2, 8, {0.9, 0.8}, "pedestrian");
  for (auto& frame : peds.pred_frames) frame.clear();
  scenes.push_back(peds);

  const MetricsReport report = evaluate_split(scenes, split_by_name("urban"), 2.0, 40);
  REQUIRE(report.per_class.size() == 2);
  REQUIRE(report.find_class("car") != nullptr);
  REQUIRE(report.find_class("pedestrian") != nullptr);
  CHECK(report.find_class("bus") == nullptr);
  CHECK(std::find(report.absent_classes.begin(), report.absent_classes.end(), "bus") !=
        report.absent_classes.end());
  CHECK(report.absent_classes.size() == 5);

  CHECK(report.find_class("car")->amota == doctest::Approx(1.0));
  CHECK(report.find_class("pedestrian")->amota == doctest::Approx(0.0));
  // urban: car is base, pedestrian novel.
  CHECK(report.base_amota == doctest::Approx(1.0));
  CHECK(report.novel_amota == doctest::Approx(0.0));
  CHECK(report.overall_amota == doctest::Approx(0.5));
  CHECK(report.base_amotp == doctest::Approx(0.0));
  CHECK(report.novel_amotp == doctest::Approx(2.0));
}
