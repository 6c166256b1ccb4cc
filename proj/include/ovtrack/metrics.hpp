#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovtrack/geometry.hpp"

namespace ovtrack {

// The seven tracked object classes.
const std::vector<std::string>& all_classes();

// Base/novel partition of the class set. Base and novel are disjoint and
// together cover all seven classes.
struct SplitDefinition {
  std::string name;
  std::vector<std::string> base_classes;
  std::vector<std::string> novel_classes;
};

// Named splits: rare (novel = bicycle/bus/motorcycle), urban (novel =
// bicycle/bus/pedestrian), diverse (novel = motorcycle/pedestrian/truck).
// Throws on an unknown name, listing the valid ones.
SplitDefinition split_by_name(const std::string& name);

struct GtBox {
  Box3D box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), 0.0};
  int64_t track_id = 0;
  std::string class_name;
};

struct PredBox {
  Box3D box{Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), 0.0};
  int64_t track_id = 0;
  std::string class_name;
  double score = 0.0;
};

// One scene's ground truth and predictions, frame-aligned (index i of both
// outer vectors is frame i).
struct EvalScene {
  std::string scene_id;
  std::vector<std::vector<GtBox>> gt_frames;
  std::vector<std::vector<PredBox>> pred_frames;
};

struct FrameCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int ids = 0;
  double dist_sum = 0.0;  // summed BEV centre distance over matches
};

// Greedy per-frame matching: predictions in descending score order each take
// the nearest unmatched ground-truth box within match_dist. `last_match`
// persists per scene and maps GT track id -> last matched predicted track id
// for identity-switch counting. When `matched_preds` is given it receives the
// indices (into preds) of the matched predictions.
FrameCounts match_frame(const std::vector<GtBox>& gt, const std::vector<PredBox>& preds,
                        double match_dist, std::map<int64_t, int64_t>& last_match,
                        std::vector<int>* matched_preds = nullptr);

struct RecallLevel {
  double recall_target = 0.0;
  bool achieved = false;
  double threshold = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int ids = 0;
  double motar = 0.0;
  double mean_dist = 0.0;
};

struct ClassMetrics {
  std::string class_name;
  int gt_count = 0;
  double amota = 0.0;
  double amotp = 0.0;
  std::vector<RecallLevel> levels;
};

struct MetricsReport {
  SplitDefinition split;
  std::vector<ClassMetrics> per_class;  // classes with gt_count > 0 only
  std::vector<std::string> absent_classes;
  double overall_amota = 0.0;
  double overall_amotp = 0.0;
  double base_amota = 0.0;
  double base_amotp = 0.0;
  double novel_amota = 0.0;
  double novel_amotp = 0.0;

  const ClassMetrics* find_class(const std::string& name) const;
};

// AMOTA/AMOTP for one class over all scenes. Recall levels are i/(n-1) for
// i = 1..n-1; each level's threshold is the score of its k-th best true
// positive (k = ceil(r * P)); unachievable levels contribute MOTAR = 0.
// MOTAR at target recall r with P ground-truth boxes is
// 1 - (IDS + FP + FN - (1 - r) P) / (r P), clamped to [0, 1]. AMOTP averages
// the mean matched distance over achieved levels (match_dist when none is
// achievable). Returns nullopt when the class has no ground-truth instances.
std::optional<ClassMetrics> evaluate_class(const std::vector<EvalScene>& scenes,
                                           const std::string& class_name,
                                           double match_dist, int n_recall_levels);

// Per-class metrics plus overall / base-only / novel-only arithmetic means
// over the classes that have ground truth.
MetricsReport evaluate_split(const std::vector<EvalScene>& scenes,
                             const SplitDefinition& split, double match_dist,
                             int n_recall_levels);

}  // namespace ovtrack
