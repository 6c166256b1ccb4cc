#include "ovtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace ovtrack {

const std::vector<std::string>& all_classes() {
  static const std::vector<std::string> classes = {
      "bicycle", "bus", "car", "motorcycle", "pedestrian", "trailer", "truck"};
  return classes;
}

SplitDefinition split_by_name(const std::string& name) {
  std::vector<std::string> novel;
  if (name == "rare") {
    novel = {"bicycle", "bus", "motorcycle"};
  } else if (name == "urban") {
    novel = {"bicycle", "bus", "pedestrian"};
  } else if (name == "diverse") {
    novel = {"motorcycle", "pedestrian", "truck"};
  } else {
    throw std::invalid_argument("unknown split '" + name +
                                "' (expected one of: rare, urban, diverse)");
  }
  SplitDefinition split;
  split.name = name;
  split.novel_classes = novel;
  for (const std::string& c : all_classes()) {
    if (std::find(novel.begin(), novel.end(), c) == novel.end()) {
      split.base_classes.push_back(c);
    }
  }
  return split;
}

FrameCounts match_frame(const std::vector<GtBox>& gt, const std::vector<PredBox>& preds,
                        double match_dist, std::map<int64_t, int64_t>& last_match,
                        std::vector<int>* matched_preds) {
  FrameCounts counts;
  std::vector<int> order(preds.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return preds[a].track_id < preds[b].track_id;  // deterministic tie-break
  });

  std::vector<bool> gt_taken(gt.size(), false);
  for (int pi : order) {
    const PredBox& p = preds[pi];
    int best = -1;
    double best_dist = match_dist;
    for (size_t gi = 0; gi < gt.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double d = bev_center_distance(p.box, gt[gi].box);
      if (d <= best_dist && (best == -1 || d < best_dist)) {
        best = static_cast<int>(gi);
        best_dist = d;
      }
    }
    if (best == -1) {
      counts.fp += 1;
      continue;
    }
    gt_taken[best] = true;
    counts.tp += 1;
    counts.dist_sum += best_dist;
    if (matched_preds) matched_preds->push_back(pi);
    const int64_t gt_id = gt[best].track_id;
    const auto it = last_match.find(gt_id);
    if (it != last_match.end() && it->second != p.track_id) counts.ids += 1;
    last_match[gt_id] = p.track_id;
  }
  counts.fn = static_cast<int>(gt.size()) - counts.tp;
  return counts;
}

namespace {

struct ClassSceneView {
  std::vector<std::vector<GtBox>> gt;
  std::vector<std::vector<PredBox>> preds;
};

// Accumulated counts of one full pass over all scenes at a score threshold.
struct RunTotals {
  FrameCounts counts;
  std::vector<double> tp_scores;  // scores of matched predictions
};

RunTotals run_matching(const std::vector<ClassSceneView>& scenes, double threshold,
                       double match_dist, bool collect_scores) {
  RunTotals totals;
  for (const ClassSceneView& scene : scenes) {
    std::map<int64_t, int64_t> last_match;
    for (size_t f = 0; f < scene.gt.size(); ++f) {
      std::vector<PredBox> kept;
      for (const PredBox& p : scene.preds[f]) {
        if (p.score >= threshold) kept.push_back(p);
      }
      std::vector<int> matched;
      const FrameCounts fc = match_frame(scene.gt[f], kept, match_dist, last_match,
                                         collect_scores ? &matched : nullptr);
      for (int pi : matched) totals.tp_scores.push_back(kept[pi].score);
      totals.counts.tp += fc.tp;
      totals.counts.fp += fc.fp;
      totals.counts.fn += fc.fn;
      totals.counts.ids += fc.ids;
      totals.counts.dist_sum += fc.dist_sum;
    }
  }
  return totals;
}

}  // namespace

std::optional<ClassMetrics> evaluate_class(const std::vector<EvalScene>& scenes,
                                           const std::string& class_name,
                                           double match_dist, int n_recall_levels) {
  if (n_recall_levels < 2) throw std::invalid_argument("n_recall_levels must be >= 2");
  if (!(match_dist > 0.0)) throw std::invalid_argument("match_dist must be positive");

  std::vector<ClassSceneView> views;
  int gt_total = 0;
  for (const EvalScene& scene : scenes) {
    if (scene.pred_frames.size() != scene.gt_frames.size()) {
      throw std::invalid_argument("scene '" + scene.scene_id +
                                  "': prediction frames do not align with ground truth");
    }
    ClassSceneView view;
    view.gt.resize(scene.gt_frames.size());
    view.preds.resize(scene.pred_frames.size());
    for (size_t f = 0; f < scene.gt_frames.size(); ++f) {
      for (const GtBox& g : scene.gt_frames[f]) {
        if (g.class_name == class_name) view.gt[f].push_back(g);
      }
      for (const PredBox& p : scene.pred_frames[f]) {
        if (p.class_name == class_name) view.preds[f].push_back(p);
      }
      gt_total += static_cast<int>(view.gt[f].size());
    }
    views.push_back(std::move(view));
  }
  if (gt_total == 0) return std::nullopt;

  ClassMetrics metrics;
  metrics.class_name = class_name;
  metrics.gt_count = gt_total;

  // Unrestricted pass: its true-positive scores define the per-level
  // thresholds.
  RunTotals full = run_matching(views, -std::numeric_limits<double>::infinity(),
                                match_dist, true);
  std::sort(full.tp_scores.begin(), full.tp_scores.end(), std::greater<>());

  const int n = n_recall_levels;
  double motar_sum = 0.0;
  double amotp_sum = 0.0;
  int achieved_levels = 0;
  for (int i = 1; i <= n - 1; ++i) {
    RecallLevel level;
    level.recall_target = static_cast<double>(i) / (n - 1);
    const int k = static_cast<int>(std::ceil(level.recall_target * gt_total - 1e-12));
    if (k >= 1 && k <= static_cast<int>(full.tp_scores.size())) {
      level.threshold = full.tp_scores[k - 1];
      const RunTotals run = run_matching(views, level.threshold, match_dist, false);
      level.tp = run.counts.tp;
      level.fp = run.counts.fp;
      level.fn = run.counts.fn;
      level.ids = run.counts.ids;
      if (run.counts.tp > 0) {
        level.achieved = true;
        // MOTAR at target recall r with P ground-truth boxes:
        //   max(0, 1 - (IDS + FP + FN - (1 - r) P) / (r P)).
        // The threshold is the k-th best matched score with k = ceil(r P), so
        // the realized TP count can exceed r P and the raw value can slightly
        // exceed 1; the upper clamp keeps every level (and the average) in
        // [0, 1].
        const double r = level.recall_target;
        const double raw =
            1.0 - (run.counts.ids + run.counts.fp + run.counts.fn - (1.0 - r) * gt_total) /
                      (r * gt_total);
        level.motar = std::clamp(raw, 0.0, 1.0);
        level.mean_dist = run.counts.dist_sum / run.counts.tp;
        motar_sum += level.motar;
        amotp_sum += level.mean_dist;
        ++achieved_levels;
      }
    }
    metrics.levels.push_back(level);
  }

  metrics.amota = motar_sum / (n - 1);
  metrics.amotp = achieved_levels > 0 ? amotp_sum / achieved_levels : match_dist;
  return metrics;
}

const ClassMetrics* MetricsReport::find_class(const std::string& name) const {
  for (const ClassMetrics& m : per_class) {
    if (m.class_name == name) return &m;
  }
  return nullptr;
}

MetricsReport evaluate_split(const std::vector<EvalScene>& scenes,
                             const SplitDefinition& split, double match_dist,
                             int n_recall_levels) {
  MetricsReport report;
  report.split = split;

  auto aggregate = [&](const std::vector<std::string>& classes, double& amota,
                       double& amotp) {
    double sum_a = 0.0, sum_p = 0.0;
    int count = 0;
    for (const std::string& c : classes) {
      if (const ClassMetrics* m = report.find_class(c)) {
        sum_a += m->amota;
        sum_p += m->amotp;
        ++count;
      }
    }
    amota = count > 0 ? sum_a / count : 0.0;
    amotp = count > 0 ? sum_p / count : 0.0;
  };

  for (const std::string& c : all_classes()) {
    auto metrics = evaluate_class(scenes, c, match_dist, n_recall_levels);
    if (metrics) {
      report.per_class.push_back(std::move(*metrics));
    } else {
      report.absent_classes.push_back(c);
    }
  }

  aggregate(all_classes(), report.overall_amota, report.overall_amotp);
  aggregate(split.base_classes, report.base_amota, report.base_amotp);
  aggregate(split.novel_classes, report.novel_amota, report.novel_amotp);
  return report;
}

}  // namespace ovtrack
