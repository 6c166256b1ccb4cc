#include "ovtrack/consistency.hpp"

#include <cmath>
#include <stdexcept>

namespace ovtrack {

CombinationRule combination_rule_from_string(const std::string& name) {
  if (name == "mean_times_frequency") return CombinationRule::MeanTimesFrequency;
  if (name == "mean_plus_frequency") return CombinationRule::MeanPlusFrequency;
  if (name == "occurrence_only") return CombinationRule::OccurrenceOnly;
  throw std::invalid_argument(
      "unknown consistency rule '" + name +
      "' (expected mean_times_frequency, mean_plus_frequency, or occurrence_only)");
}

std::string to_string(CombinationRule rule) {
  switch (rule) {
    case CombinationRule::MeanTimesFrequency: return "mean_times_frequency";
    case CombinationRule::MeanPlusFrequency: return "mean_plus_frequency";
    case CombinationRule::OccurrenceOnly: return "occurrence_only";
  }
  throw std::logic_error("unhandled CombinationRule");
}

void ScoringParams::validate() const {
  if (!(alpha_p >= 0.0 && alpha_p < 1.0)) {
    throw std::invalid_argument("alpha_p must lie in [0, 1)");
  }
  if (!(beta_ar > 0.0)) throw std::invalid_argument("beta_ar must be positive");
  if (!(lambda_s > 0.0)) throw std::invalid_argument("lambda_s must be positive");
}

double box_size_ratio(const Box2D& box, double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  const double area = box.area();
  if (!(area > 0.0)) throw std::invalid_argument("box area must be positive");
  return area / (image_w * image_h);
}

double estimate_depth(const Box2D& box, double image_w, double image_h,
                      const ScoringParams& params) {
  params.validate();
  if (!(box.height() > 0.0)) throw std::invalid_argument("box height must be positive");
  const double b_size = box_size_ratio(box, image_w, image_h);
  double depth = (1.0 / b_size) * (1.0 - params.alpha_p * (box.y_center() / image_h));
  const double aspect_ratio = box.width() / box.height();
  if (aspect_ratio > params.beta_ar) depth /= aspect_ratio;
  return depth;
}

double distance_weight(double depth, double lambda_s) {
  if (!(lambda_s > 0.0)) throw std::invalid_argument("lambda_s must be positive");
  if (!(depth >= 0.0)) throw std::invalid_argument("depth must be non-negative");
  return std::exp(-depth / lambda_s);
}

TrackScore score_track(std::span<const FrameLabel> labels,
                       std::span<const double> confidences,
                       const ScoringParams& params) {
  params.validate();
  if (labels.size() != confidences.size()) {
    throw std::invalid_argument("labels and confidences must be parallel");
  }

  struct ClassAccum {
    double modified_conf_sum = 0.0;
    int count = 0;
  };
  std::map<std::string, ClassAccum> accum;
  int n_labeled = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const FrameLabel& fl = labels[i];
    if (!fl.class_name) continue;
    if (!fl.matched_2d) {
      throw std::invalid_argument("labeled frame without matched 2D metadata");
    }
    const Matched2D& m = *fl.matched_2d;
    const double depth = estimate_depth(m.box, m.image_width, m.image_height, params);
    const double w = distance_weight(depth, params.lambda_s);
    auto& a = accum[*fl.class_name];
    a.modified_conf_sum += confidences[i] * w;
    a.count += 1;
    ++n_labeled;
  }

  TrackScore result;
  if (n_labeled == 0) return result;  // all-unknown track: dropped

  for (const auto& [cls, a] : accum) {
    const double mean_mod = a.modified_conf_sum / a.count;
    const double freq = static_cast<double>(a.count) / n_labeled;
    double s = 0.0;
    switch (params.rule) {
      case CombinationRule::MeanTimesFrequency: s = mean_mod * freq; break;
      case CombinationRule::MeanPlusFrequency: s = 0.5 * (mean_mod + freq); break;
      case CombinationRule::OccurrenceOnly: s = freq; break;
    }
    result.class_scores[cls] = s;
    // Strictly-greater update over the sorted map keeps ties on the
    // lexicographically smallest class.
    if (!result.final_class || s > result.class_scores[*result.final_class]) {
      result.final_class = cls;
    }
  }
  return result;
}

}  // namespace ovtrack
