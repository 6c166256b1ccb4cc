#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ovtrack/geometry.hpp"
#include "ovtrack/types.hpp"

namespace ovtrack {

// How per-class average modified confidence and occurrence frequency combine
// into the class-selection score. OccurrenceOnly degenerates to a per-frame
// majority vote and exists as the comparison baseline.
enum class CombinationRule {
  MeanTimesFrequency,
  MeanPlusFrequency,
  OccurrenceOnly,
};

CombinationRule combination_rule_from_string(const std::string& name);
std::string to_string(CombinationRule rule);

struct ScoringParams {
  double alpha_p = 0.2;    // perspective correction, in [0, 1)
  double beta_ar = 2.5;    // aspect-ratio threshold, > 0
  double lambda_s = 250.0; // depth scale, > 0
  CombinationRule rule = CombinationRule::MeanTimesFrequency;

  void validate() const;
};

// Fraction of the image covered by the box, in (0, 1]. Throws
// std::invalid_argument for zero-area boxes or non-positive image dims.
double box_size_ratio(const Box2D& box, double image_w, double image_h);

// Dimensionless depth proxy: (1 / B_size) * (1 - alpha_p * y_center / H),
// divided by the aspect ratio (width/height) when that ratio exceeds beta_ar.
// Larger for smaller and higher-in-frame boxes.
double estimate_depth(const Box2D& box, double image_w, double image_h,
                      const ScoringParams& params);

// exp(-depth / lambda_s), in (0, 1]; strictly decreasing in depth.
double distance_weight(double depth, double lambda_s);

struct TrackScore {
  // Absent means the track carried no label in any frame and is dropped.
  std::optional<std::string> final_class;
  std::map<std::string, double> class_scores;
};

// Selects a final class for one track from its per-frame labels and per-frame
// predicted confidences (parallel vectors). Each labeled frame contributes
// confidence * distance_weight(depth of its matched 2D box); per class the
// rule combines the mean of those contributions with the class's share of
// labeled frames. Ties go to the lexicographically smallest class name.
TrackScore score_track(std::span<const FrameLabel> labels,
                       std::span<const double> confidences,
                       const ScoringParams& params);

}  // namespace ovtrack
