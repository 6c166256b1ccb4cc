#pragma once

#include <optional>
#include <string>

#include "ovtrack/geometry.hpp"

namespace ovtrack {

// A 3D box proposal. `class_name` and `source_score` come from the detector
// and are deliberately ignored by the tracker; `source_score` is only a
// training target for the confidence head on base classes.
struct Detection3D {
  Box3D box;
  int frame_index = 0;
  int detection_id = 0;  // unique within its frame
  std::optional<double> source_score;
  std::optional<std::string> class_name;
};

// An image-plane detection from an open-vocabulary 2D detector.
struct Detection2D {
  std::string camera_id;
  int frame_index = 0;
  Box2D box;
  std::string class_name;
  double score = 0.0;
};

// 2D match metadata kept alongside a label so downstream scoring can derive
// the depth proxy without re-projecting.
struct Matched2D {
  std::string camera_id;
  Box2D box;
  double score = 0.0;
  double iou_2d = 0.0;
  int image_width = 0;
  int image_height = 0;
};

// Per-frame label state of a detection/track observation. An absent
// class_name means "unknown"; metadata is present iff a class is.
struct FrameLabel {
  std::optional<std::string> class_name;
  std::optional<Matched2D> matched_2d;
};

}  // namespace ovtrack
