#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovtrack/geometry.hpp"
#include "ovtrack/types.hpp"

namespace ovtrack {

// Assigns an open-vocabulary class label to each 3D detection by projecting
// it into every calibrated camera and taking the 2D detection with the
// globally highest IoU overlap (no per-camera exclusivity; one 2D detection
// may label several 3D detections). Detections whose projections overlap no
// 2D detection with IoU >= min_iou_2d (and > 0) stay unlabeled.
//
// Output is parallel to dets3d. All detections must share one frame index;
// every camera referenced by a 2D detection must have a calibration entry.
std::vector<FrameLabel> label_detections(
    const std::vector<Detection3D>& dets3d,
    const std::map<std::string, std::vector<Detection2D>>& dets2d_by_camera,
    const std::map<std::string, CameraCalib>& calibs, double min_iou_2d);

}  // namespace ovtrack
