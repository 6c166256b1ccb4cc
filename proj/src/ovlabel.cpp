#include "ovtrack/ovlabel.hpp"

#include <stdexcept>

namespace ovtrack {

std::vector<FrameLabel> label_detections(
    const std::vector<Detection3D>& dets3d,
    const std::map<std::string, std::vector<Detection2D>>& dets2d_by_camera,
    const std::map<std::string, CameraCalib>& calibs, double min_iou_2d) {
  if (!(min_iou_2d >= 0.0 && min_iou_2d <= 1.0)) {
    throw std::invalid_argument("min_iou_2d must lie in [0, 1]");
  }
  int frame = -1;
  for (const Detection3D& d : dets3d) {
    if (frame == -1) frame = d.frame_index;
    if (d.frame_index != frame) {
      throw std::invalid_argument("3D detections span multiple frame indices");
    }
  }
  for (const auto& [camera_id, dets] : dets2d_by_camera) {
    if (calibs.find(camera_id) == calibs.end()) {
      throw std::invalid_argument("no calibration for camera '" + camera_id + "'");
    }
    for (const Detection2D& d : dets) {
      if (frame != -1 && d.frame_index != frame) {
        throw std::invalid_argument("2D detections span multiple frame indices");
      }
    }
  }

  std::vector<FrameLabel> labels(dets3d.size());
  for (size_t i = 0; i < dets3d.size(); ++i) {
    double best_iou = 0.0;
    for (const auto& [camera_id, dets2d] : dets2d_by_camera) {
      const CameraCalib& calib = calibs.at(camera_id);
      const auto proj = project_box_to_image(dets3d[i].box, calib);
      if (!proj) continue;
      for (const Detection2D& d2 : dets2d) {
        const double iou = iou_2d(*proj, d2.box);
        if (iou <= 0.0 || iou < min_iou_2d) continue;
        // Strict improvement keeps the first qualifying match on exact ties
        // (cameras visited in sorted order, detections in input order).
        if (iou > best_iou) {
          best_iou = iou;
          labels[i].class_name = d2.class_name;
          labels[i].matched_2d = Matched2D{camera_id, d2.box, d2.score, iou,
                                           calib.image_width, calib.image_height};
        }
      }
    }
  }
  return labels;
}

}  // namespace ovtrack
