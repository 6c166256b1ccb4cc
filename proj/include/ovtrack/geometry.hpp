#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>

namespace ovtrack {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle into [-pi, pi).
double normalize_angle(double a);

// Yaw-rotated 3D box in the world frame, z at the box center.
// At yaw 0 the footprint spans [-w/2, w/2] in x and [-l/2, l/2] in y.
struct Box3D {
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d size{1.0, 1.0, 1.0};  // (w, l, h), strictly positive
  double yaw = 0.0;                     // radians, in [-pi, pi)
  Eigen::Vector2d velocity{0.0, 0.0};   // (vx, vy), m/s

  Box3D() = default;
  // Validates finiteness and positive size, normalizes yaw. Throws
  // std::invalid_argument on violation.
  Box3D(const Eigen::Vector3d& center_, const Eigen::Vector3d& size_,
        double yaw_, const Eigen::Vector2d& velocity_ = Eigen::Vector2d::Zero());

  double w() const { return size.x(); }
  double l() const { return size.y(); }
  double h() const { return size.z(); }
  double footprint_area() const { return size.x() * size.y(); }
  double volume() const { return size.x() * size.y() * size.z(); }
  double z_bottom() const { return center.z() - 0.5 * size.z(); }
  double z_top() const { return center.z() + 0.5 * size.z(); }
};

// Axis-aligned image-plane box in pixels, origin at the top-left corner.
struct Box2D {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  Box2D() = default;
  // Requires x1 <= x2, y1 <= y2 and finite coordinates.
  Box2D(double x1_, double y1_, double x2_, double y2_);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double x_center() const { return 0.5 * (x1 + x2); }
  double y_center() const { return 0.5 * (y1 + y2); }
};

// Zero-skew pinhole camera. `rotation`/`translation` map world points into
// the camera frame: X_cam = R * X_world + t. Camera frame convention:
// +z optical axis (forward), +x right, +y down.
struct CameraCalib {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int image_width = 0;
  int image_height = 0;

  CameraCalib() = default;
  CameraCalib(double fx_, double fy_, double cx_, double cy_,
              const Eigen::Matrix3d& rotation_, const Eigen::Vector3d& translation_,
              int image_width_, int image_height_);

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
};

// Counter-clockwise corners of the yaw-rotated w x l footprint.
std::array<Eigen::Vector2d, 4> bev_corners(const Box3D& box);

// Signed shoelace area; positive for counter-clockwise polygons.
double polygon_signed_area(std::span<const Eigen::Vector2d> poly);

// Area of the intersection of two convex CCW polygons (Sutherland-Hodgman
// clipping followed by the shoelace formula). Zero when disjoint.
double convex_polygon_intersection_area(std::span<const Eigen::Vector2d> subject,
                                        std::span<const Eigen::Vector2d> clip);

// Footprint intersection over union, in [0, 1].
double iou_bev(const Box3D& a, const Box3D& b);

// Volumetric IoU: BEV intersection times vertical overlap over the union.
double iou_3d(const Box3D& a, const Box3D& b);

// Standard axis-aligned IoU of image boxes, in [0, 1].
double iou_2d(const Box2D& a, const Box2D& b);

// Euclidean distance between the (x, y) centers.
double bev_center_distance(const Box3D& a, const Box3D& b);

// Projects the box onto the image: the 8 corners are transformed into the
// camera frame, corners with non-positive depth are dropped, the remaining
// ones are perspective-projected, and the axis-aligned hull is clipped to
// [0, W] x [0, H]. Absent when fewer than `min_visible_corners` corners have
// positive depth or when the clipped hull has zero area.
std::optional<Box2D> project_box_to_image(const Box3D& box, const CameraCalib& calib,
                                          int min_visible_corners = 1);

}  // namespace ovtrack
