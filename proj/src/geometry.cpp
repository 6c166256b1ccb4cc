#include "ovtrack/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ovtrack {

namespace {

bool finite(const Eigen::Vector2d& v) { return v.allFinite(); }
bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

// Cross product of (b - a) x (p - a); positive when p lies left of a->b.
double edge_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                  const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

Eigen::Vector2d segment_line_intersection(const Eigen::Vector2d& p0,
                                          const Eigen::Vector2d& p1,
                                          const Eigen::Vector2d& a,
                                          const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = p1 - p0;
  const Eigen::Vector2d e = b - a;
  const double denom = e.x() * d.y() - e.y() * d.x();
  // Caller only intersects segments straddling the line, so denom != 0.
  const double t = (e.x() * (a.y() - p0.y()) - e.y() * (a.x() - p0.x())) / denom;
  return p0 + t * d;
}

}  // namespace

double normalize_angle(double a) {
  // Fast path keeps already-normalized values bit-identical (idempotence).
  if (a >= -kPi && a < kPi) return a;
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r - kPi;
}

Box3D::Box3D(const Eigen::Vector3d& center_, const Eigen::Vector3d& size_,
             double yaw_, const Eigen::Vector2d& velocity_)
    : center(center_), size(size_), yaw(normalize_angle(yaw_)), velocity(velocity_) {
  if (!finite(center) || !finite(size) || !std::isfinite(yaw_) || !finite(velocity)) {
    throw std::invalid_argument("Box3D: non-finite component");
  }
  if (size.x() <= 0.0 || size.y() <= 0.0 || size.z() <= 0.0) {
    throw std::invalid_argument("Box3D: size components must be strictly positive");
  }
}

Box2D::Box2D(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw std::invalid_argument("Box2D: non-finite coordinate");
  }
  if (x1 > x2 || y1 > y2) {
    throw std::invalid_argument("Box2D: requires x1 <= x2 and y1 <= y2");
  }
}

CameraCalib::CameraCalib(double fx_, double fy_, double cx_, double cy_,
                         const Eigen::Matrix3d& rotation_, const Eigen::Vector3d& translation_,
                         int image_width_, int image_height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_),
      rotation(rotation_), translation(translation_),
      image_width(image_width_), image_height(image_height_) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw std::invalid_argument("CameraCalib: invalid intrinsics");
  }
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw std::invalid_argument("CameraCalib: non-finite extrinsics");
  }
  const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() >= 1e-9 || rotation.determinant() <= 0.0) {
    throw std::invalid_argument("CameraCalib: rotation must be orthonormal with det +1");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw std::invalid_argument("CameraCalib: image dimensions must be positive");
  }
}

std::array<Eigen::Vector2d, 4> bev_corners(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hw = 0.5 * box.w();
  const double hl = 0.5 * box.l();
  // CCW in the local frame: (+,-), (+,+), (-,+), (-,-).
  const std::array<Eigen::Vector2d, 4> local = {
      Eigen::Vector2d(hw, -hl), Eigen::Vector2d(hw, hl),
      Eigen::Vector2d(-hw, hl), Eigen::Vector2d(-hw, -hl)};
  std::array<Eigen::Vector2d, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Eigen::Vector2d(c * local[i].x() - s * local[i].y() + box.center.x(),
                             s * local[i].x() + c * local[i].y() + box.center.y());
  }
  return out;
}

double polygon_signed_area(std::span<const Eigen::Vector2d> poly) {
  const size_t n = poly.size();
  if (n < 3) return 0.0;
  double sum = 0.0;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    sum += poly[j].x() * poly[i].y() - poly[i].x() * poly[j].y();
  }
  return 0.5 * sum;
}

double convex_polygon_intersection_area(std::span<const Eigen::Vector2d> subject,
                                        std::span<const Eigen::Vector2d> clip) {
  if (subject.size() < 3 || clip.size() < 3) return 0.0;

  std::vector<Eigen::Vector2d> poly(subject.begin(), subject.end());
  std::vector<Eigen::Vector2d> next;
  next.reserve(subject.size() + clip.size());

  const size_t m = clip.size();
  for (size_t e = 0, f = m - 1; e < m; f = e++) {
    const Eigen::Vector2d& a = clip[f];
    const Eigen::Vector2d& b = clip[e];
    next.clear();
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
      // Points on the clip edge count as inside so shared boundaries survive.
      const bool cur_in = edge_cross(a, b, poly[i]) >= 0.0;
      const bool prev_in = edge_cross(a, b, poly[j]) >= 0.0;
      if (cur_in) {
        if (!prev_in) next.push_back(segment_line_intersection(poly[j], poly[i], a, b));
        next.push_back(poly[i]);
      } else if (prev_in) {
        next.push_back(segment_line_intersection(poly[j], poly[i], a, b));
      }
    }
    poly.swap(next);
    if (poly.size() < 3) return 0.0;
  }
  return std::abs(polygon_signed_area(poly));
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  double inter = convex_polygon_intersection_area(ca, cb);
  inter = std::min(inter, std::min(a.footprint_area(), b.footprint_area()));
  const double uni = a.footprint_area() + b.footprint_area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double overlap_h =
      std::max(0.0, std::min(a.z_top(), b.z_top()) - std::max(a.z_bottom(), b.z_bottom()));
  if (overlap_h <= 0.0) return 0.0;
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  double inter_bev = convex_polygon_intersection_area(ca, cb);
  inter_bev = std::min(inter_bev, std::min(a.footprint_area(), b.footprint_area()));
  const double inter = inter_bev * overlap_h;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double bev_center_distance(const Box3D& a, const Box3D& b) {
  return (a.center.head<2>() - b.center.head<2>()).norm();
}

std::optional<Box2D> project_box_to_image(const Box3D& box, const CameraCalib& calib,
                                          int min_visible_corners) {
  const auto footprint = bev_corners(box);
  double u_min = std::numeric_limits<double>::infinity();
  double u_max = -std::numeric_limits<double>::infinity();
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  int visible = 0;
  for (const auto& c2 : footprint) {
    for (const double z : {box.z_bottom(), box.z_top()}) {
      const Eigen::Vector3d cam = calib.to_camera(Eigen::Vector3d(c2.x(), c2.y(), z));
      if (cam.z() <= 0.0) continue;
      ++visible;
      const double u = calib.fx * cam.x() / cam.z() + calib.cx;
      const double v = calib.fy * cam.y() / cam.z() + calib.cy;
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
  }
  if (visible < std::max(1, min_visible_corners)) return std::nullopt;

  const double w = static_cast<double>(calib.image_width);
  const double h = static_cast<double>(calib.image_height);
  const double x1 = std::clamp(u_min, 0.0, w);
  const double x2 = std::clamp(u_max, 0.0, w);
  const double y1 = std::clamp(v_min, 0.0, h);
  const double y2 = std::clamp(v_max, 0.0, h);
  if (x2 - x1 <= 0.0 || y2 - y1 <= 0.0) return std::nullopt;
  return Box2D(x1, y1, x2, y2);
}

}  // namespace ovtrack
