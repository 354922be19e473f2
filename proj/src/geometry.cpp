#include "eon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eon {

namespace {

struct Point2 {
  double x, y;
};

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double polygon_area(const std::vector<Point2>& poly) {
  double acc = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(acc);
}

// Counter-clockwise BEV footprint corners.
std::array<Point2, 4> bev_corners(const OrientedBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hx = 0.5 * box.size.x;
  const double hy = 0.5 * box.size.y;
  std::array<Point2, 4> out;
  const double lx[4] = {hx, -hx, -hx, hx};
  const double ly[4] = {hy, hy, -hy, -hy};
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.center.x + c * lx[i] - s * ly[i],
              box.center.y + s * lx[i] + c * ly[i]};
  }
  return out;
}

// Clips a convex subject polygon by the half plane left of edge (a, b).
std::vector<Point2> clip_by_edge(const std::vector<Point2>& subject,
                                 const Point2& a, const Point2& b) {
  std::vector<Point2> out;
  const size_t n = subject.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& cur = subject[i];
    const Point2& nxt = subject[(i + 1) % n];
    const double dc = cross(a, b, cur);
    const double dn = cross(a, b, nxt);
    if (dc >= 0.0) out.push_back(cur);
    if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

}  // namespace

void validate_box(const OrientedBox& box) {
  if (!box.center.finite() || !box.size.finite() || !std::isfinite(box.yaw))
    throw std::invalid_argument("box has non-finite fields");
  if (box.size.x <= 0.0 || box.size.y <= 0.0 || box.size.z <= 0.0)
    throw std::invalid_argument("box extents must be strictly positive");
}

std::array<Vec3, 8> box_corners(const OrientedBox& box) {
  const Mat3 rot = Mat3::yaw(box.yaw);
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{(i & 1 ? 0.5 : -0.5) * box.size.x,
                     (i & 2 ? 0.5 : -0.5) * box.size.y,
                     (i & 4 ? 0.5 : -0.5) * box.size.z};
    out[i] = box.center + rot * local;
  }
  return out;
}

Vec3 to_box_frame(const Vec3& p, const OrientedBox& box) {
  return Mat3::yaw(-box.yaw) * (p - box.center);
}

bool point_in_box(const Vec3& p, const OrientedBox& box) {
  const Vec3 local = to_box_frame(p, box);
  return std::abs(local.x) <= 0.5 * box.size.x &&
         std::abs(local.y) <= 0.5 * box.size.y &&
         std::abs(local.z) <= 0.5 * box.size.z;
}

std::vector<uint8_t> points_in_box(const PointCloud& points,
                                   const OrientedBox& box) {
  std::vector<uint8_t> mask(points.size());
  for (size_t i = 0; i < points.size(); ++i)
    mask[i] = point_in_box(points[i], box) ? 1 : 0;
  return mask;
}

double bev_intersection_area(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  std::vector<Point2> poly(ca.begin(), ca.end());
  for (int i = 0; i < 4 && poly.size() >= 3; ++i)
    poly = clip_by_edge(poly, cb[i], cb[(i + 1) % 4]);
  if (poly.size() < 3) return 0.0;
  return polygon_area(poly);
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
  constexpr double kDegenerate = 1e-12;
  const double vol_a = a.size.x * a.size.y * a.size.z;
  const double vol_b = b.size.x * b.size.y * b.size.z;
  if (vol_a < kDegenerate || vol_b < kDegenerate) return 0.0;

  const double z_lo = std::max(a.center.z - 0.5 * a.size.z,
                               b.center.z - 0.5 * b.size.z);
  const double z_hi = std::min(a.center.z + 0.5 * a.size.z,
                               b.center.z + 0.5 * b.size.z);
  if (z_hi <= z_lo) return 0.0;

  const double inter = bev_intersection_area(a, b) * (z_hi - z_lo);
  const double uni = vol_a + vol_b - inter;
  if (uni < kDegenerate) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

OrientedBox box_to_scene_frame(const OrientedBox& box_inv,
                               const GroupElement& h,
                               const Vec3& region_center) {
  OrientedBox out = box_inv;
  out.center = region_center + rotation_matrix(h) * box_inv.center;
  out.yaw = wrap_angle(box_inv.yaw + h.angle());
  return out;
}

OrientedBox box_to_object_frame(const OrientedBox& box_scene,
                                const GroupElement& h,
                                const Vec3& region_center) {
  OrientedBox out = box_scene;
  out.center = rotation_matrix(inverse(h)) * (box_scene.center - region_center);
  out.yaw = wrap_angle(box_scene.yaw - h.angle());
  return out;
}

Vec3 rotate_point_about(const Vec3& p, const Vec3& pivot, const Mat3& rot) {
  return pivot + rot * (p - pivot);
}

Vec3 rotate_point_about(const Vec3& p, const Vec3& pivot, double yaw) {
  return rotate_point_about(p, pivot, Mat3::yaw(yaw));
}

PointCloud rotate_points_about(const PointCloud& points, const Vec3& pivot,
                               double yaw) {
  const Mat3 rot = Mat3::yaw(yaw);
  PointCloud out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(rotate_point_about(p, pivot, rot));
  return out;
}

}  // namespace eon
