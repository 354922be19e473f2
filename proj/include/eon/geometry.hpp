#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "eon/linalg.hpp"
#include "eon/rotgroup.hpp"

namespace eon {

// Oriented bounding box: full extents, yaw about gravity, wrapped to
// [-pi, pi). The detection target and output everywhere in the pipeline.
struct OrientedBox {
  Vec3 center;
  Vec3 size;  // full extents (dx, dy, dz), all > 0
  double yaw = 0.0;
  int class_id = 0;
  double score = 1.0;
};

// Throws std::invalid_argument when extents are non-positive or any field is
// non-finite.
void validate_box(const OrientedBox& box);

// Corners in binary-counter order: bit0 -> x, bit1 -> y, bit2 -> z, bit value
// 0 = negative half extent. Rotated by yaw, then translated to the center.
std::array<Vec3, 8> box_corners(const OrientedBox& box);

// Point expressed in the box frame (translate by -center, rotate by -yaw).
Vec3 to_box_frame(const Vec3& p, const OrientedBox& box);

// Boundary counts as inside.
bool point_in_box(const Vec3& p, const OrientedBox& box);
std::vector<uint8_t> points_in_box(const PointCloud& points,
                                   const OrientedBox& box);

// Bird's-eye-view intersection area of the two yaw-rotated footprints
// (Sutherland-Hodgman clipping).
double bev_intersection_area(const OrientedBox& a, const OrientedBox& b);

// BEV polygon intersection times vertical interval overlap, over the union of
// volumes. Degenerate (near-zero volume) input yields 0.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

// Places an object-frame box into the scene frame: the scene box is the
// object-frame box rotated by h about the region center, i.e.
//   center = region_center + R_h * center_inv,  yaw = wrap(yaw_inv + angle(h)).
OrientedBox box_to_scene_frame(const OrientedBox& box_inv,
                               const GroupElement& h,
                               const Vec3& region_center);

// Inverse of box_to_scene_frame with the same h and region center.
OrientedBox box_to_object_frame(const OrientedBox& box_scene,
                                const GroupElement& h,
                                const Vec3& region_center);

// p' = pivot + R_yaw (p - pivot); z preserved.
PointCloud rotate_points_about(const PointCloud& points, const Vec3& pivot,
                               double yaw);
Vec3 rotate_point_about(const Vec3& p, const Vec3& pivot, double yaw);
Vec3 rotate_point_about(const Vec3& p, const Vec3& pivot, const Mat3& rot);

}  // namespace eon
