#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "eon/geometry.hpp"
#include "eon/rotgroup.hpp"

namespace eon {

// A labeled point-cloud scene. Per-point labels are derived from the
// ground-truth boxes: foreground points carry the orientation bin of their
// box and the offset from the point to its box center.
struct Scene {
  int group_order = 1;
  PointCloud points;
  std::vector<int> object_id;  // -1 = background
  std::vector<int> class_id;   // -1 = background
  std::vector<OrientedBox> gt_boxes;

  // Derived labels.
  std::vector<uint8_t> foreground;
  std::vector<int> orientation_bin;  // -1 where background
  std::vector<Vec3> vote_target;     // box center - point; zero for background

  size_t num_points() const { return points.size(); }
};

struct SceneLabels {
  std::vector<uint8_t> foreground;
  std::vector<int> orientation_bin;
  std::vector<Vec3> vote_target;
};

// Thrown when per-point assignments contradict the boxes they reference.
class LabelConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SceneParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Foreground mask, orientation bins and vote offsets for the given
// assignment. A point assigned to an object but lying outside that object's
// box raises LabelConsistencyError.
SceneLabels derive_labels(const PointCloud& points,
                          const std::vector<int>& object_id,
                          const std::vector<OrientedBox>& gt_boxes,
                          const CyclicGroup& group);

// Re-derives labels in place from the scene's own assignment and boxes.
void refresh_labels(Scene& scene);

// Checks every Scene invariant (containment, bins, vote offsets, shapes).
// Throws LabelConsistencyError with the first violation.
void validate_scene(const Scene& scene);

// Lossless JSON round trip (.scene.json). load_scene throws SceneParseError
// naming the missing/ill-typed field. When expected_group_order > 0 a
// mismatch raises SceneParseError mentioning both orders.
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path, int expected_group_order = 0);

}  // namespace eon
