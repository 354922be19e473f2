#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eon/scene.hpp"

namespace eon {

// A synthetic object category: canonical (yaw = 0) point cloud plus box
// extents. Templates must have no rotational self-symmetry under any
// nontrivial group element, otherwise orientation labels are ill-posed.
struct ShapeTemplate {
  int class_id = 0;
  std::string name;
  PointCloud canonical_points;
  Vec3 box_size;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class YawMode { kGrid, kUniform };

struct SceneGenConfig {
  int group_order = 4;
  int min_objects = 3;
  int max_objects = 6;
  std::vector<int> classes = {0, 1, 2};
  double area_x = 8.0;  // floor extents, centered at the origin
  double area_y = 8.0;
  double min_separation = 0.35;  // BEV gap enforced between box footprints
  int points_per_object = 140;
  double background_density = 5.0;  // points per square meter, 0 disables
  double noise = 0.01;              // uniform half-width added per coordinate
  YawMode yaw_mode = YawMode::kUniform;
  uint64_t seed = 1;
  int train_scenes = 200;
  int test_scenes = 50;

  void validate() const;  // throws std::invalid_argument
};

// The three built-in categories (an L-shaped plate, a T-shaped plate and a
// thin notched bar). Deterministic; passes the asymmetry check for any group
// order up to 8.
const std::vector<ShapeTemplate>& default_templates();

// Symmetric Chamfer distance between two clouds (max of the two directed
// means).
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Verifies that the template has no rotational self-symmetry: for every
// nontrivial element of C_n (n = max_group_order), the Chamfer distance
// between the canonical cloud and its rotation exceeds 0.05 m.
void check_template_asymmetry(const ShapeTemplate& tpl, int max_group_order);

// Box extents per class id, taken from the registered templates.
std::vector<Vec3> class_template_sizes(const std::vector<ShapeTemplate>& tpls);

// Deterministic scene synthesis: rejection-sampled non-overlapping objects on
// a floor with two wall strips, fully labeled. Throws GenerationError when an
// object cannot be placed after 1000 rejections.
Scene generate_scene(const SceneGenConfig& cfg, uint64_t seed);

// Rotates each object's member points about its own box center by an
// independent uniform angle in [-max_degrees, +max_degrees], updating the box
// yaw and every derived label. Background is untouched.
Scene object_rotation_augment(const Scene& scene, double max_degrees,
                              uint64_t seed);

struct DatasetSummary {
  int scenes = 0;
  std::vector<int> object_count_histogram;  // index = objects in scene
};

// Writes train/test splits plus manifest.json into out_dir. Scene files are
// byte-identical for identical (cfg, seed) regardless of worker count.
DatasetSummary generate_dataset(const SceneGenConfig& cfg,
                                const std::string& out_dir);

// Relative scene paths per split from out_dir/manifest.json.
std::vector<std::string> load_manifest_split(const std::string& data_dir,
                                             const std::string& split);

}  // namespace eon
