#include "eon/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "eon/parallel.hpp"
#include "eon/rng.hpp"

namespace eon {

namespace fs = std::filesystem;

namespace {

constexpr double kTemplateInset = 0.06;  // template points keep this margin
constexpr double kMaxNoise = 0.05;       // so noisy points stay inside the box
constexpr double kWallHeight = 1.0;
constexpr double kFootprintClearance = 0.08;  // background carve-out margin

// 2D region predicate in the canonical (yaw = 0) frame, given the box half
// extents already reduced by the inset.
using PlanPredicate = bool (*)(double x, double y);

bool l_plate_plan(double x, double y) {
  // Two arms of an L: bottom bar plus left column.
  const bool bottom = (x >= -0.44 && x <= 0.44 && y >= -0.44 && y <= -0.14);
  const bool column = (x >= -0.44 && x <= -0.14 && y > -0.14 && y <= 0.44);
  return bottom || column;
}

bool t_plate_plan(double x, double y) {
  const bool bar = (x >= -0.54 && x <= 0.54 && y >= 0.12 && y <= 0.44);
  const bool stem = (x >= -0.15 && x <= 0.15 && y >= -0.44 && y < 0.12);
  return bar || stem;
}

bool wedge_bar_plan(double x, double y) {
  // Thin bar running along one edge of the footprint plus a full-width head
  // at +x. Both features kill the 180-degree self-symmetry a centered bar
  // would have.
  const bool bar = (x >= -0.74 && x <= 0.74 && y >= -0.19 && y <= -0.09);
  const bool head = (x >= 0.42 && x <= 0.74 && y > -0.09 && y <= 0.19);
  return bar || head;
}

ShapeTemplate build_template(int class_id, const std::string& name,
                             PlanPredicate plan, const Vec3& box_size,
                             uint64_t seed) {
  ShapeTemplate tpl;
  tpl.class_id = class_id;
  tpl.name = name;
  tpl.box_size = box_size;
  const double hx = 0.5 * box_size.x - kTemplateInset;
  const double hy = 0.5 * box_size.y - kTemplateInset;
  const double hz = 0.5 * box_size.z - kTemplateInset;
  Rng rng(seed);
  const int target = 600;
  while (static_cast<int>(tpl.canonical_points.size()) < target) {
    const double x = rng.uniform(-hx, hx);
    const double y = rng.uniform(-hy, hy);
    if (!plan(x, y)) continue;
    tpl.canonical_points.push_back({x, y, rng.uniform(-hz, hz)});
  }
  return tpl;
}

struct Footprint {
  OrientedBox bev;  // inflated box used for separation tests
};

bool bev_disjoint(const OrientedBox& a, const OrientedBox& b) {
  return bev_intersection_area(a, b) <= 0.0;
}

OrientedBox inflate(const OrientedBox& box, double margin) {
  OrientedBox out = box;
  out.size.x += margin;
  out.size.y += margin;
  return out;
}

bool inside_any_footprint(const Vec3& p,
                          const std::vector<OrientedBox>& boxes) {
  for (const OrientedBox& box : boxes) {
    OrientedBox probe = inflate(box, 2.0 * kFootprintClearance);
    probe.size.z = 1e9;  // BEV test only
    probe.center.z = 0.0;
    if (point_in_box({p.x, p.y, 0.0}, probe)) return true;
  }
  return false;
}

}  // namespace

void SceneGenConfig::validate() const {
  if (group_order < 1) throw std::invalid_argument("group_order must be >= 1");
  if (min_objects < 0 || max_objects < min_objects)
    throw std::invalid_argument("object count range is empty");
  if (classes.empty()) throw std::invalid_argument("class set is empty");
  if (area_x <= 0 || area_y <= 0)
    throw std::invalid_argument("placement area must be positive");
  if (min_separation < 0)
    throw std::invalid_argument("min_separation must be >= 0");
  if (points_per_object < 1)
    throw std::invalid_argument("points_per_object must be positive");
  if (background_density < 0)
    throw std::invalid_argument("background_density must be >= 0");
  if (noise < 0 || noise > kMaxNoise)
    throw std::invalid_argument("noise must lie in [0, 0.05] m");
  if (train_scenes < 0 || test_scenes < 0)
    throw std::invalid_argument("scene counts must be >= 0");
  for (int c : classes)
    if (c < 0 || c >= static_cast<int>(default_templates().size()))
      throw std::invalid_argument("unknown class id " + std::to_string(c));
}

const std::vector<ShapeTemplate>& default_templates() {
  static const std::vector<ShapeTemplate> templates = [] {
    std::vector<ShapeTemplate> t;
    t.push_back(build_template(0, "L-plate", l_plate_plan, {1.0, 1.0, 0.5},
                               0xA11CE5EDULL));
    t.push_back(build_template(1, "T-plate", t_plate_plan, {1.2, 1.0, 0.4},
                               0xB0B51EDULL));
    t.push_back(build_template(2, "wedge-bar", wedge_bar_plan,
                               {1.6, 0.5, 0.35}, 0xC0FFEEULL));
    for (const ShapeTemplate& tpl : t) check_template_asymmetry(tpl, 8);
    return t;
  }();
  return templates;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  auto directed = [](const PointCloud& from, const PointCloud& to) {
    double acc = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, squared_distance(p, q));
      acc += std::sqrt(best);
    }
    return from.empty() ? 0.0 : acc / static_cast<double>(from.size());
  };
  return std::max(directed(a, b), directed(b, a));
}

void check_template_asymmetry(const ShapeTemplate& tpl, int max_group_order) {
  const CyclicGroup group = make_group(max_group_order);
  for (int k = 1; k < group.order; ++k) {
    const PointCloud rotated =
        rotate_points_about(tpl.canonical_points, Vec3{}, group.angle(k));
    const double d = chamfer_distance(tpl.canonical_points, rotated);
    if (d <= 0.05)
      throw GenerationError("template '" + tpl.name +
                            "' is nearly self-symmetric under rotation by " +
                            std::to_string(group.angle(k)) + " rad (Chamfer " +
                            std::to_string(d) + ")");
  }
}

std::vector<Vec3> class_template_sizes(const std::vector<ShapeTemplate>& tpls) {
  std::vector<Vec3> sizes;
  for (const ShapeTemplate& t : tpls) {
    if (t.class_id != static_cast<int>(sizes.size()))
      throw std::invalid_argument("template class ids must be 0..K-1 in order");
    sizes.push_back(t.box_size);
  }
  return sizes;
}

Scene generate_scene(const SceneGenConfig& cfg, uint64_t seed) {
  cfg.validate();
  const auto& templates = default_templates();
  Rng rng(derive_seed(seed, 0x5ce9e));

  Scene scene;
  scene.group_order = cfg.group_order;
  const CyclicGroup group = make_group(cfg.group_order);

  // Place objects by rejection sampling.
  const int num_objects = cfg.min_objects == cfg.max_objects
                              ? cfg.min_objects
                              : rng.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int obj = 0; obj < num_objects; ++obj) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int cls = cfg.classes[rng.uniform_index(cfg.classes.size())];
      const ShapeTemplate& tpl = templates[cls];
      double yaw;
      if (cfg.yaw_mode == YawMode::kGrid) {
        yaw = wrap_angle(group.angle(
            static_cast<int>(rng.uniform_index(group.order))));
      } else {
        yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      }
      const double half_diag =
          0.5 * std::hypot(tpl.box_size.x, tpl.box_size.y) + 0.3;
      if (cfg.area_x / 2 <= half_diag || cfg.area_y / 2 <= half_diag)
        throw GenerationError("placement area too small for object class " +
                              std::to_string(cls));
      OrientedBox box;
      box.center = {rng.uniform(-cfg.area_x / 2 + half_diag,
                                cfg.area_x / 2 - half_diag),
                    rng.uniform(-cfg.area_y / 2 + half_diag,
                                cfg.area_y / 2 - half_diag),
                    0.5 * tpl.box_size.z};
      box.size = tpl.box_size;
      box.yaw = yaw;
      box.class_id = cls;

      bool ok = true;
      for (const OrientedBox& other : scene.gt_boxes) {
        if (!bev_disjoint(inflate(box, cfg.min_separation),
                          inflate(other, cfg.min_separation))) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;

      // Sample the object's surface points from the template.
      const Mat3 rot = Mat3::yaw(yaw);
      for (int i = 0; i < cfg.points_per_object; ++i) {
        const Vec3& c =
            tpl.canonical_points[rng.uniform_index(tpl.canonical_points.size())];
        Vec3 p = c;
        if (cfg.noise > 0) {
          p.x += rng.uniform(-cfg.noise, cfg.noise);
          p.y += rng.uniform(-cfg.noise, cfg.noise);
          p.z += rng.uniform(-cfg.noise, cfg.noise);
        }
        scene.points.push_back(box.center + rot * p);
        scene.object_id.push_back(obj);
        scene.class_id.push_back(cls);
      }
      scene.gt_boxes.push_back(box);
      placed = true;
    }
    if (!placed)
      throw GenerationError("failed to place object " + std::to_string(obj) +
                            " after 1000 rejections (seed " +
                            std::to_string(seed) + ")");
  }

  // Background: a floor plane plus two wall strips.
  if (cfg.background_density > 0) {
    auto push_background = [&](const Vec3& p) {
      if (inside_any_footprint(p, scene.gt_boxes)) return;
      scene.points.push_back(p);
      scene.object_id.push_back(-1);
      scene.class_id.push_back(-1);
    };
    const int floor_count = static_cast<int>(
        std::lround(cfg.background_density * cfg.area_x * cfg.area_y));
    for (int i = 0; i < floor_count; ++i) {
      push_background({rng.uniform(-cfg.area_x / 2, cfg.area_x / 2),
                       rng.uniform(-cfg.area_y / 2, cfg.area_y / 2),
                       cfg.noise > 0 ? rng.uniform(0.0, cfg.noise) : 0.0});
    }
    const int wall_x_count = static_cast<int>(
        std::lround(cfg.background_density * cfg.area_x * kWallHeight));
    for (int i = 0; i < wall_x_count; ++i) {
      push_background({rng.uniform(-cfg.area_x / 2, cfg.area_x / 2),
                       cfg.area_y / 2, rng.uniform(0.0, kWallHeight)});
    }
    const int wall_y_count = static_cast<int>(
        std::lround(cfg.background_density * cfg.area_y * kWallHeight));
    for (int i = 0; i < wall_y_count; ++i) {
      push_background({-cfg.area_x / 2,
                       rng.uniform(-cfg.area_y / 2, cfg.area_y / 2),
                       rng.uniform(0.0, kWallHeight)});
    }
  }

  refresh_labels(scene);
  return scene;
}

Scene object_rotation_augment(const Scene& scene, double max_degrees,
                              uint64_t seed) {
  if (max_degrees < 0)
    throw std::invalid_argument("max_degrees must be >= 0");
  if (max_degrees == 0) return scene;

  Scene out = scene;
  Rng rng(derive_seed(seed, 0x0b7a06));
  const double max_rad = max_degrees * std::numbers::pi / 180.0;
  std::vector<double> delta(out.gt_boxes.size());
  for (size_t b = 0; b < out.gt_boxes.size(); ++b) {
    delta[b] = rng.uniform(-max_rad, max_rad);
    out.gt_boxes[b].yaw = wrap_angle(out.gt_boxes[b].yaw + delta[b]);
  }
  for (size_t i = 0; i < out.points.size(); ++i) {
    const int obj = out.object_id[i];
    if (obj < 0) continue;
    out.points[i] = rotate_point_about(out.points[i],
                                       out.gt_boxes[obj].center, delta[obj]);
  }
  refresh_labels(out);
  return out;
}

DatasetSummary generate_dataset(const SceneGenConfig& cfg,
                                const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(fs::path(out_dir) / "train");
  fs::create_directories(fs::path(out_dir) / "test");

  struct Job {
    std::string split;
    int index;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < cfg.train_scenes; ++i)
    jobs.push_back({"train", i, derive_seed(cfg.seed, 1, i)});
  for (int i = 0; i < cfg.test_scenes; ++i)
    jobs.push_back({"test", i, derive_seed(cfg.seed, 2, i)});

  std::vector<int> object_counts(jobs.size(), 0);
  parallel_for(
      static_cast<int>(jobs.size()),
      [&](int j) {
        const Job& job = jobs[j];
        const Scene scene = generate_scene(cfg, job.seed);
        validate_scene(scene);
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%04d.scene.json", job.index);
        save_scene(scene, (fs::path(out_dir) / job.split / name).string());
        object_counts[j] = static_cast<int>(scene.gt_boxes.size());
      },
      num_workers());

  nlohmann::json manifest;
  manifest["train"] = nlohmann::json::array();
  manifest["test"] = nlohmann::json::array();
  DatasetSummary summary;
  for (size_t j = 0; j < jobs.size(); ++j) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s/scene_%04d.scene.json",
                  jobs[j].split.c_str(), jobs[j].index);
    manifest[jobs[j].split].push_back(name);
    summary.scenes++;
    const int n = object_counts[j];
    if (n >= static_cast<int>(summary.object_count_histogram.size()))
      summary.object_count_histogram.resize(n + 1, 0);
    summary.object_count_histogram[n]++;
  }
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
  out << manifest.dump(2);
  return summary;
}

std::vector<std::string> load_manifest_split(const std::string& data_dir,
                                             const std::string& split) {
  const fs::path path = fs::path(data_dir) / "manifest.json";
  std::ifstream in(path);
  if (!in)
    throw SceneParseError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SceneParseError("malformed manifest: " + std::string(e.what()));
  }
  auto it = j.find(split);
  if (it == j.end())
    throw SceneParseError("manifest has no split '" + split + "'");
  std::vector<std::string> out;
  for (const auto& p : *it)
    out.push_back((fs::path(data_dir) / p.get<std::string>()).string());
  return out;
}

}  // namespace eon
