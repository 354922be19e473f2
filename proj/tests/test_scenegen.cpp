#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "eon/scenegen.hpp"

using namespace eon;
namespace fs = std::filesystem;

namespace {

SceneGenConfig small_config() {
  SceneGenConfig cfg;
  cfg.group_order = 4;
  cfg.min_objects = 2;
  cfg.max_objects = 4;
  cfg.area_x = 8.0;
  cfg.area_y = 8.0;
  cfg.points_per_object = 60;
  cfg.background_density = 2.0;
  cfg.seed = 11;
  return cfg;
}

bool scenes_equal(const Scene& a, const Scene& b) {
  if (a.group_order != b.group_order) return false;
  if (a.points.size() != b.points.size()) return false;
  for (size_t i = 0; i < a.points.size(); ++i) {
    if ((a.points[i] - b.points[i]).norm() != 0.0) return false;
    if (a.object_id[i] != b.object_id[i]) return false;
    if (a.class_id[i] != b.class_id[i]) return false;
    if (a.foreground[i] != b.foreground[i]) return false;
    if (a.orientation_bin[i] != b.orientation_bin[i]) return false;
    if ((a.vote_target[i] - b.vote_target[i]).norm() != 0.0) return false;
  }
  if (a.gt_boxes.size() != b.gt_boxes.size()) return false;
  for (size_t i = 0; i < a.gt_boxes.size(); ++i) {
    if ((a.gt_boxes[i].center - b.gt_boxes[i].center).norm() != 0.0)
      return false;
    if (a.gt_boxes[i].yaw != b.gt_boxes[i].yaw) return false;
    if (a.gt_boxes[i].class_id != b.gt_boxes[i].class_id) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("templates are asymmetric under C8 and sized consistently") {
  const auto& templates = default_templates();
  REQUIRE(templates.size() == 3);
  for (const ShapeTemplate& tpl : templates) {
    CHECK_NOTHROW(check_template_asymmetry(tpl, 8));
    // canonical points stay strictly inside the canonical box
    for (const Vec3& p : tpl.canonical_points) {
      CHECK(std::abs(p.x) < 0.5 * tpl.box_size.x);
      CHECK(std::abs(p.y) < 0.5 * tpl.box_size.y);
      CHECK(std::abs(p.z) < 0.5 * tpl.box_size.z);
    }
  }
  const auto sizes = class_template_sizes(templates);
  CHECK(sizes.size() == 3);
  CHECK(sizes[2].x == doctest::Approx(1.6));
}

TEST_CASE("generate_scene is a pure function of (cfg, seed)") {
  const SceneGenConfig cfg = small_config();
  const Scene a = generate_scene(cfg, 1234);
  const Scene b = generate_scene(cfg, 1234);
  CHECK(scenes_equal(a, b));
  const Scene c = generate_scene(cfg, 1235);
  CHECK(!scenes_equal(a, c));
}

TEST_CASE("generated scenes satisfy every invariant") {
  const SceneGenConfig cfg = small_config();
  for (uint64_t seed : {1ULL, 2ULL, 3ULL, 42ULL}) {
    const Scene scene = generate_scene(cfg, seed);
    CHECK_NOTHROW(validate_scene(scene));
    CHECK(scene.gt_boxes.size() >= 2);
    // no background point inside any box
    for (size_t i = 0; i < scene.points.size(); ++i) {
      if (scene.object_id[i] >= 0) continue;
      for (const OrientedBox& box : scene.gt_boxes)
        CHECK(!point_in_box(scene.points[i], box));
    }
    // objects pairwise disjoint in BEV
    for (size_t i = 0; i < scene.gt_boxes.size(); ++i)
      for (size_t j = i + 1; j < scene.gt_boxes.size(); ++j)
        CHECK(bev_intersection_area(scene.gt_boxes[i], scene.gt_boxes[j]) ==
              0.0);
  }
}

TEST_CASE("zero objects yields a background-only scene") {
  SceneGenConfig cfg = small_config();
  cfg.min_objects = 0;
  cfg.max_objects = 0;
  const Scene scene = generate_scene(cfg, 5);
  CHECK(scene.gt_boxes.empty());
  CHECK(scene.points.size() > 0);
  for (size_t i = 0; i < scene.points.size(); ++i) {
    CHECK(scene.object_id[i] == -1);
    CHECK(!scene.foreground[i]);
    CHECK(scene.orientation_bin[i] == -1);
  }
}

TEST_CASE("grid yaw mode lands exactly on group angles") {
  SceneGenConfig cfg = small_config();
  cfg.yaw_mode = YawMode::kGrid;
  const CyclicGroup group = make_group(cfg.group_order);
  for (uint64_t seed : {7ULL, 8ULL}) {
    const Scene scene = generate_scene(cfg, seed);
    for (const OrientedBox& box : scene.gt_boxes) {
      const GroupElement bin = angle_to_bin(box.yaw, group);
      CHECK(std::abs(wrap_angle(box.yaw - group.angle(bin.index))) <= 1e-12);
    }
  }
}

TEST_CASE("derive_labels definitions and errors") {
  const CyclicGroup g4 = make_group(4);
  OrientedBox box;
  box.center = {1, 1, 0.25};
  box.size = {1, 1, 0.5};
  box.yaw = std::numbers::pi / 2;
  const PointCloud pts{{1.1, 0.9, 0.2}, {5, 5, 0}};

  const SceneLabels labels =
      derive_labels(pts, {0, -1}, {box}, g4);
  CHECK(labels.foreground == std::vector<uint8_t>{1, 0});
  CHECK(labels.orientation_bin[0] == 1);
  CHECK(labels.orientation_bin[1] == -1);
  CHECK((labels.vote_target[0] - (box.center - pts[0])).norm() == 0.0);
  CHECK(labels.vote_target[1].norm() == 0.0);

  // point assigned to the object but outside the box
  CHECK_THROWS_AS(derive_labels(pts, {0, 0}, {box}, g4),
                  LabelConsistencyError);
}

TEST_CASE("object rotation augmentation") {
  SceneGenConfig cfg = small_config();
  const Scene scene = generate_scene(cfg, 77);

  const Scene same = object_rotation_augment(scene, 0.0, 9);
  CHECK(scenes_equal(scene, same));

  const Scene aug = object_rotation_augment(scene, 30.0, 9);
  CHECK_NOTHROW(validate_scene(aug));
  REQUIRE(aug.gt_boxes.size() == scene.gt_boxes.size());
  const double max_rad = 30.0 * std::numbers::pi / 180.0;
  for (size_t b = 0; b < aug.gt_boxes.size(); ++b) {
    const double delta =
        std::abs(wrap_angle(aug.gt_boxes[b].yaw - scene.gt_boxes[b].yaw));
    CHECK(delta <= max_rad + 1e-12);
    CHECK((aug.gt_boxes[b].center - scene.gt_boxes[b].center).norm() == 0.0);
  }
  // every rotated point still inside its re-yawed box (validate_scene covers
  // it, but assert directly too)
  for (size_t i = 0; i < aug.points.size(); ++i)
    if (aug.object_id[i] >= 0)
      CHECK(point_in_box(aug.points[i], aug.gt_boxes[aug.object_id[i]]));
  // background untouched
  for (size_t i = 0; i < aug.points.size(); ++i)
    if (aug.object_id[i] < 0)
      CHECK((aug.points[i] - scene.points[i]).norm() == 0.0);
}

TEST_CASE("scene save/load round trip") {
  const fs::path dir = fs::temp_directory_path() / "eon_scene_io_test";
  fs::create_directories(dir);
  const SceneGenConfig cfg = small_config();
  const Scene scene = generate_scene(cfg, 3);
  const std::string path = (dir / "roundtrip.scene.json").string();
  save_scene(scene, path);
  const Scene loaded = load_scene(path);
  CHECK(scenes_equal(scene, loaded));

  // group mismatch
  CHECK_THROWS_AS(load_scene(path, 8), SceneParseError);
  CHECK_NOTHROW(load_scene(path, 4));

  // missing key is reported by name
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    const auto pos = text.find("\"gt_boxes\"");
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, 10, "\"gt_boxen\"");
    const std::string bad_path = (dir / "broken.scene.json").string();
    std::ofstream out(bad_path);
    out << broken;
    out.close();
    try {
      load_scene(bad_path);
      FAIL("expected SceneParseError");
    } catch (const SceneParseError& e) {
      CHECK(std::string(e.what()).find("gt_boxes") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset generation writes manifest and is deterministic") {
  SceneGenConfig cfg = small_config();
  cfg.train_scenes = 3;
  cfg.test_scenes = 2;
  const fs::path dir1 = fs::temp_directory_path() / "eon_ds_a";
  const fs::path dir2 = fs::temp_directory_path() / "eon_ds_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const DatasetSummary s1 = generate_dataset(cfg, dir1.string());
  const DatasetSummary s2 = generate_dataset(cfg, dir2.string());
  CHECK(s1.scenes == 5);
  CHECK(s2.scenes == 5);

  const auto train = load_manifest_split(dir1.string(), "train");
  CHECK(train.size() == 3);
  const auto test = load_manifest_split(dir1.string(), "test");
  CHECK(test.size() == 2);
  CHECK_THROWS_AS(load_manifest_split(dir1.string(), "val"), SceneParseError);

  // byte-identical files across the two runs
  for (const char* rel : {"train/scene_0000.scene.json",
                          "test/scene_0001.scene.json", "manifest.json"}) {
    std::ifstream a(dir1 / rel), b(dir2 / rel);
    REQUIRE(a.good());
    REQUIRE(b.good());
    const std::string sa((std::istreambuf_iterator<char>(a)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
