#include "eon/scene.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eon {

namespace {

using nlohmann::json;

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw SceneParseError(std::string("field '") + what +
                          "' must be an array of 3 numbers");
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require_key(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw SceneParseError(std::string("missing key '") + key + "'");
  return *it;
}

}  // namespace

SceneLabels derive_labels(const PointCloud& points,
                          const std::vector<int>& object_id,
                          const std::vector<OrientedBox>& gt_boxes,
                          const CyclicGroup& group) {
  if (object_id.size() != points.size())
    throw LabelConsistencyError("object assignment length differs from point count");

  SceneLabels labels;
  labels.foreground.resize(points.size(), 0);
  labels.orientation_bin.resize(points.size(), -1);
  labels.vote_target.resize(points.size(), Vec3{});

  for (size_t i = 0; i < points.size(); ++i) {
    const int obj = object_id[i];
    if (obj < 0) continue;
    if (obj >= static_cast<int>(gt_boxes.size()))
      throw LabelConsistencyError("point " + std::to_string(i) +
                                  " references missing object " +
                                  std::to_string(obj));
    const OrientedBox& box = gt_boxes[obj];
    if (!point_in_box(points[i], box))
      throw LabelConsistencyError("point " + std::to_string(i) +
                                  " assigned to object " + std::to_string(obj) +
                                  " but lies outside its box");
    labels.foreground[i] = 1;
    labels.orientation_bin[i] = angle_to_bin(box.yaw, group).index;
    labels.vote_target[i] = box.center - points[i];
  }
  return labels;
}

void refresh_labels(Scene& scene) {
  SceneLabels labels = derive_labels(scene.points, scene.object_id,
                                     scene.gt_boxes,
                                     make_group(scene.group_order));
  scene.foreground = std::move(labels.foreground);
  scene.orientation_bin = std::move(labels.orientation_bin);
  scene.vote_target = std::move(labels.vote_target);
}

void validate_scene(const Scene& scene) {
  const size_t n = scene.num_points();
  if (scene.object_id.size() != n || scene.class_id.size() != n ||
      scene.foreground.size() != n || scene.orientation_bin.size() != n ||
      scene.vote_target.size() != n)
    throw LabelConsistencyError("per-point arrays have inconsistent lengths");
  if (scene.group_order < 1)
    throw LabelConsistencyError("scene group order must be >= 1");
  for (const OrientedBox& box : scene.gt_boxes) validate_box(box);

  const CyclicGroup group = make_group(scene.group_order);
  for (size_t i = 0; i < n; ++i) {
    if (!scene.points[i].finite())
      throw LabelConsistencyError("point " + std::to_string(i) + " is non-finite");
    const int obj = scene.object_id[i];
    if (obj < 0) {
      if (scene.foreground[i])
        throw LabelConsistencyError("background point " + std::to_string(i) +
                                    " marked foreground");
      if (scene.orientation_bin[i] != -1)
        throw LabelConsistencyError("background point " + std::to_string(i) +
                                    " carries an orientation bin");
      continue;
    }
    if (obj >= static_cast<int>(scene.gt_boxes.size()))
      throw LabelConsistencyError("point references missing object");
    const OrientedBox& box = scene.gt_boxes[obj];
    if (!scene.foreground[i])
      throw LabelConsistencyError("object point " + std::to_string(i) +
                                  " not marked foreground");
    if (!point_in_box(scene.points[i], box))
      throw LabelConsistencyError("point " + std::to_string(i) +
                                  " lies outside its object box");
    if (scene.orientation_bin[i] != angle_to_bin(box.yaw, group).index)
      throw LabelConsistencyError("orientation bin of point " +
                                  std::to_string(i) +
                                  " does not match its box yaw");
    const Vec3 gap = scene.vote_target[i] + scene.points[i] - box.center;
    if (gap.norm() > 1e-9)
      throw LabelConsistencyError("vote target of point " + std::to_string(i) +
                                  " does not point at the box center");
  }
}

void save_scene(const Scene& scene, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["group_order"] = scene.group_order;

  json points = json::array();
  for (const Vec3& p : scene.points) points.push_back(vec3_to_json(p));
  j["points"] = std::move(points);
  j["object_id"] = scene.object_id;
  j["class_id"] = scene.class_id;

  json boxes = json::array();
  for (const OrientedBox& b : scene.gt_boxes) {
    boxes.push_back(json{{"center", vec3_to_json(b.center)},
                         {"size", vec3_to_json(b.size)},
                         {"yaw", b.yaw},
                         {"class_id", b.class_id}});
  }
  j["gt_boxes"] = std::move(boxes);

  json labels;
  labels["foreground"] = json::array();
  for (uint8_t f : scene.foreground) labels["foreground"].push_back(f ? 1 : 0);
  labels["orientation_bin"] = scene.orientation_bin;
  json votes = json::array();
  for (const Vec3& v : scene.vote_target) votes.push_back(vec3_to_json(v));
  labels["vote_target"] = std::move(votes);
  j["labels"] = std::move(labels);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Scene load_scene(const std::string& path, int expected_group_order) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SceneParseError("cannot open scene file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SceneParseError("malformed JSON in '" + path + "': " + e.what());
  }

  Scene scene;
  const int version = require_key(j, "format_version").get<int>();
  if (version != 1)
    throw SceneParseError("unsupported scene format_version " +
                          std::to_string(version));
  scene.group_order = require_key(j, "group_order").get<int>();
  if (expected_group_order > 0 && scene.group_order != expected_group_order)
    throw SceneParseError("scene group order " +
                          std::to_string(scene.group_order) +
                          " does not match configured group order " +
                          std::to_string(expected_group_order));

  for (const json& p : require_key(j, "points"))
    scene.points.push_back(vec3_from_json(p, "points"));
  scene.object_id = require_key(j, "object_id").get<std::vector<int>>();
  scene.class_id = require_key(j, "class_id").get<std::vector<int>>();

  for (const json& b : require_key(j, "gt_boxes")) {
    OrientedBox box;
    box.center = vec3_from_json(require_key(b, "center"), "center");
    box.size = vec3_from_json(require_key(b, "size"), "size");
    box.yaw = require_key(b, "yaw").get<double>();
    box.class_id = require_key(b, "class_id").get<int>();
    scene.gt_boxes.push_back(box);
  }

  const json& labels = require_key(j, "labels");
  for (const json& f : require_key(labels, "foreground"))
    scene.foreground.push_back(f.get<int>() ? 1 : 0);
  scene.orientation_bin =
      require_key(labels, "orientation_bin").get<std::vector<int>>();
  for (const json& v : require_key(labels, "vote_target"))
    scene.vote_target.push_back(vec3_from_json(v, "vote_target"));

  validate_scene(scene);
  return scene;
}

}  // namespace eon
