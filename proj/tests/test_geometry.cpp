#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <numbers>

#include "eon/geometry.hpp"
#include "eon/rng.hpp"

using namespace eon;

namespace {

constexpr double kPi = std::numbers::pi;

OrientedBox make_box(Vec3 center, Vec3 size, double yaw, int cls = 0) {
  OrientedBox b;
  b.center = center;
  b.size = size;
  b.yaw = yaw;
  b.class_id = cls;
  return b;
}

// Monte-Carlo IoU oracle: uniform samples in the union's bounding box.
double monte_carlo_iou(const OrientedBox& a, const OrientedBox& b,
                       uint64_t seed, int samples = 100000) {
  Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
  for (const OrientedBox* box : {&a, &b}) {
    for (const Vec3& c : box_corners(*box)) {
      lo.x = std::min(lo.x, c.x);
      lo.y = std::min(lo.y, c.y);
      lo.z = std::min(lo.z, c.z);
      hi.x = std::max(hi.x, c.x);
      hi.y = std::max(hi.y, c.y);
      hi.z = std::max(hi.z, c.z);
    }
  }
  Rng rng(seed);
  int in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec3 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y),
                 rng.uniform(lo.z, hi.z)};
    const bool pa = point_in_box(p, a);
    const bool pb = point_in_box(p, b);
    in_a += pa;
    in_b += pb;
    in_both += pa && pb;
  }
  const int in_union = in_a + in_b - in_both;
  return in_union == 0 ? 0.0
                       : static_cast<double>(in_both) / in_union;
}

OrientedBox random_box(Rng& rng) {
  return make_box({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                   rng.uniform(-0.5, 0.5)},
                  {rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0),
                   rng.uniform(0.4, 1.5)},
                  rng.uniform(-kPi, kPi));
}

}  // namespace

TEST_CASE("box corners") {
  const OrientedBox cube = make_box({0, 0, 0}, {1, 1, 1}, 0.0);
  const auto corners = box_corners(cube);
  for (const Vec3& c : corners) {
    CHECK(std::abs(std::abs(c.x) - 0.5) <= 1e-15);
    CHECK(std::abs(std::abs(c.y) - 0.5) <= 1e-15);
    CHECK(std::abs(std::abs(c.z) - 0.5) <= 1e-15);
  }
  // Binary-counter order: bit0 -> x, bit1 -> y, bit2 -> z.
  CHECK(corners[0].x < 0);
  CHECK(corners[1].x > 0);
  CHECK(corners[2].y > 0);
  CHECK(corners[4].z > 0);

  // Rotating the cube by pi/2 permutes the corner set.
  const auto rotated = box_corners(make_box({0, 0, 0}, {1, 1, 1}, kPi / 2));
  for (const Vec3& rc : rotated) {
    bool found = false;
    for (const Vec3& c : corners)
      if ((rc - c).norm() < 1e-12) found = true;
    CHECK(found);
  }

  const auto shifted =
      box_corners(make_box({1, 2, 3}, {2, 2, 2}, 0.0));
  for (const Vec3& c : shifted) {
    CHECK(std::abs(std::abs(c.x - 1.0) - 1.0) <= 1e-15);
    CHECK(std::abs(std::abs(c.y - 2.0) - 1.0) <= 1e-15);
    CHECK(std::abs(std::abs(c.z - 3.0) - 1.0) <= 1e-15);
  }
}

TEST_CASE("points_in_box") {
  const OrientedBox cube = make_box({0, 0, 0}, {1, 1, 1}, 0.0);
  CHECK(point_in_box({0, 0, 0}, cube));
  CHECK(!point_in_box({0.6, 0, 0}, cube));
  CHECK(point_in_box({0.5, 0.5, 0.5}, cube));  // boundary counts as inside

  // (0.6, 0.6, 0) in the pi/4-rotated unit cube sits at ~(0.849, 0, 0) in the
  // box frame, outside the half extent.
  const OrientedBox tilted = make_box({0, 0, 0}, {1, 1, 1}, kPi / 4);
  CHECK(!point_in_box({0.6, 0.6, 0.0}, tilted));
  CHECK(point_in_box({0.3, 0.3, 0.0}, tilted));

  const PointCloud pts{{0, 0, 0}, {0.6, 0, 0}, {0.2, -0.2, 0.4}};
  const auto mask = points_in_box(pts, cube);
  CHECK(mask == std::vector<uint8_t>{1, 0, 1});
}

TEST_CASE("points_in_box invariant under joint rotation") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const OrientedBox box = random_box(rng);
    const Vec3 pivot{rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0};
    const double yaw = rng.uniform(-kPi, kPi);
    PointCloud pts;
    for (int i = 0; i < 40; ++i)
      pts.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2),
                     rng.uniform(-1, 1)});
    const auto before = points_in_box(pts, box);

    OrientedBox moved = box;
    moved.center = rotate_point_about(box.center, pivot, yaw);
    moved.yaw = wrap_angle(box.yaw + yaw);
    const auto after = points_in_box(rotate_points_about(pts, pivot, yaw), moved);
    CHECK(before == after);
  }
}

TEST_CASE("rotated_iou basics") {
  const OrientedBox cube = make_box({0, 0, 0}, {1, 1, 1}, 0.0);
  CHECK(rotated_iou(cube, cube) == doctest::Approx(1.0));

  const OrientedBox far_away = make_box({5, 5, 0}, {1, 1, 1}, 0.3);
  CHECK(rotated_iou(cube, far_away) == 0.0);

  // Analytic: overlap 0.5, union 1.5.
  const OrientedBox offset = make_box({0.5, 0, 0}, {1, 1, 1}, 0.0);
  CHECK(rotated_iou(cube, offset) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  // Symmetry.
  CHECK(rotated_iou(offset, cube) == doctest::Approx(rotated_iou(cube, offset)));

  // Degenerate extent contributes zero, not NaN.
  OrientedBox flat = cube;
  flat.size.z = 1e-14;
  CHECK(rotated_iou(flat, cube) == 0.0);
}

TEST_CASE("rotated_iou invariant under common rigid yaw") {
  Rng rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    const OrientedBox a = random_box(rng);
    const OrientedBox b = random_box(rng);
    const double base = rotated_iou(a, b);
    const Vec3 pivot{rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0};
    const double yaw = rng.uniform(-kPi, kPi);
    OrientedBox am = a, bm = b;
    am.center = rotate_point_about(a.center, pivot, yaw);
    am.yaw = wrap_angle(a.yaw + yaw);
    bm.center = rotate_point_about(b.center, pivot, yaw);
    bm.yaw = wrap_angle(b.yaw + yaw);
    CHECK(std::abs(rotated_iou(am, bm) - base) <= 1e-9);
  }
}

TEST_CASE("rotated_iou matches the Monte-Carlo oracle") {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    OrientedBox a = random_box(rng);
    OrientedBox b = random_box(rng);
    // Put half the pairs close enough that intersections are common.
    if (trial % 2 == 0) b.center = a.center + Vec3{0.2, -0.1, 0.1};
    const double exact = rotated_iou(a, b);
    const double mc = monte_carlo_iou(a, b, 1000 + trial);
    CHECK(std::abs(exact - mc) <= 0.01);
  }
}

TEST_CASE("box frame transforms") {
  const CyclicGroup g4 = make_group(4);

  // h = identity, region center 0 -> unchanged.
  const OrientedBox inv = make_box({1, 0, 0}, {1, 2, 0.5}, 0.3, 2);
  const OrientedBox same = box_to_scene_frame(inv, identity(g4), Vec3{});
  CHECK((same.center - inv.center).norm() == 0.0);
  CHECK(same.yaw == inv.yaw);
  CHECK(same.class_id == 2);

  // c_inv=(1,0,0), h = bin 1 (pi/2), center 0 -> (0,1,0), yaw 0.3 + pi/2.
  const OrientedBox placed = box_to_scene_frame(inv, element(g4, 1), Vec3{});
  CHECK(placed.center.x == doctest::Approx(0.0));
  CHECK(placed.center.y == doctest::Approx(1.0));
  CHECK(placed.yaw == doctest::Approx(0.3 + kPi / 2));
  CHECK((placed.size - inv.size).norm() == 0.0);

  // Round trip scene -> object -> scene.
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const OrientedBox scene = random_box(rng);
    const GroupElement h = element(g4, rng.uniform_int(0, 3));
    const Vec3 rc{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
    const OrientedBox obj = box_to_object_frame(scene, h, rc);
    const OrientedBox back = box_to_scene_frame(obj, h, rc);
    CHECK((back.center - scene.center).norm() <= 1e-12);
    CHECK(std::abs(wrap_angle(back.yaw - scene.yaw)) <= 1e-12);
    CHECK((back.size - scene.size).norm() == 0.0);
  }
}

TEST_CASE("rotate_points_about") {
  const PointCloud pts{{1, 0, 0}, {0, 1, 0.5}};
  const PointCloud same = rotate_points_about(pts, {2, 2, 0}, 0.0);
  CHECK((same[0] - pts[0]).norm() == 0.0);

  const PointCloud quarter = rotate_points_about(pts, Vec3{}, kPi / 2);
  CHECK(quarter[0].x == doctest::Approx(0.0));
  CHECK(quarter[0].y == doctest::Approx(1.0));
  CHECK(quarter[1].z == 0.5);  // z preserved

  // Pairwise distances preserved.
  Rng rng(55);
  PointCloud cloud;
  for (int i = 0; i < 30; ++i)
    cloud.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 1)});
  const Vec3 pivot{0.7, -0.3, 0.0};
  const PointCloud rotated = rotate_points_about(cloud, pivot, 1.234);
  for (size_t i = 0; i < cloud.size(); ++i)
    for (size_t j = i + 1; j < cloud.size(); ++j) {
      const double before = (cloud[i] - cloud[j]).norm();
      const double after = (rotated[i] - rotated[j]).norm();
      CHECK(std::abs(before - after) <= 1e-12);
    }
}

TEST_CASE("validate_box rejects bad boxes") {
  OrientedBox bad = make_box({0, 0, 0}, {1, -1, 1}, 0.0);
  CHECK_THROWS_AS(validate_box(bad), std::invalid_argument);
  OrientedBox nan_box = make_box({std::nan(""), 0, 0}, {1, 1, 1}, 0.0);
  CHECK_THROWS_AS(validate_box(nan_box), std::invalid_argument);
  CHECK_NOTHROW(validate_box(make_box({0, 0, 0}, {1, 1, 1}, 0.0)));
}
