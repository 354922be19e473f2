#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numbers>

#include "eon/rng.hpp"
#include "eon/rotgroup.hpp"

using namespace eon;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("make_group basic") {
  const CyclicGroup g4 = make_group(4);
  CHECK(g4.order == 4);
  CHECK(g4.angle(0) == doctest::Approx(0.0));
  CHECK(g4.angle(1) == doctest::Approx(kPi / 2));
  CHECK(g4.angle(2) == doctest::Approx(kPi));
  CHECK(g4.angle(3) == doctest::Approx(3 * kPi / 2));

  const CyclicGroup g1 = make_group(1);
  CHECK(g1.order == 1);
  CHECK(identity(g1).index == 0);

  const CyclicGroup g8 = make_group(8);
  for (int k = 0; k < 8; ++k)
    CHECK(g8.angle(k) == doctest::Approx(k * kPi / 4));

  CHECK_THROWS_AS(make_group(0), std::invalid_argument);
  CHECK_THROWS_AS(make_group(-3), std::invalid_argument);
}

TEST_CASE("group axioms hold exhaustively for N <= 16") {
  for (int n = 1; n <= 16; ++n) {
    const CyclicGroup g = make_group(n);
    const GroupElement e = identity(g);
    for (int a = 0; a < n; ++a) {
      const GroupElement ea = element(g, a);
      // identity and inverse laws
      CHECK(compose(e, ea) == ea);
      CHECK(compose(ea, e) == ea);
      CHECK(compose(ea, inverse(ea)) == e);
      CHECK(compose(inverse(ea), ea) == e);
      for (int b = 0; b < n; ++b) {
        const GroupElement eb = element(g, b);
        const GroupElement ab = compose(ea, eb);
        CHECK(ab.index >= 0);
        CHECK(ab.index < n);  // closure
        for (int c = 0; c < n; ++c) {
          const GroupElement ec = element(g, c);
          CHECK(compose(compose(ea, eb), ec) == compose(ea, compose(eb, ec)));
        }
      }
    }
  }
}

TEST_CASE("compose examples") {
  const CyclicGroup g4 = make_group(4);
  CHECK(compose(element(g4, 1), element(g4, 2)).index == 3);
  CHECK(compose(element(g4, 3), element(g4, 2)).index == 1);
  const CyclicGroup g2 = make_group(2);
  CHECK_THROWS_AS(compose(element(g4, 1), element(g2, 1)),
                  std::invalid_argument);
}

TEST_CASE("inverse examples") {
  const CyclicGroup g4 = make_group(4);
  CHECK(inverse(element(g4, 3)).index == 1);
  CHECK(inverse(identity(g4)).index == 0);
  const CyclicGroup g2 = make_group(2);
  CHECK(inverse(element(g2, 1)).index == 1);
}

TEST_CASE("rotation matrices") {
  const CyclicGroup g4 = make_group(4);

  const Mat3 r0 = rotation_matrix(element(g4, 0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(r0(i, j) == (i == j ? 1.0 : 0.0));

  // Quarter turns must be exact.
  const Mat3 r1 = rotation_matrix(element(g4, 1));
  CHECK(r1(0, 0) == 0.0);
  CHECK(r1(0, 1) == -1.0);
  CHECK(r1(1, 0) == 1.0);
  CHECK(r1(1, 1) == 0.0);
  CHECK(r1(2, 2) == 1.0);

  const Mat3 r2 = rotation_matrix(element(g4, 2));
  CHECK(r2(0, 0) == -1.0);
  CHECK(r2(1, 1) == -1.0);
  CHECK(r2(2, 2) == 1.0);
  CHECK(r2(0, 1) == 0.0);
}

TEST_CASE("rotation matrix is a homomorphism") {
  for (int n : {1, 2, 3, 4, 5, 8, 12, 16}) {
    const CyclicGroup g = make_group(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const Mat3 lhs = rotation_matrix(compose(element(g, a), element(g, b)));
        const Mat3 rhs = rotation_matrix(element(g, a)) *
                         rotation_matrix(element(g, b));
        for (int i = 0; i < 9; ++i)
          CHECK(std::abs(lhs.m[i] - rhs.m[i]) <= 1e-12);
      }
    // orthonormal with determinant 1
    for (int a = 0; a < n; ++a) {
      const Mat3 r = rotation_matrix(element(g, a));
      const Mat3 rrt = r * r.transposed();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(std::abs(rrt(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-15);
      const double det =
          r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
          r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
          r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
      CHECK(std::abs(det - 1.0) <= 1e-15);
    }
  }
}

TEST_CASE("angle_to_bin") {
  const CyclicGroup g4 = make_group(4);
  CHECK(angle_to_bin(0.0, g4).index == 0);
  CHECK(angle_to_bin(0.8, g4).index == 1);
  // Exact tie between bins 0 and 3 resolves to the smaller index.
  CHECK(angle_to_bin(-kPi / 4, g4).index == 0);
  // Upper-boundary tie between bins 0 and 1 also resolves down.
  CHECK(angle_to_bin(kPi / 4, g4).index == 0);
  CHECK_THROWS_AS(angle_to_bin(std::nan(""), g4), std::invalid_argument);

  // Exact on grid angles for every k, any N.
  for (int n : {1, 2, 3, 4, 6, 8, 16}) {
    const CyclicGroup g = make_group(n);
    for (int k = 0; k < n; ++k) {
      CHECK(angle_to_bin(g.angle(k), g).index == k);
      CHECK(angle_to_bin(wrap_angle(g.angle(k)), g).index == k);
    }
  }
}

TEST_CASE("angle_to_bin matches brute-force distance enumeration") {
  Rng rng(123);
  for (int n : {1, 2, 4, 8}) {
    const CyclicGroup g = make_group(n);
    for (int trial = 0; trial < 500; ++trial) {
      const double yaw = rng.uniform(-10.0, 10.0);
      int best = 0;
      double best_d = std::abs(wrap_angle(yaw - g.angle(0)));
      for (int k = 1; k < n; ++k) {
        const double d = std::abs(wrap_angle(yaw - g.angle(k)));
        if (d < best_d) {
          best = k;
          best_d = d;
        }
      }
      CHECK(angle_to_bin(yaw, g).index == best);
    }
  }
}

TEST_CASE("wrap_angle canonical representative") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(2 * kPi) == doctest::Approx(0.0));
  CHECK(wrap_angle(3.0) == doctest::Approx(3.0));
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(rng.uniform(-50.0, 50.0));
    CHECK(w >= -kPi);
    CHECK(w < kPi);
  }
}

TEST_CASE("orbit shift composition") {
  const CyclicGroup g4 = make_group(4);

  // [a,b,c,d] shifted by one: new[k0+k] = old[k].
  const std::vector<char> orbit{'a', 'b', 'c', 'd'};
  CHECK(shift_orbit(orbit, 1) == std::vector<char>{'d', 'a', 'b', 'c'});
  CHECK(shift_orbit(orbit, 0) == orbit);
  CHECK(shift_orbit(shift_orbit(orbit, 2), 2) == orbit);

  // shifting by k0 then k1 equals shifting by compose(k1, k0)
  for (int k0 = 0; k0 < 4; ++k0)
    for (int k1 = 0; k1 < 4; ++k1) {
      const auto twice = shift_orbit(shift_orbit(orbit, k0), k1);
      const int once =
          compose(element(g4, k1), element(g4, k0)).index;
      CHECK(twice == shift_orbit(orbit, once));
    }

  // index map agrees with the array shift
  for (int k0 = 0; k0 < 4; ++k0) {
    const auto shifted = shift_orbit(orbit, k0);
    for (int k = 0; k < 4; ++k) {
      const GroupElement kp =
          orbit_index_after_rotation(element(g4, k), element(g4, k0));
      CHECK(shifted[kp.index] == orbit[k]);
    }
  }
}
