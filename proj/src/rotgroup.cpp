#include "eon/rotgroup.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_group(const GroupElement& a, const GroupElement& b) {
  if (a.order != b.order)
    throw std::invalid_argument("group elements belong to different groups (orders " +
                                std::to_string(a.order) + " and " +
                                std::to_string(b.order) + ")");
}

}  // namespace

double CyclicGroup::angle(int k) const { return kTwoPi * k / order; }

double GroupElement::angle() const { return kTwoPi * index / order; }

CyclicGroup make_group(int order) {
  if (order <= 0)
    throw std::invalid_argument("group order must be positive, got " +
                                std::to_string(order));
  return CyclicGroup{order};
}

GroupElement element(const CyclicGroup& g, int index) {
  if (index < 0 || index >= g.order)
    throw std::invalid_argument("element index " + std::to_string(index) +
                                " outside group of order " +
                                std::to_string(g.order));
  return GroupElement{index, g.order};
}

GroupElement identity(const CyclicGroup& g) { return GroupElement{0, g.order}; }

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  require_same_group(a, b);
  return GroupElement{(a.index + b.index) % a.order, a.order};
}

GroupElement inverse(const GroupElement& a) {
  return GroupElement{(a.order - a.index) % a.order, a.order};
}

Mat3 rotation_matrix(const GroupElement& a) {
  // Exact entries whenever the angle is a multiple of pi/2; cos(pi/2) as a
  // double is not exactly zero and that residue would leak into every C4
  // equivariance bound.
  if ((4LL * a.index) % a.order == 0) {
    const int quarter = static_cast<int>((4LL * a.index / a.order) % 4);
    static const double kQuarter[4][4] = {
        {1, 0, 0, 1}, {0, -1, 1, 0}, {-1, 0, 0, -1}, {0, 1, -1, 0}};
    Mat3 r;
    r.m = {kQuarter[quarter][0], kQuarter[quarter][1], 0,
           kQuarter[quarter][2], kQuarter[quarter][3], 0,
           0,                    0,                    1};
    return r;
  }
  return Mat3::yaw(a.angle());
}

double wrap_angle(double yaw) {
  double w = std::remainder(yaw, kTwoPi);  // (-pi, pi]
  if (w >= std::numbers::pi) w -= kTwoPi;  // exact pi maps to -pi
  return w;
}

GroupElement angle_to_bin(double yaw, const CyclicGroup& g) {
  if (!std::isfinite(yaw)) throw std::invalid_argument("yaw must be finite");
  // Explicit argmin rather than a floor() shortcut: on exact half-bin
  // boundaries the tie must go to the smaller index.
  int best = 0;
  double best_dist = std::abs(wrap_angle(yaw));
  for (int k = 1; k < g.order; ++k) {
    const double d = std::abs(wrap_angle(yaw - g.angle(k)));
    if (d < best_dist) {
      best = k;
      best_dist = d;
    }
  }
  return GroupElement{best, g.order};
}

GroupElement orbit_index_after_rotation(const GroupElement& k,
                                        const GroupElement& k0) {
  return compose(k0, k);
}

}  // namespace eon
