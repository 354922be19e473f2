#pragma once

#include <vector>

#include "eon/linalg.hpp"

namespace eon {

// Discretized yaw rotation group: N elements at angles 2*pi*k/N about the
// gravity axis. Values are immutable; elements carry the order so mixed-group
// operations can be rejected.
struct CyclicGroup {
  int order = 1;

  int size() const { return order; }
  double angle(int k) const;
};

struct GroupElement {
  int index = 0;
  int order = 1;

  double angle() const;
  bool is_identity() const { return index == 0; }
  bool operator==(const GroupElement&) const = default;
};

CyclicGroup make_group(int order);

GroupElement element(const CyclicGroup& g, int index);
GroupElement identity(const CyclicGroup& g);

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);

// Yaw rotation matrix for the element's angle. Quarter turns are emitted with
// exact 0/+-1 entries so the C4 equivariance properties hold bitwise.
Mat3 rotation_matrix(const GroupElement& a);

// Wraps an angle into [-pi, pi).
double wrap_angle(double yaw);

// Nearest orientation bin under wrapped angular distance, ties to the smaller
// index. Throws on non-finite yaw.
GroupElement angle_to_bin(double yaw, const CyclicGroup& g);

// Slot index a feature at slot k moves to when the input rotates by k0:
// shifting the orbit array by k0 positions realizes f'(k') = f(k).
GroupElement orbit_index_after_rotation(const GroupElement& k,
                                        const GroupElement& k0);

// Circular shift of an orbit array: out[(k0 + k) mod N] = in[k].
template <typename T>
std::vector<T> shift_orbit(const std::vector<T>& orbit, int k0) {
  const int n = static_cast<int>(orbit.size());
  std::vector<T> out(orbit.size());
  for (int k = 0; k < n; ++k) out[((k0 % n + n) + k) % n] = orbit[k];
  return out;
}

}  // namespace eon
