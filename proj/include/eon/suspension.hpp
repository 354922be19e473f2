#pragma once

#include <optional>
#include <vector>

#include "eon/network.hpp"
#include "eon/rotgroup.hpp"
#include "eon/tape.hpp"

namespace eon {

// Result of the objectness-aware orbit decomposition: an orientation
// hypothesis per foreground point and an invariant object-frame feature for
// everything.
struct DecomposedSeeds {
  Value f_inv;                      // [P, C]
  std::vector<int> orientation;     // slot index per row; -1 where undefined
  std::vector<uint8_t> foreground;  // mask the decomposition used
  Value orientation_scores;         // [P, N] pass-through
};

// Foreground rows take the orbit slice at the argmax score slot (ties to the
// smaller index); background rows take the slot-wise max.
DecomposedSeeds decompose(Tape& tape, Value orbit, Value scores,
                          std::vector<uint8_t> foreground);

// Replaces predicted orientation and/or foreground with ground truth,
// re-slicing f_inv consistently. gt_orientation uses -1 for rows whose
// orientation is undefined in the labels; such rows keep the predicted
// argmax.
DecomposedSeeds oracle_overrides(Tape& tape, Value orbit,
                                 const DecomposedSeeds& in,
                                 const std::vector<int>& gt_orientation,
                                 const std::vector<uint8_t>& gt_foreground,
                                 bool use_gt_orientation,
                                 bool use_gt_segmentation);

enum class RegionRule { kMode, kCentralPoint };

struct RegionOrientationResult {
  GroupElement element;
  bool low_confidence = false;
};

// Mode rule: the most frequent bin among the region's foreground members,
// ties by larger summed orientation score then smaller index; empty
// membership yields the identity flagged low-confidence. Central-point rule:
// the designated central member's hypothesis (flagged when it has none).
RegionOrientationResult region_orientation(
    const CyclicGroup& group,
    const std::vector<GroupElement>& member_orientations,
    const std::vector<double>& member_scores, RegionRule rule,
    std::optional<GroupElement> central_orientation = std::nullopt);

}  // namespace eon
