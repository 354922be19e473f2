#include "eon/suspension.hpp"

#include <stdexcept>

namespace eon {

namespace {

// Per-row argmax over orientation scores, ties to the smaller slot.
std::vector<int> score_argmax(const Tensor& scores) {
  const int64_t p = scores.dim(0), n = scores.dim(1);
  std::vector<int> out(p, 0);
  for (int64_t i = 0; i < p; ++i) {
    double best = scores.at2(i, 0);
    for (int64_t g = 1; g < n; ++g)
      if (scores.at2(i, g) > best) {
        best = scores.at2(i, g);
        out[i] = static_cast<int>(g);
      }
  }
  return out;
}

DecomposedSeeds decompose_impl(Tape& tape, Value orbit, Value scores,
                               std::vector<uint8_t> foreground,
                               const std::vector<int>* forced_orientation) {
  const Tensor& torb = tape.val(orbit);
  const Tensor& tsc = tape.val(scores);
  if (torb.rank() != 3) throw std::invalid_argument("decompose: orbit rank");
  if (tsc.dim(0) != torb.dim(0) || tsc.dim(1) != torb.dim(2))
    throw std::invalid_argument("decompose: score shape mismatch");
  if (static_cast<int64_t>(foreground.size()) != torb.dim(0))
    throw std::invalid_argument("decompose: foreground mask size");

  const std::vector<int> predicted = score_argmax(tsc);
  DecomposedSeeds out;
  out.foreground = std::move(foreground);
  out.orientation.assign(out.foreground.size(), -1);
  std::vector<int> slice_slot(out.foreground.size(), 0);
  for (size_t i = 0; i < out.foreground.size(); ++i) {
    if (!out.foreground[i]) continue;
    int slot = predicted[i];
    if (forced_orientation && (*forced_orientation)[i] >= 0)
      slot = (*forced_orientation)[i];
    out.orientation[i] = slot;
    slice_slot[i] = slot;
  }
  const Value sliced = tape.take_slot_per_row(orbit, slice_slot);
  const Value pooled = tape.slot_max(orbit);
  out.f_inv = tape.where_rows(out.foreground, sliced, pooled);
  out.orientation_scores = scores;
  return out;
}

}  // namespace

DecomposedSeeds decompose(Tape& tape, Value orbit, Value scores,
                          std::vector<uint8_t> foreground) {
  return decompose_impl(tape, orbit, scores, std::move(foreground), nullptr);
}

DecomposedSeeds oracle_overrides(Tape& tape, Value orbit,
                                 const DecomposedSeeds& in,
                                 const std::vector<int>& gt_orientation,
                                 const std::vector<uint8_t>& gt_foreground,
                                 bool use_gt_orientation,
                                 bool use_gt_segmentation) {
  if (!use_gt_orientation && !use_gt_segmentation) return in;
  if (use_gt_segmentation &&
      gt_foreground.size() != in.foreground.size())
    throw std::invalid_argument("oracle_overrides: missing segmentation labels");
  if (use_gt_orientation &&
      gt_orientation.size() != in.foreground.size())
    throw std::invalid_argument("oracle_overrides: missing orientation labels");

  std::vector<uint8_t> fg =
      use_gt_segmentation ? gt_foreground : in.foreground;
  return decompose_impl(tape, orbit, in.orientation_scores, std::move(fg),
                        use_gt_orientation ? &gt_orientation : nullptr);
}

RegionOrientationResult region_orientation(
    const CyclicGroup& group,
    const std::vector<GroupElement>& member_orientations,
    const std::vector<double>& member_scores, RegionRule rule,
    std::optional<GroupElement> central_orientation) {
  if (rule == RegionRule::kCentralPoint) {
    if (central_orientation.has_value())
      return {*central_orientation, false};
    return {identity(group), true};
  }

  if (member_orientations.empty()) return {identity(group), true};
  if (member_scores.size() != member_orientations.size())
    throw std::invalid_argument("region_orientation: score list size");

  std::vector<int> counts(group.order, 0);
  std::vector<double> score_sums(group.order, 0.0);
  for (size_t i = 0; i < member_orientations.size(); ++i) {
    const GroupElement& g = member_orientations[i];
    if (g.order != group.order)
      throw std::invalid_argument("region_orientation: mixed groups");
    counts[g.index] += 1;
    score_sums[g.index] += member_scores[i];
  }
  int best = 0;
  for (int k = 1; k < group.order; ++k) {
    if (counts[k] > counts[best] ||
        (counts[k] == counts[best] && score_sums[k] > score_sums[best]))
      best = k;
  }
  return {element(group, best), false};
}

}  // namespace eon
