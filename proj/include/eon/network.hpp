#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "eon/rng.hpp"
#include "eon/rotgroup.hpp"
#include "eon/tape.hpp"

namespace eon {

// Named parameter tensors. Entry order is fixed at construction and defines
// the checkpoint layout; initialization is keyed by entry name so identical
// architectures initialize identically regardless of build order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  int add(const std::string& name, Tensor value);
  int find(const std::string& name) const;  // -1 when missing
  int require(const std::string& name) const;

  Entry& entry(int i) { return entries_[i]; }
  const Entry& entry(int i) const { return entries_[i]; }
  int size() const { return static_cast<int>(entries_.size()); }
  int64_t total_parameters() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
};

// Binds store entries to leaves of one tape, lazily. After backward(), the
// gradient of every touched entry can be harvested by index.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParamStore& store);
  Value operator()(int index);
  Value operator()(const std::string& name);

  // Adds this tape's gradients into `grads` (one tensor per store entry,
  // zero-initialized by the caller). Call after tape.backward().
  void accumulate_gradients(std::vector<Tensor>& grads) const;

 private:
  Tape& tape_;
  const ParamStore& store_;
  std::vector<Value> bound_;
};

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) initialization, quantized to
// float32 so default checkpoints round-trip exactly. The stream is derived
// from (seed, entry name).
void init_params(ParamStore& store, uint64_t seed);
Tensor init_tensor(std::vector<int64_t> shape, int64_t fan_in, uint64_t seed,
                   const std::string& name);

// --- deterministic point-set geometry ---------------------------------------

// Farthest-point sampling with a saturating distance: selection keys are
// min(d^2, cap^2) and ties resolve to the lowest index. The cap makes anchor
// selection stable under rotations of an isolated object (far-away candidates
// all tie at the cap and resolve by index), which the object-level
// equivariance contract depends on. Starts at index 0.
std::vector<int> farthest_point_sample(const PointCloud& points, int count,
                                       double cap);

struct NeighborLists {
  std::vector<int> offsets;  // CSR, size = anchors + 1
  std::vector<int> members;  // indices into the source point list
};

// For each anchor, the source points within `radius`, nearest `max_neighbors`
// of them, ordered by (distance^2, index).
NeighborLists ball_query(const PointCloud& source,
                         const PointCloud& anchors, double radius,
                         int max_neighbors);

// --- backbone ----------------------------------------------------------------

struct StageSpec {
  int anchors = 64;
  double radius = 0.6;
  int max_neighbors = 12;
  int channels = 32;
  int hidden = 32;
};

struct BackboneSpec {
  StageSpec stage1{192, 0.45, 12, 16, 16};
  StageSpec stage2{64, 0.90, 12, 32, 32};
  int group_kernel = 3;  // clamped to the group order (odd)
  bool depthwise_group_conv = false;
  double fps_cap = 2.0;
  int lift_channels = 2;  // constant 1 and z

  int effective_kernel(int group_order) const {
    return std::min(group_kernel | 1, group_order - ((group_order + 1) % 2));
  }
};

// Registers every backbone parameter (two SA stages, two group convs) under
// fixed names.
void register_backbone_params(ParamStore& store, const BackboneSpec& spec,
                              int group_order);
// Two-layer point heads applied per slot / on the slot max.
void register_head_params(ParamStore& store, const std::string& prefix,
                          int in_channels, int hidden, int out_channels);

// Initial orbit [P, lift_channels, N]: rotation-invariant channels (constant
// 1 and z) replicated across slots. Positional lifting happens inside the SA
// stages via per-slot rotated relative coordinates.
Value lift_inputs(Tape& tape, const PointCloud& points, int group_order);

struct SaStageOutput {
  std::vector<int> anchor_indices;  // into the stage's input point list
  PointCloud anchor_positions;
  Value orbit;  // [A, channels, N]
};

// One orbit set-abstraction stage: FPS anchors, ball-query neighborhoods,
// shared two-layer MLP on (R_g^{-1} relative position ++ input slot features),
// max over neighbors. `group_order_for_coords` slots; empty neighborhoods
// yield zeros.
SaStageOutput sa_stage(Tape& tape, ParamBinding& params,
                       const std::string& prefix, const StageSpec& spec,
                       const PointCloud& positions, Value in_orbit,
                       int group_order, double fps_cap,
                       bool rotate_relative_coords = true);

// Circular convolution over the group axis + ReLU, parameters under `prefix`.
Value group_conv_stage(Tape& tape, ParamBinding& params,
                       const std::string& prefix, Value orbit,
                       bool depthwise);

// Per-slot two-layer head: [P, C, N] -> scores [P, N].
Value orientation_head(Tape& tape, ParamBinding& params,
                       const std::string& prefix, Value orbit);
// Two-layer head on the slot-wise max: [P, C, N] -> logits [P].
Value segmentation_head(Tape& tape, ParamBinding& params,
                        const std::string& prefix, Value orbit);
// Two-layer MLP on rows: [P, Cin] -> [P, Cout] (ReLU inside, linear output).
Value mlp2(Tape& tape, ParamBinding& params, const std::string& prefix,
           Value rows);
// Same with a trailing ReLU.
Value mlp2_relu(Tape& tape, ParamBinding& params, const std::string& prefix,
                Value rows);

}  // namespace eon
