#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "eon/linalg.hpp"
#include "eon/tensor.hpp"

namespace eon {

// Handle into a Tape. Cheap to copy; meaningless across tapes.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over a dynamically recorded graph. A tape is
// single-use: build a forward pass, call backward once, read gradients.
// Creation order is the topological order, and every backward closure runs
// in fixed reverse order, so gradients are bit-deterministic.
class Tape {
 public:
  Value input(Tensor t);  // constant, no gradient
  Value leaf(Tensor t);   // differentiable leaf

  const Tensor& val(Value v) const { return nodes_[v.id].val; }
  const Tensor& grad(Value v) const;

  // Elementwise / structural ops.
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value scale(Value a, double s);
  Value relu(Value a);
  Value exp(Value a);
  Value mul_const(Value a, Tensor c);  // elementwise, same shape
  Value concat_cols(Value a, Value b);
  Value gather_rows(Value a, std::vector<int> rows);
  Value slice_cols(Value a, int64_t lo, int64_t hi);  // [M, hi-lo)
  Value reshape(Value a, std::vector<int64_t> shape);
  // Row-wise select: out[i] = mask[i] ? a[i] : b[i].
  Value where_rows(std::vector<uint8_t> mask, Value a, Value b);
  Value rotate_rows(Value a, std::vector<Mat3> rot);  // [M,3] per-row matrices

  // Affine map: x [M,K] @ w [K,N] + b [N].
  Value linear(Value x, Value w, Value b);

  // Per-segment column-wise max. Rows of `a` are grouped by contiguous CSR
  // offsets (size S+1); empty segments produce zeros.
  Value segment_max(Value a, std::vector<int> offsets);

  // Orbit ops on [P, C, N] tensors.
  Value slot(Value a3, int g);
  Value stack_slots(const std::vector<Value>& slots);
  Value slot_max(Value a3);
  Value take_slot_per_row(Value a3, std::vector<int> slot_index);
  // Circular convolution along the group axis: w [Cout, Cin, K] (or [C, K]
  // when depthwise), bias [Cout]; K odd and <= N.
  Value group_conv(Value a3, Value w, Value b, bool depthwise);

  // Column-vector math ([M] tensors).
  Value atan2(Value y, Value x);

  // Losses (scalar outputs). Masked variants average over the selected rows
  // and are exactly zero when the mask is empty.
  Value softmax_cross_entropy(Value logits, std::vector<int> labels,
                              std::vector<uint8_t> mask);
  Value bce_with_logits(Value logits, std::vector<double> targets,
                        std::vector<uint8_t> mask);
  Value l1_rows(Value pred, Tensor target, std::vector<uint8_t> mask);
  Value wrapped_angle_l1(Value yaw, std::vector<double> target,
                         std::vector<uint8_t> mask);
  Value sum_all(Value a);
  Value weighted_sum(const std::vector<std::pair<double, Value>>& terms);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar.
  void backward(Value loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void()> back;  // empty for leaves/inputs
    bool needs_grad = false;
  };

  Value push(Tensor val, bool needs_grad, std::function<void()> back);
  Tensor& grad_buf(Value v) { return nodes_[v.id].grad; }
  bool needs(Value v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace eon
