#include "eon/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eon {

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

int ParamStore::add(const std::string& name, Tensor value) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  const int index = static_cast<int>(entries_.size());
  entries_.push_back({name, std::move(value)});
  by_name_[name] = index;
  return index;
}

int ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int ParamStore::require(const std::string& name) const {
  const int i = find(name);
  if (i < 0) throw std::invalid_argument("missing parameter '" + name + "'");
  return i;
}

int64_t ParamStore::total_parameters() const {
  int64_t n = 0;
  for (const Entry& e : entries_) n += e.value.numel();
  return n;
}

ParamBinding::ParamBinding(Tape& tape, const ParamStore& store)
    : tape_(tape), store_(store), bound_(store.size(), Value{}) {}

Value ParamBinding::operator()(int index) {
  if (!bound_[index].valid())
    bound_[index] = tape_.leaf(store_.entry(index).value);
  return bound_[index];
}

Value ParamBinding::operator()(const std::string& name) {
  return (*this)(store_.require(name));
}

void ParamBinding::accumulate_gradients(std::vector<Tensor>& grads) const {
  for (size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i].valid()) continue;
    const Tensor& g = tape_.grad(bound_[i]);
    for (int64_t k = 0; k < g.numel(); ++k) grads[i].v[k] += g.v[k];
  }
}

Tensor init_tensor(std::vector<int64_t> shape, int64_t fan_in, uint64_t seed,
                   const std::string& name) {
  Tensor t = Tensor::zeros(std::move(shape));
  Rng rng(derive_seed(seed, fnv1a(name)));
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<int64_t>(
                                           fan_in, 1)));
  for (double& x : t.v)
    x = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
  return t;
}

void init_params(ParamStore& store, uint64_t seed) {
  for (int i = 0; i < store.size(); ++i) {
    ParamStore::Entry& e = store.entry(i);
    int64_t fan_in = 1;
    if (e.value.rank() == 2) {
      fan_in = e.value.dim(0);  // affine weight [K, N]
    } else if (e.value.rank() == 3) {
      fan_in = e.value.dim(1) * e.value.dim(2);  // conv kernel [Cout, Cin, K]
    } else if (e.value.rank() == 1) {
      // biases start at zero-ish scale tied to their layer width
      fan_in = e.value.dim(0);
    }
    e.value = init_tensor(e.value.shape, fan_in, seed, e.name);
  }
}

std::vector<int> farthest_point_sample(const PointCloud& points, int count,
                                       double cap) {
  const int p = static_cast<int>(points.size());
  count = std::min(count, p);
  std::vector<int> selected;
  if (count <= 0 || p == 0) return selected;
  if (cap <= 0) throw std::invalid_argument("fps cap must be positive");
  const double cap_sq = cap * cap;

  std::vector<double> key(p);
  selected.push_back(0);
  for (int i = 0; i < p; ++i)
    key[i] = std::min(squared_distance(points[i], points[0]), cap_sq);

  while (static_cast<int>(selected.size()) < count) {
    int best = -1;
    double best_key = -1.0;
    for (int i = 0; i < p; ++i) {
      if (key[i] > best_key) {  // strict: ties resolve to the lowest index
        best_key = key[i];
        best = i;
      }
    }
    selected.push_back(best);
    for (int i = 0; i < p; ++i)
      key[i] = std::min(key[i], squared_distance(points[i], points[best]));
  }
  return selected;
}

NeighborLists ball_query(const PointCloud& source, const PointCloud& anchors,
                         double radius, int max_neighbors) {
  if (radius <= 0) throw std::invalid_argument("ball_query radius must be > 0");
  if (max_neighbors < 1)
    throw std::invalid_argument("ball_query max_neighbors must be >= 1");
  const double r_sq = radius * radius;
  NeighborLists out;
  out.offsets.reserve(anchors.size() + 1);
  out.offsets.push_back(0);
  std::vector<std::pair<double, int>> found;
  for (const Vec3& anchor : anchors) {
    found.clear();
    for (size_t j = 0; j < source.size(); ++j) {
      const double d = squared_distance(source[j], anchor);
      if (d <= r_sq) found.emplace_back(d, static_cast<int>(j));
    }
    std::sort(found.begin(), found.end());
    const int take = std::min<int>(max_neighbors, static_cast<int>(found.size()));
    for (int k = 0; k < take; ++k) out.members.push_back(found[k].second);
    out.offsets.push_back(static_cast<int>(out.members.size()));
  }
  return out;
}

void register_head_params(ParamStore& store, const std::string& prefix,
                          int in_channels, int hidden, int out_channels) {
  store.add(prefix + ".w1", Tensor::zeros({in_channels, hidden}));
  store.add(prefix + ".b1", Tensor::zeros({hidden}));
  store.add(prefix + ".w2", Tensor::zeros({hidden, out_channels}));
  store.add(prefix + ".b2", Tensor::zeros({out_channels}));
}

void register_backbone_params(ParamStore& store, const BackboneSpec& spec,
                              int group_order) {
  const int k = spec.effective_kernel(group_order);
  auto register_stage = [&](const std::string& prefix, int in_channels,
                            const StageSpec& stage) {
    register_head_params(store, prefix, 3 + in_channels, stage.hidden,
                         stage.channels);
    if (spec.depthwise_group_conv) {
      store.add(prefix + ".conv.w", Tensor::zeros({stage.channels, k}));
    } else {
      store.add(prefix + ".conv.w",
                Tensor::zeros({stage.channels, stage.channels, k}));
    }
    store.add(prefix + ".conv.b", Tensor::zeros({stage.channels}));
  };
  register_stage("backbone.sa1", spec.lift_channels, spec.stage1);
  register_stage("backbone.sa2", spec.stage1.channels, spec.stage2);
}

Value lift_inputs(Tape& tape, const PointCloud& points, int group_order) {
  if (points.empty()) throw std::invalid_argument("lift_inputs: empty cloud");
  const int64_t p = static_cast<int64_t>(points.size());
  Tensor init = Tensor::zeros({p, 2, group_order});
  for (int64_t i = 0; i < p; ++i)
    for (int g = 0; g < group_order; ++g) {
      init.at3(i, 0, g) = 1.0;
      init.at3(i, 1, g) = points[i].z;
    }
  return tape.input(std::move(init));
}

SaStageOutput sa_stage(Tape& tape, ParamBinding& params,
                       const std::string& prefix, const StageSpec& spec,
                       const PointCloud& positions, Value in_orbit,
                       int group_order, double fps_cap,
                       bool rotate_relative_coords) {
  SaStageOutput out;
  out.anchor_indices =
      farthest_point_sample(positions, spec.anchors, fps_cap);
  out.anchor_positions.reserve(out.anchor_indices.size());
  for (int idx : out.anchor_indices)
    out.anchor_positions.push_back(positions[idx]);

  const NeighborLists nbr =
      ball_query(positions, out.anchor_positions, spec.radius,
                 spec.max_neighbors);
  const int64_t total = static_cast<int64_t>(nbr.members.size());
  const int64_t num_anchors = static_cast<int64_t>(out.anchor_positions.size());

  // Base relative coordinates, shared across slots.
  std::vector<Vec3> rel(total);
  for (int64_t a = 0; a < num_anchors; ++a)
    for (int m = nbr.offsets[a]; m < nbr.offsets[a + 1]; ++m)
      rel[m] = positions[nbr.members[m]] - out.anchor_positions[a];

  const CyclicGroup group = make_group(group_order);
  const Value w1 = params(prefix + ".w1");
  const Value b1 = params(prefix + ".b1");
  const Value w2 = params(prefix + ".w2");
  const Value b2 = params(prefix + ".b2");

  std::vector<Value> slot_outputs;
  slot_outputs.reserve(group_order);
  for (int g = 0; g < group_order; ++g) {
    Tensor rel_rows = Tensor::zeros({total, 3});
    const Mat3 rot_inv = rotate_relative_coords
                             ? rotation_matrix(inverse(element(group, g)))
                             : Mat3::identity();
    for (int64_t m = 0; m < total; ++m) {
      const Vec3 r = rot_inv * rel[m];
      rel_rows.at2(m, 0) = r.x;
      rel_rows.at2(m, 1) = r.y;
      rel_rows.at2(m, 2) = r.z;
    }
    const Value feats = tape.gather_rows(tape.slot(in_orbit, g), nbr.members);
    const Value rows = tape.concat_cols(tape.input(std::move(rel_rows)), feats);
    const Value h = tape.relu(tape.linear(rows, w1, b1));
    const Value mapped = tape.relu(tape.linear(h, w2, b2));
    slot_outputs.push_back(tape.segment_max(mapped, nbr.offsets));
  }
  out.orbit = tape.stack_slots(slot_outputs);
  return out;
}

Value group_conv_stage(Tape& tape, ParamBinding& params,
                       const std::string& prefix, Value orbit,
                       bool depthwise) {
  return tape.relu(tape.group_conv(orbit, params(prefix + ".conv.w"),
                                   params(prefix + ".conv.b"), depthwise));
}

Value mlp2(Tape& tape, ParamBinding& params, const std::string& prefix,
           Value rows) {
  const Value h = tape.relu(
      tape.linear(rows, params(prefix + ".w1"), params(prefix + ".b1")));
  return tape.linear(h, params(prefix + ".w2"), params(prefix + ".b2"));
}

Value mlp2_relu(Tape& tape, ParamBinding& params, const std::string& prefix,
                Value rows) {
  return tape.relu(mlp2(tape, params, prefix, rows));
}

Value orientation_head(Tape& tape, ParamBinding& params,
                       const std::string& prefix, Value orbit) {
  const int64_t n = tape.val(orbit).dim(2);
  Value scores;  // [P, N] assembled slot by slot
  for (int g = 0; g < n; ++g) {
    const Value s = mlp2(tape, params, prefix, tape.slot(orbit, g));  // [P,1]
    scores = g == 0 ? s : tape.concat_cols(scores, s);
  }
  return scores;
}

Value segmentation_head(Tape& tape, ParamBinding& params,
                        const std::string& prefix, Value orbit) {
  return mlp2(tape, params, prefix, tape.slot_max(orbit));  // [P,1]
}

}  // namespace eon
