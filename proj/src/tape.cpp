#include "eon/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "eon/rotgroup.hpp"

namespace eon {

namespace {

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Value Tape::push(Tensor val, bool needs_grad, std::function<void()> back) {
  Node node;
  node.val = std::move(val);
  node.back = std::move(back);
  node.needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::input(Tensor t) { return push(std::move(t), false, {}); }

Value Tape::leaf(Tensor t) { return push(std::move(t), true, {}); }

const Tensor& Tape::grad(Value v) const {
  if (!ran_backward_) throw std::logic_error("grad read before backward()");
  return nodes_[v.id].grad;
}

Value Tape::add(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check(ta.same_shape(tb), "add: shape mismatch");
  Tensor out = ta;
  for (int64_t i = 0; i < out.numel(); ++i) out.v[i] += tb.v[i];
  const bool ng = needs(a) || needs(b);
  Value o = push(std::move(out), ng, {});
  nodes_[o.id].back = [this, a, b, o] {
    const Tensor& g = grad_buf(o);
    if (needs(a)) {
      Tensor& ga = grad_buf(a);
      for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
    }
    if (needs(b)) {
      Tensor& gb = grad_buf(b);
      for (int64_t i = 0; i < g.numel(); ++i) gb.v[i] += g.v[i];
    }
  };
  return o;
}

Value Tape::sub(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check(ta.same_shape(tb), "sub: shape mismatch");
  Tensor out = ta;
  for (int64_t i = 0; i < out.numel(); ++i) out.v[i] -= tb.v[i];
  Value o = push(std::move(out), needs(a) || needs(b), {});
  nodes_[o.id].back = [this, a, b, o] {
    const Tensor& g = grad_buf(o);
    if (needs(a)) {
      Tensor& ga = grad_buf(a);
      for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
    }
    if (needs(b)) {
      Tensor& gb = grad_buf(b);
      for (int64_t i = 0; i < g.numel(); ++i) gb.v[i] -= g.v[i];
    }
  };
  return o;
}

Value Tape::scale(Value a, double s) {
  Tensor out = val(a);
  for (double& x : out.v) x *= s;
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, s] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += s * g.v[i];
  };
  return o;
}

Value Tape::relu(Value a) {
  Tensor out = val(a);
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    const Tensor& in = val(a);
    Tensor& ga = grad_buf(a);
    for (int64_t i = 0; i < g.numel(); ++i)
      if (in.v[i] > 0.0) ga.v[i] += g.v[i];
  };
  return o;
}

Value Tape::exp(Value a) {
  Tensor out = val(a);
  for (double& x : out.v) x = std::exp(x);
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    const Tensor& y = val(o);
    Tensor& ga = grad_buf(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += y.v[i] * g.v[i];
  };
  return o;
}

Value Tape::mul_const(Value a, Tensor c) {
  const Tensor& ta = val(a);
  check(ta.same_shape(c), "mul_const: shape mismatch");
  Tensor out = ta;
  for (int64_t i = 0; i < out.numel(); ++i) out.v[i] *= c.v[i];
  auto cp = std::make_shared<Tensor>(std::move(c));
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, cp] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += cp->v[i] * g.v[i];
  };
  return o;
}

Value Tape::concat_cols(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check(ta.rank() == 2 && tb.rank() == 2, "concat_cols: rank-2 required");
  check(ta.dim(0) == tb.dim(0), "concat_cols: row mismatch");
  const int64_t rows = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
  Tensor out = Tensor::zeros({rows, ca + cb});
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < ca; ++j) out.at2(r, j) = ta.at2(r, j);
    for (int64_t j = 0; j < cb; ++j) out.at2(r, ca + j) = tb.at2(r, j);
  }
  Value o = push(std::move(out), needs(a) || needs(b), {});
  nodes_[o.id].back = [this, a, b, o, rows, ca, cb] {
    const Tensor& g = grad_buf(o);
    if (needs(a)) {
      Tensor& ga = grad_buf(a);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < ca; ++j) ga.at2(r, j) += g.at2(r, j);
    }
    if (needs(b)) {
      Tensor& gb = grad_buf(b);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < cb; ++j) gb.at2(r, j) += g.at2(r, ca + j);
    }
  };
  return o;
}

Value Tape::gather_rows(Value a, std::vector<int> rows) {
  const Tensor& ta = val(a);
  check(ta.rank() == 2, "gather_rows: rank-2 required");
  const int64_t cols = ta.dim(1);
  Tensor out = Tensor::zeros({static_cast<int64_t>(rows.size()), cols});
  for (size_t r = 0; r < rows.size(); ++r) {
    check(rows[r] >= 0 && rows[r] < ta.dim(0), "gather_rows: index range");
    for (int64_t j = 0; j < cols; ++j)
      out.at2(static_cast<int64_t>(r), j) = ta.at2(rows[r], j);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(rows));
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, idx, cols] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (size_t r = 0; r < idx->size(); ++r)
      for (int64_t j = 0; j < cols; ++j)
        ga.at2((*idx)[r], j) += g.at2(static_cast<int64_t>(r), j);
  };
  return o;
}

Value Tape::slice_cols(Value a, int64_t lo, int64_t hi) {
  const Tensor& ta = val(a);
  check(ta.rank() == 2, "slice_cols: rank-2 required");
  check(lo >= 0 && lo < hi && hi <= ta.dim(1), "slice_cols: range");
  const int64_t rows = ta.dim(0), cols = hi - lo;
  Tensor out = Tensor::zeros({rows, cols});
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < cols; ++j) out.at2(r, j) = ta.at2(r, lo + j);
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, lo, rows, cols] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < cols; ++j) ga.at2(r, lo + j) += g.at2(r, j);
  };
  return o;
}

Value Tape::reshape(Value a, std::vector<int64_t> shape) {
  const Tensor& ta = val(a);
  check(Tensor::count(shape) == ta.numel(), "reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.v = ta.v;
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
  };
  return o;
}

Value Tape::where_rows(std::vector<uint8_t> mask, Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check(ta.same_shape(tb) && ta.rank() == 2, "where_rows: [M,C] pair");
  check(static_cast<int64_t>(mask.size()) == ta.dim(0), "where_rows: mask size");
  const int64_t rows = ta.dim(0), cols = ta.dim(1);
  Tensor out = Tensor::zeros(ta.shape);
  for (int64_t r = 0; r < rows; ++r) {
    const Tensor& src = mask[r] ? ta : tb;
    for (int64_t j = 0; j < cols; ++j) out.at2(r, j) = src.at2(r, j);
  }
  auto mk = std::make_shared<std::vector<uint8_t>>(std::move(mask));
  Value o = push(std::move(out), needs(a) || needs(b), {});
  nodes_[o.id].back = [this, a, b, o, mk, rows, cols] {
    const Tensor& g = grad_buf(o);
    for (int64_t r = 0; r < rows; ++r) {
      const Value target = (*mk)[r] ? a : b;
      if (!needs(target)) continue;
      Tensor& gt = grad_buf(target);
      for (int64_t j = 0; j < cols; ++j) gt.at2(r, j) += g.at2(r, j);
    }
  };
  return o;
}

Value Tape::rotate_rows(Value a, std::vector<Mat3> rot) {
  const Tensor& ta = val(a);
  check(ta.rank() == 2 && ta.dim(1) == 3, "rotate_rows: [M,3] required");
  check(static_cast<int64_t>(rot.size()) == ta.dim(0),
        "rotate_rows: one matrix per row");
  Tensor out = Tensor::zeros(ta.shape);
  for (int64_t r = 0; r < ta.dim(0); ++r) {
    const Vec3 p{ta.at2(r, 0), ta.at2(r, 1), ta.at2(r, 2)};
    const Vec3 q = rot[r] * p;
    out.at2(r, 0) = q.x;
    out.at2(r, 1) = q.y;
    out.at2(r, 2) = q.z;
  }
  auto mats = std::make_shared<std::vector<Mat3>>(std::move(rot));
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, mats] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t r = 0; r < g.dim(0); ++r) {
      const Vec3 gr{g.at2(r, 0), g.at2(r, 1), g.at2(r, 2)};
      const Vec3 back = (*mats)[r].transposed() * gr;
      ga.at2(r, 0) += back.x;
      ga.at2(r, 1) += back.y;
      ga.at2(r, 2) += back.z;
    }
  };
  return o;
}

Value Tape::linear(Value x, Value w, Value b) {
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  check(tx.rank() == 2 && tw.rank() == 2 && tb.rank() == 1,
        "linear: x [M,K], w [K,N], b [N]");
  check(tx.dim(1) == tw.dim(0), "linear: inner dimension mismatch");
  check(tb.dim(0) == tw.dim(1), "linear: bias width mismatch");
  const int64_t m = tx.dim(0), k = tx.dim(1), n = tw.dim(1);
  Tensor out = Tensor::zeros({m, n});
  for (int64_t i = 0; i < m; ++i) {
    double* orow = &out.v[i * n];
    for (int64_t j = 0; j < n; ++j) orow[j] = tb.v[j];
    const double* xrow = &tx.v[i * k];
    for (int64_t kk = 0; kk < k; ++kk) {
      const double xv = xrow[kk];
      const double* wrow = &tw.v[kk * n];
      for (int64_t j = 0; j < n; ++j) orow[j] += xv * wrow[j];
    }
  }
  Value o = push(std::move(out), needs(x) || needs(w) || needs(b), {});
  nodes_[o.id].back = [this, x, w, b, o, m, k, n] {
    const Tensor& g = grad_buf(o);
    const Tensor& tx2 = val(x);
    const Tensor& tw2 = val(w);
    if (needs(x)) {
      Tensor& gx = grad_buf(x);
      for (int64_t i = 0; i < m; ++i) {
        const double* grow = &g.v[i * n];
        double* gxrow = &gx.v[i * k];
        for (int64_t kk = 0; kk < k; ++kk) {
          const double* wrow = &tw2.v[kk * n];
          double acc = 0.0;
          for (int64_t j = 0; j < n; ++j) acc += grow[j] * wrow[j];
          gxrow[kk] += acc;
        }
      }
    }
    if (needs(w)) {
      Tensor& gw = grad_buf(w);
      for (int64_t i = 0; i < m; ++i) {
        const double* xrow = &tx2.v[i * k];
        const double* grow = &g.v[i * n];
        for (int64_t kk = 0; kk < k; ++kk) {
          const double xv = xrow[kk];
          double* gwrow = &gw.v[kk * n];
          for (int64_t j = 0; j < n; ++j) gwrow[j] += xv * grow[j];
        }
      }
    }
    if (needs(b)) {
      Tensor& gb = grad_buf(b);
      for (int64_t i = 0; i < m; ++i) {
        const double* grow = &g.v[i * n];
        for (int64_t j = 0; j < n; ++j) gb.v[j] += grow[j];
      }
    }
  };
  return o;
}

Value Tape::segment_max(Value a, std::vector<int> offsets) {
  const Tensor& ta = val(a);
  check(ta.rank() == 2, "segment_max: rank-2 required");
  check(!offsets.empty() && offsets.front() == 0 &&
            offsets.back() == ta.dim(0),
        "segment_max: offsets must span all rows");
  const int64_t segments = static_cast<int64_t>(offsets.size()) - 1;
  const int64_t cols = ta.dim(1);
  Tensor out = Tensor::zeros({segments, cols});
  // argmax row per (segment, column); -1 marks an empty segment.
  auto argmax = std::make_shared<std::vector<int>>(segments * cols, -1);
  for (int64_t s = 0; s < segments; ++s) {
    const int lo = offsets[s], hi = offsets[s + 1];
    check(lo <= hi, "segment_max: offsets must be non-decreasing");
    if (lo == hi) continue;  // empty neighborhood -> zeros
    for (int64_t j = 0; j < cols; ++j) {
      double best = ta.at2(lo, j);
      int best_row = lo;
      for (int r = lo + 1; r < hi; ++r) {
        const double x = ta.at2(r, j);
        if (x > best) {
          best = x;
          best_row = r;
        }
      }
      out.at2(s, j) = best;
      (*argmax)[s * cols + j] = best_row;
    }
  }
  Value o = push(std::move(out), needs(a), {});
  nodes_[o.id].back = [this, a, o, argmax, segments, cols] {
    if (!needs(a)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a);
    for (int64_t s = 0; s < segments; ++s)
      for (int64_t j = 0; j < cols; ++j) {
        const int r = (*argmax)[s * cols + j];
        if (r >= 0) ga.at2(r, j) += g.at2(s, j);
      }
  };
  return o;
}

Value Tape::slot(Value a3, int g) {
  const Tensor& ta = val(a3);
  check(ta.rank() == 3, "slot: rank-3 required");
  check(g >= 0 && g < ta.dim(2), "slot: index range");
  const int64_t p = ta.dim(0), c = ta.dim(1), n = ta.dim(2);
  Tensor out = Tensor::zeros({p, c});
  for (int64_t i = 0; i < p; ++i)
    for (int64_t j = 0; j < c; ++j) out.at2(i, j) = ta.at3(i, j, g);
  Value o = push(std::move(out), needs(a3), {});
  nodes_[o.id].back = [this, a3, o, g, p, c, n] {
    (void)n;
    if (!needs(a3)) return;
    const Tensor& gr = grad_buf(o);
    Tensor& ga = grad_buf(a3);
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < c; ++j) ga.at3(i, j, g) += gr.at2(i, j);
  };
  return o;
}

Value Tape::stack_slots(const std::vector<Value>& slots) {
  check(!slots.empty(), "stack_slots: at least one slot");
  const Tensor& first = val(slots[0]);
  check(first.rank() == 2, "stack_slots: rank-2 slots");
  const int64_t p = first.dim(0), c = first.dim(1);
  const int64_t n = static_cast<int64_t>(slots.size());
  Tensor out = Tensor::zeros({p, c, n});
  bool ng = false;
  for (int64_t g = 0; g < n; ++g) {
    const Tensor& ts = val(slots[g]);
    check(ts.dim(0) == p && ts.dim(1) == c, "stack_slots: shape mismatch");
    ng = ng || needs(slots[g]);
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < c; ++j) out.at3(i, j, g) = ts.at2(i, j);
  }
  auto slots_copy = std::make_shared<std::vector<Value>>(slots);
  Value o = push(std::move(out), ng, {});
  nodes_[o.id].back = [this, o, slots_copy, p, c] {
    const Tensor& g = grad_buf(o);
    for (size_t s = 0; s < slots_copy->size(); ++s) {
      const Value sv = (*slots_copy)[s];
      if (!needs(sv)) continue;
      Tensor& gs = grad_buf(sv);
      for (int64_t i = 0; i < p; ++i)
        for (int64_t j = 0; j < c; ++j)
          gs.at2(i, j) += g.at3(i, j, static_cast<int64_t>(s));
    }
  };
  return o;
}

Value Tape::slot_max(Value a3) {
  const Tensor& ta = val(a3);
  check(ta.rank() == 3, "slot_max: rank-3 required");
  const int64_t p = ta.dim(0), c = ta.dim(1), n = ta.dim(2);
  Tensor out = Tensor::zeros({p, c});
  auto argmax = std::make_shared<std::vector<int>>(p * c, 0);
  for (int64_t i = 0; i < p; ++i)
    for (int64_t j = 0; j < c; ++j) {
      double best = ta.at3(i, j, 0);
      int best_g = 0;
      for (int64_t g = 1; g < n; ++g) {
        const double x = ta.at3(i, j, g);
        if (x > best) {
          best = x;
          best_g = static_cast<int>(g);
        }
      }
      out.at2(i, j) = best;
      (*argmax)[i * c + j] = best_g;
    }
  Value o = push(std::move(out), needs(a3), {});
  nodes_[o.id].back = [this, a3, o, argmax, p, c] {
    if (!needs(a3)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a3);
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < c; ++j)
        ga.at3(i, j, (*argmax)[i * c + j]) += g.at2(i, j);
  };
  return o;
}

Value Tape::take_slot_per_row(Value a3, std::vector<int> slot_index) {
  const Tensor& ta = val(a3);
  check(ta.rank() == 3, "take_slot_per_row: rank-3 required");
  check(static_cast<int64_t>(slot_index.size()) == ta.dim(0),
        "take_slot_per_row: one slot per row");
  const int64_t p = ta.dim(0), c = ta.dim(1);
  Tensor out = Tensor::zeros({p, c});
  for (int64_t i = 0; i < p; ++i) {
    check(slot_index[i] >= 0 && slot_index[i] < ta.dim(2),
          "take_slot_per_row: slot range");
    for (int64_t j = 0; j < c; ++j) out.at2(i, j) = ta.at3(i, j, slot_index[i]);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(slot_index));
  Value o = push(std::move(out), needs(a3), {});
  nodes_[o.id].back = [this, a3, o, idx, p, c] {
    if (!needs(a3)) return;
    const Tensor& g = grad_buf(o);
    Tensor& ga = grad_buf(a3);
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < c; ++j) ga.at3(i, j, (*idx)[i]) += g.at2(i, j);
  };
  return o;
}

Value Tape::group_conv(Value a3, Value w, Value b, bool depthwise) {
  const Tensor& ta = val(a3);
  const Tensor& tw = val(w);
  const Tensor& tb = val(b);
  check(ta.rank() == 3, "group_conv: rank-3 input");
  const int64_t p = ta.dim(0), cin = ta.dim(1), n = ta.dim(2);
  int64_t cout, k;
  if (depthwise) {
    check(tw.rank() == 2 && tw.dim(0) == cin, "group_conv: depthwise w [C,K]");
    cout = cin;
    k = tw.dim(1);
  } else {
    check(tw.rank() == 3 && tw.dim(1) == cin, "group_conv: w [Cout,Cin,K]");
    cout = tw.dim(0);
    k = tw.dim(2);
  }
  check(k % 2 == 1, "group_conv: kernel width must be odd");
  if (k > n) throw std::invalid_argument("group_conv: kernel wider than group order");
  check(tb.rank() == 1 && tb.dim(0) == cout, "group_conv: bias width");
  const int64_t half = k / 2;

  Tensor out = Tensor::zeros({p, cout, n});
  for (int64_t i = 0; i < p; ++i)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t g = 0; g < n; ++g) {
        double acc = tb.v[co];
        for (int64_t t = 0; t < k; ++t) {
          const int64_t gg = ((g + t - half) % n + n) % n;
          if (depthwise) {
            acc += tw.at2(co, t) * ta.at3(i, co, gg);
          } else {
            for (int64_t ci = 0; ci < cin; ++ci)
              acc += tw.at3(co, ci, t) * ta.at3(i, ci, gg);
          }
        }
        out.at3(i, co, g) = acc;
      }
  Value o = push(std::move(out), needs(a3) || needs(w) || needs(b), {});
  nodes_[o.id].back = [this, a3, w, b, o, depthwise, p, cin, n, cout, k, half] {
    const Tensor& g = grad_buf(o);
    const Tensor& ta2 = val(a3);
    const Tensor& tw2 = val(w);
    const bool na = needs(a3), nw = needs(w), nb = needs(b);
    Tensor* ga = na ? &grad_buf(a3) : nullptr;
    Tensor* gw = nw ? &grad_buf(w) : nullptr;
    Tensor* gb = nb ? &grad_buf(b) : nullptr;
    for (int64_t i = 0; i < p; ++i)
      for (int64_t co = 0; co < cout; ++co)
        for (int64_t gg = 0; gg < n; ++gg) {
          const double go = g.at3(i, co, gg);
          if (go == 0.0) continue;
          if (nb) gb->v[co] += go;
          for (int64_t t = 0; t < k; ++t) {
            const int64_t gi = ((gg + t - half) % n + n) % n;
            if (depthwise) {
              if (nw) gw->at2(co, t) += go * ta2.at3(i, co, gi);
              if (na) ga->at3(i, co, gi) += go * tw2.at2(co, t);
            } else {
              for (int64_t ci = 0; ci < cin; ++ci) {
                if (nw) gw->at3(co, ci, t) += go * ta2.at3(i, ci, gi);
                if (na) ga->at3(i, ci, gi) += go * tw2.at3(co, ci, t);
              }
            }
          }
        }
  };
  return o;
}

Value Tape::atan2(Value y, Value x) {
  const Tensor& ty = val(y);
  const Tensor& tx = val(x);
  check(ty.same_shape(tx) && ty.rank() == 1, "atan2: [M] vectors required");
  Tensor out = ty;
  for (int64_t i = 0; i < out.numel(); ++i)
    out.v[i] = std::atan2(ty.v[i], tx.v[i]);
  Value o = push(std::move(out), needs(y) || needs(x), {});
  nodes_[o.id].back = [this, y, x, o] {
    const Tensor& g = grad_buf(o);
    const Tensor& ty2 = val(y);
    const Tensor& tx2 = val(x);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const double denom = ty2.v[i] * ty2.v[i] + tx2.v[i] * tx2.v[i];
      if (denom == 0.0) continue;  // degenerate (0,0): leave gradients at 0
      if (needs(y)) grad_buf(y).v[i] += g.v[i] * tx2.v[i] / denom;
      if (needs(x)) grad_buf(x).v[i] -= g.v[i] * ty2.v[i] / denom;
    }
  };
  return o;
}

Value Tape::softmax_cross_entropy(Value logits, std::vector<int> labels,
                                  std::vector<uint8_t> mask) {
  const Tensor& tl = val(logits);
  check(tl.rank() == 2, "softmax_ce: [M,K] logits");
  const int64_t m = tl.dim(0), kclasses = tl.dim(1);
  check(static_cast<int64_t>(labels.size()) == m, "softmax_ce: label count");
  check(static_cast<int64_t>(mask.size()) == m, "softmax_ce: mask count");
  int64_t count = 0;
  double loss = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    check(labels[i] >= 0 && labels[i] < kclasses, "softmax_ce: label range");
    double mx = tl.at2(i, 0);
    for (int64_t j = 1; j < kclasses; ++j) mx = std::max(mx, tl.at2(i, j));
    double lse = 0.0;
    for (int64_t j = 0; j < kclasses; ++j) lse += std::exp(tl.at2(i, j) - mx);
    loss += mx + std::log(lse) - tl.at2(i, labels[i]);
    ++count;
  }
  Tensor out = Tensor::scalar(count ? loss / static_cast<double>(count) : 0.0);
  auto lb = std::make_shared<std::vector<int>>(std::move(labels));
  auto mk = std::make_shared<std::vector<uint8_t>>(std::move(mask));
  Value o = push(std::move(out), needs(logits), {});
  nodes_[o.id].back = [this, logits, o, lb, mk, m, kclasses, count] {
    if (!needs(logits) || count == 0) return;
    const double gscale = grad_buf(o).v[0] / static_cast<double>(count);
    const Tensor& tl2 = val(logits);
    Tensor& gl = grad_buf(logits);
    for (int64_t i = 0; i < m; ++i) {
      if (!(*mk)[i]) continue;
      double mx = tl2.at2(i, 0);
      for (int64_t j = 1; j < kclasses; ++j) mx = std::max(mx, tl2.at2(i, j));
      double lse = 0.0;
      for (int64_t j = 0; j < kclasses; ++j)
        lse += std::exp(tl2.at2(i, j) - mx);
      for (int64_t j = 0; j < kclasses; ++j) {
        const double soft = std::exp(tl2.at2(i, j) - mx) / lse;
        gl.at2(i, j) += gscale * (soft - (j == (*lb)[i] ? 1.0 : 0.0));
      }
    }
  };
  return o;
}

Value Tape::bce_with_logits(Value logits, std::vector<double> targets,
                            std::vector<uint8_t> mask) {
  const Tensor& tl = val(logits);
  check(tl.rank() == 1, "bce: [M] logits");
  const int64_t m = tl.dim(0);
  check(static_cast<int64_t>(targets.size()) == m, "bce: target count");
  check(static_cast<int64_t>(mask.size()) == m, "bce: mask count");
  int64_t count = 0;
  double loss = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    const double x = tl.v[i];
    loss += std::max(x, 0.0) - targets[i] * x + std::log1p(std::exp(-std::abs(x)));
    ++count;
  }
  Tensor out = Tensor::scalar(count ? loss / static_cast<double>(count) : 0.0);
  auto tg = std::make_shared<std::vector<double>>(std::move(targets));
  auto mk = std::make_shared<std::vector<uint8_t>>(std::move(mask));
  Value o = push(std::move(out), needs(logits), {});
  nodes_[o.id].back = [this, logits, o, tg, mk, m, count] {
    if (!needs(logits) || count == 0) return;
    const double gscale = grad_buf(o).v[0] / static_cast<double>(count);
    const Tensor& tl2 = val(logits);
    Tensor& gl = grad_buf(logits);
    for (int64_t i = 0; i < m; ++i) {
      if (!(*mk)[i]) continue;
      const double sig = 1.0 / (1.0 + std::exp(-tl2.v[i]));
      gl.v[i] += gscale * (sig - (*tg)[i]);
    }
  };
  return o;
}

Value Tape::l1_rows(Value pred, Tensor target, std::vector<uint8_t> mask) {
  const Tensor& tp = val(pred);
  check(tp.rank() == 2, "l1_rows: [M,C] prediction");
  check(tp.same_shape(target), "l1_rows: target shape mismatch");
  const int64_t m = tp.dim(0), c = tp.dim(1);
  check(static_cast<int64_t>(mask.size()) == m, "l1_rows: mask count");
  int64_t count = 0;
  double loss = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    for (int64_t j = 0; j < c; ++j)
      loss += std::abs(tp.at2(i, j) - target.at2(i, j));
    ++count;
  }
  Tensor out = Tensor::scalar(count ? loss / static_cast<double>(count) : 0.0);
  auto tg = std::make_shared<Tensor>(std::move(target));
  auto mk = std::make_shared<std::vector<uint8_t>>(std::move(mask));
  Value o = push(std::move(out), needs(pred), {});
  nodes_[o.id].back = [this, pred, o, tg, mk, m, c, count] {
    if (!needs(pred) || count == 0) return;
    const double gscale = grad_buf(o).v[0] / static_cast<double>(count);
    const Tensor& tp2 = val(pred);
    Tensor& gp = grad_buf(pred);
    for (int64_t i = 0; i < m; ++i) {
      if (!(*mk)[i]) continue;
      for (int64_t j = 0; j < c; ++j) {
        const double d = tp2.at2(i, j) - tg->at2(i, j);
        if (d > 0.0)
          gp.at2(i, j) += gscale;
        else if (d < 0.0)
          gp.at2(i, j) -= gscale;
      }
    }
  };
  return o;
}

Value Tape::wrapped_angle_l1(Value yaw, std::vector<double> target,
                             std::vector<uint8_t> mask) {
  const Tensor& ty = val(yaw);
  check(ty.rank() == 1, "wrapped_angle_l1: [M] yaw");
  const int64_t m = ty.dim(0);
  check(static_cast<int64_t>(target.size()) == m, "wrapped_angle_l1: targets");
  check(static_cast<int64_t>(mask.size()) == m, "wrapped_angle_l1: mask");
  int64_t count = 0;
  double loss = 0.0;
  for (int64_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    loss += std::abs(wrap_angle(ty.v[i] - target[i]));
    ++count;
  }
  Tensor out = Tensor::scalar(count ? loss / static_cast<double>(count) : 0.0);
  auto tg = std::make_shared<std::vector<double>>(std::move(target));
  auto mk = std::make_shared<std::vector<uint8_t>>(std::move(mask));
  Value o = push(std::move(out), needs(yaw), {});
  nodes_[o.id].back = [this, yaw, o, tg, mk, m, count] {
    if (!needs(yaw) || count == 0) return;
    const double gscale = grad_buf(o).v[0] / static_cast<double>(count);
    const Tensor& ty2 = val(yaw);
    Tensor& gy = grad_buf(yaw);
    for (int64_t i = 0; i < m; ++i) {
      if (!(*mk)[i]) continue;
      const double d = wrap_angle(ty2.v[i] - (*tg)[i]);
      if (d > 0.0)
        gy.v[i] += gscale;
      else if (d < 0.0)
        gy.v[i] -= gscale;
    }
  };
  return o;
}

Value Tape::sum_all(Value a) {
  const Tensor& ta = val(a);
  double acc = 0.0;
  for (double x : ta.v) acc += x;
  Value o = push(Tensor::scalar(acc), needs(a), {});
  nodes_[o.id].back = [this, a, o] {
    if (!needs(a)) return;
    const double g = grad_buf(o).v[0];
    Tensor& ga = grad_buf(a);
    for (double& x : ga.v) x += g;
  };
  return o;
}

Value Tape::weighted_sum(const std::vector<std::pair<double, Value>>& terms) {
  double acc = 0.0;
  bool ng = false;
  for (const auto& [wt, term] : terms) {
    check(val(term).numel() == 1, "weighted_sum: scalar terms required");
    acc += wt * val(term).v[0];
    ng = ng || needs(term);
  }
  auto terms_copy =
      std::make_shared<std::vector<std::pair<double, Value>>>(terms);
  Value o = push(Tensor::scalar(acc), ng, {});
  nodes_[o.id].back = [this, o, terms_copy] {
    const double g = grad_buf(o).v[0];
    for (const auto& [wt, term] : *terms_copy)
      if (needs(term)) grad_buf(term).v[0] += wt * g;
  };
  return o;
}

void Tape::backward(Value loss) {
  if (ran_backward_) throw std::logic_error("tape backward() is single-use");
  check(loss.valid() && loss.id < static_cast<int>(nodes_.size()),
        "backward: invalid loss handle");
  check(nodes_[loss.id].val.numel() == 1, "backward: loss must be scalar");
  ran_backward_ = true;
  for (Node& node : nodes_)
    if (node.needs_grad) node.grad = Tensor::zeros(node.val.shape);
  if (!nodes_[loss.id].needs_grad)
    nodes_[loss.id].grad = Tensor::zeros(nodes_[loss.id].val.shape);
  nodes_[loss.id].grad.v[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (node.needs_grad && node.back) node.back();
  }
}

}  // namespace eon
