#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace eon {

// Dense row-major double tensor. Small by design: the networks in this
// project are a few hundred thousand elements at most.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> v;

  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape_) {
    Tensor t;
    t.shape = std::move(shape_);
    t.v.assign(t.count(t.shape), 0.0);
    return t;
  }

  static Tensor from(std::vector<int64_t> shape_, std::vector<double> data) {
    Tensor t;
    t.shape = std::move(shape_);
    t.v = std::move(data);
    if (static_cast<int64_t>(t.v.size()) != t.count(t.shape))
      throw std::invalid_argument("tensor data does not match shape");
    return t;
  }

  static Tensor scalar(double x) { return from({}, {x}); }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape[i]; }

  double& at(int64_t i) { return v[i]; }
  double at(int64_t i) const { return v[i]; }
  double& at2(int64_t i, int64_t j) { return v[i * shape[1] + j]; }
  double at2(int64_t i, int64_t j) const { return v[i * shape[1] + j]; }
  double& at3(int64_t i, int64_t j, int64_t k) {
    return v[(i * shape[1] + j) * shape[2] + k];
  }
  double at3(int64_t i, int64_t j, int64_t k) const {
    return v[(i * shape[1] + j) * shape[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }

  static int64_t count(const std::vector<int64_t>& shape_) {
    int64_t n = 1;
    for (int64_t d : shape_) {
      if (d < 0) throw std::invalid_argument("negative tensor dimension");
      n *= d;
    }
    return n;
  }
};

}  // namespace eon
