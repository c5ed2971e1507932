#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mmfp/core/error.hpp"

namespace mmfp {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

// Dense row-major tensor handle. Copies share the underlying buffer; the
// value semantics the library relies on come from ops always allocating
// fresh outputs (tensors are immutable once created by a forward op).
template <class T>
class Tensor {
  struct Payload {
    Shape shape;
    std::vector<T> v;
    std::vector<T> g;  // allocated lazily by ensure_grad()
    bool requires_grad = false;
    const void* tape = nullptr;  // graph that produced this tensor, if any
  };

 public:
  using Scalar = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<Payload>();
    for (int d : shape)
      if (d <= 0) throw DimensionError("tensor dims must be positive, got " + shape_str(shape));
    t.d_->shape = std::move(shape);
    t.d_->v.assign(static_cast<std::size_t>(shape_numel(t.d_->shape)), T(0));
    t.d_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& x : t.d_->v) x = value;
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<Payload>();
    t.d_->shape = std::move(shape);
    if (static_cast<std::int64_t>(values.size()) != shape_numel(t.d_->shape))
      throw DimensionError("value count does not match shape " + shape_str(t.d_->shape));
    t.d_->v = std::move(values);
    t.d_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(d_->v.size()); }

  T* data() { return d_->v.data(); }
  const T* data() const { return d_->v.data(); }
  std::vector<T>& values() { return d_->v; }
  const std::vector<T>& values() const { return d_->v; }

  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool rg) { d_->requires_grad = rg; }

  bool has_grad() const { return !d_->g.empty(); }
  void ensure_grad() {
    if (d_->g.empty()) d_->g.assign(d_->v.size(), T(0));
  }
  void zero_grad() {
    d_->g.assign(d_->v.size(), T(0));
  }
  T* grad() { return d_->g.data(); }
  const T* grad() const { return d_->g.data(); }
  std::vector<T>& grad_values() { return d_->g; }

  const void* tape() const { return d_->tape; }
  void set_tape(const void* tape) { d_->tape = tape; }

  // Flat element access.
  T& at(std::int64_t i) { return d_->v[static_cast<std::size_t>(i)]; }
  T at(std::int64_t i) const { return d_->v[static_cast<std::size_t>(i)]; }

  // Row-major offsets for the common ranks.
  std::int64_t offset(int i, int j) const {
    return static_cast<std::int64_t>(i) * dim(1) + j;
  }
  std::int64_t offset(int i, int j, int k) const {
    return (static_cast<std::int64_t>(i) * dim(1) + j) * dim(2) + k;
  }
  std::int64_t offset(int i, int j, int k, int l) const {
    return ((static_cast<std::int64_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l;
  }

  bool all_finite() const {
    for (const T& x : d_->v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  // Deep copy (fresh buffer, grads not copied).
  Tensor clone() const {
    Tensor t = zeros(d_->shape, d_->requires_grad);
    t.d_->v = d_->v;
    return t;
  }

  bool same_storage(const Tensor& o) const { return d_ == o.d_; }

 private:
  std::shared_ptr<Payload> d_;
};

}  // namespace mmfp
