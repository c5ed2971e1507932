#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <vector>

#include "mmfp/core/gemm.hpp"
#include "mmfp/core/graph.hpp"
#include "mmfp/core/tensor.hpp"

// Differentiable tensor operations. Every op allocates a fresh output,
// marks it on the tape, and (when gradients are live) records one backward
// node. Convolutions run through im2col + GEMM; the im2col buffer is kept
// alive in the closure so backward does not recompute it.

namespace mmfp {

// ---------------------------------------------------------------------------
// im2col / col2im

namespace detail {

// col, laid out (C*k*k) x (Hout*Wout), from x laid out C x H x W.
template <class T>
void im2col(const T* x, int c_in, int h, int w, int k, int stride, int pad, T* col) {
  const int h_out = (h + 2 * pad - k) / stride + 1;
  const int w_out = (w + 2 * pad - k) / stride + 1;
  const int plane = h * w;
  const int cols = h_out * w_out;
  T* dst = col;
  for (int c = 0; c < c_in; ++c) {
    const T* src = x + static_cast<std::int64_t>(c) * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + w_out, T(0));
            dst += w_out;
            continue;
          }
          const T* row = src + static_cast<std::int64_t>(iy) * w;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride - pad + kx;
            *dst++ = (ix >= 0 && ix < w) ? row[ix] : T(0);
          }
        }
      }
    }
  }
  (void)cols;
}

// Adjoint of im2col: scatter-add col back into x (x must be pre-zeroed or
// hold a running sum).
template <class T>
void col2im_add(const T* col, int c_in, int h, int w, int k, int stride, int pad, T* x) {
  const int h_out = (h + 2 * pad - k) / stride + 1;
  const int w_out = (w + 2 * pad - k) / stride + 1;
  const int plane = h * w;
  const T* src = col;
  for (int c = 0; c < c_in; ++c) {
    T* dst = x + static_cast<std::int64_t>(c) * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            src += w_out;
            continue;
          }
          T* row = dst + static_cast<std::int64_t>(iy) * w;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) row[ix] += src[ox];
          }
          src += w_out;
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolutions

// input C_in x H x W, kernel C_out x C_in x k x k, zero padding.
template <class T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& input, const Tensor<T>& kernel, int stride,
                 int padding) {
  if (input.ndim() != 3) throw DimensionError("conv2d: input must be CxHxW");
  if (kernel.ndim() != 4 || kernel.dim(2) != kernel.dim(3))
    throw DimensionError("conv2d: kernel must be C_out x C_in x k x k");
  if (kernel.dim(1) != input.dim(0))
    throw DimensionError("conv2d: kernel C_in " + std::to_string(kernel.dim(1)) +
                         " does not match input channels " + std::to_string(input.dim(0)));
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  if (padding < 0) throw ContractError("conv2d: padding must be >= 0");
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = kernel.dim(0), k = kernel.dim(2);
  if (k > h + 2 * padding || k > w + 2 * padding)
    throw DimensionError("conv2d: kernel larger than padded input");
  const int h_out = (h + 2 * padding - k) / stride + 1;
  const int w_out = (w + 2 * padding - k) / stride + 1;

  auto col = std::make_shared<std::vector<T>>(
      static_cast<std::size_t>(c_in) * k * k * h_out * w_out);
  detail::im2col(input.data(), c_in, h, w, k, stride, padding, col->data());

  Tensor<T> out = Tensor<T>::zeros({c_out, h_out, w_out});
  detail::gemm(kernel.data(), col->data(), out.data(), c_out, c_in * k * k, h_out * w_out);

  if (g.track(out, input.requires_grad() || kernel.requires_grad())) {
    Tensor<T> in = input, ker = kernel;
    g.record([out, in, ker, col, stride, padding, c_in, h, w, c_out, k, h_out, w_out]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad();
      if (ker.requires_grad()) {
        ker.ensure_grad();
        detail::gemm_bt(go, col->data(), ker.grad(), c_out, h_out * w_out, c_in * k * k, true);
      }
      if (in.requires_grad()) {
        in.ensure_grad();
        std::vector<T> dcol(col->size());
        detail::gemm_at(ker.data(), go, dcol.data(), c_in * k * k, c_out, h_out * w_out);
        detail::col2im_add(dcol.data(), c_in, h, w, k, stride, padding, in.grad());
      }
    });
  }
  return out;
}

// Adjoint of conv2d under the same kernel: input C_out x H x W -> C_in x H' x W'
// with H' = (H-1)*stride - 2*padding + k.
template <class T>
Tensor<T> conv_transpose2d(Graph<T>& g, const Tensor<T>& input, const Tensor<T>& kernel,
                           int stride, int padding) {
  if (input.ndim() != 3) throw DimensionError("conv_transpose2d: input must be CxHxW");
  if (kernel.ndim() != 4 || kernel.dim(2) != kernel.dim(3))
    throw DimensionError("conv_transpose2d: kernel must be C_out x C_in x k x k");
  if (kernel.dim(0) != input.dim(0))
    throw DimensionError("conv_transpose2d: kernel C_out does not match input channels");
  if (stride < 1) throw ContractError("conv_transpose2d: stride must be >= 1");
  const int a = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int b = kernel.dim(1), k = kernel.dim(2);
  const int h_out = (h - 1) * stride - 2 * padding + k;
  const int w_out = (w - 1) * stride - 2 * padding + k;
  if (h_out <= 0 || w_out <= 0)
    throw DimensionError("conv_transpose2d: non-positive output dims");

  Tensor<T> out = Tensor<T>::zeros({b, h_out, w_out});
  {
    std::vector<T> colv(static_cast<std::size_t>(b) * k * k * h * w);
    detail::gemm_at(kernel.data(), input.data(), colv.data(), b * k * k, a, h * w);
    detail::col2im_add(colv.data(), b, h_out, w_out, k, stride, padding, out.data());
  }

  if (g.track(out, input.requires_grad() || kernel.requires_grad())) {
    Tensor<T> in = input, ker = kernel;
    g.record([out, in, ker, stride, padding, a, b, h, w, k, h_out, w_out]() mutable {
      if (!out.has_grad()) return;
      std::vector<T> col(static_cast<std::size_t>(b) * k * k * h * w);
      detail::im2col(out.grad(), b, h_out, w_out, k, stride, padding, col.data());
      if (in.requires_grad()) {
        in.ensure_grad();
        detail::gemm(ker.data(), col.data(), in.grad(), a, b * k * k, h * w, true);
      }
      if (ker.requires_grad()) {
        ker.ensure_grad();
        detail::gemm_bt(in.data(), col.data(), ker.grad(), a, h * w, b * k * k, true);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

enum class Activation { kRelu, kSigmoid, kTanh };

template <class T>
Tensor<T> elementwise(Graph<T>& g, const Tensor<T>& x, Activation fn) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const std::int64_t n = x.numel();
  const T* px = x.data();
  T* po = out.data();
  switch (fn) {
    case Activation::kRelu:
      for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
      break;
    case Activation::kSigmoid:
      for (std::int64_t i = 0; i < n; ++i) {
        const T v = px[i];
        po[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                          : std::exp(v) / (T(1) + std::exp(v));
      }
      break;
    case Activation::kTanh:
      for (std::int64_t i = 0; i < n; ++i) po[i] = std::tanh(px[i]);
      break;
  }
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, fn, n]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      const T* go = out.grad();
      const T* y = out.data();
      const T* px2 = in.data();
      T* gi = in.grad();
      switch (fn) {
        case Activation::kRelu:
          for (std::int64_t i = 0; i < n; ++i) gi[i] += px2[i] > T(0) ? go[i] : T(0);
          break;
        case Activation::kSigmoid:
          for (std::int64_t i = 0; i < n; ++i) gi[i] += go[i] * y[i] * (T(1) - y[i]);
          break;
        case Activation::kTanh:
          for (std::int64_t i = 0; i < n; ++i) gi[i] += go[i] * (T(1) - y[i] * y[i]);
          break;
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> relu(Graph<T>& g, const Tensor<T>& x) { return elementwise(g, x, Activation::kRelu); }
template <class T>
Tensor<T> sigmoid(Graph<T>& g, const Tensor<T>& x) { return elementwise(g, x, Activation::kSigmoid); }
template <class T>
Tensor<T> tanh_act(Graph<T>& g, const Tensor<T>& x) { return elementwise(g, x, Activation::kTanh); }

template <class T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw DimensionError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (g.track(out, a.requires_grad() || b.requires_grad())) {
    Tensor<T> ta = a, tb = b;
    g.record([out, ta, tb, n]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad();
      if (ta.requires_grad()) {
        ta.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) ta.grad()[i] += go[i];
      }
      if (tb.requires_grad()) {
        tb.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) tb.grad()[i] += go[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw DimensionError("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (g.track(out, a.requires_grad() || b.requires_grad())) {
    Tensor<T> ta = a, tb = b;
    g.record([out, ta, tb, n]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad();
      if (ta.requires_grad()) {
        ta.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) ta.grad()[i] += go[i] * tb.data()[i];
      }
      if (tb.requires_grad()) {
        tb.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) tb.grad()[i] += go[i] * ta.data()[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T c) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * c;
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, c, n]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) in.grad()[i] += out.grad()[i] * c;
    });
  }
  return out;
}

// x: C x H x W, bias: C.
template <class T>
Tensor<T> add_channel_bias(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& bias) {
  if (x.ndim() != 3 || bias.ndim() != 1 || bias.dim(0) != x.dim(0))
    throw DimensionError("add_channel_bias: expected CxHxW plus C bias");
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const int c = x.dim(0);
  const std::int64_t plane = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  for (int ch = 0; ch < c; ++ch) {
    const T b = bias.at(ch);
    const T* src = x.data() + ch * plane;
    T* dst = out.data() + ch * plane;
    for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] + b;
  }
  if (g.track(out, x.requires_grad() || bias.requires_grad())) {
    Tensor<T> in = x, tb = bias;
    g.record([out, in, tb, c, plane]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad();
      if (in.requires_grad()) {
        in.ensure_grad();
        const std::int64_t n = static_cast<std::int64_t>(c) * plane;
        for (std::int64_t i = 0; i < n; ++i) in.grad()[i] += go[i];
      }
      if (tb.requires_grad()) {
        tb.ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          T s = T(0);
          const T* src = go + ch * plane;
          for (std::int64_t i = 0; i < plane; ++i) s += src[i];
          tb.grad()[ch] += s;
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> clamp01(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i)
    out.data()[i] = std::min(T(1), std::max(T(0), x.data()[i]));
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, n]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      // Pass-through on the closed interval so in-range values keep gradients.
      for (std::int64_t i = 0; i < n; ++i) {
        const T v = in.data()[i];
        if (v >= T(0) && v <= T(1)) in.grad()[i] += out.grad()[i];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape ops

template <class T>
Tensor<T> reshape(Graph<T>& g, const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("reshape: element count mismatch for " + shape_str(shape));
  Tensor<T> out = Tensor<T>::from(std::move(shape), x.values());
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      const std::int64_t n = in.numel();
      for (std::int64_t i = 0; i < n; ++i) in.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> flatten(Graph<T>& g, const Tensor<T>& x) {
  return reshape(g, x, {static_cast<int>(x.numel())});
}

// Contiguous slice along axis 0.
template <class T>
Tensor<T> slice_axis0(Graph<T>& g, const Tensor<T>& x, int from, int to) {
  if (x.ndim() < 1 || from < 0 || to <= from || to > x.dim(0))
    throw ContractError("slice_axis0: bad range");
  Shape s = x.shape();
  s[0] = to - from;
  const std::int64_t inner = x.numel() / x.dim(0);
  Tensor<T> out = Tensor<T>::zeros(s);
  std::memcpy(out.data(), x.data() + from * inner,
              sizeof(T) * static_cast<std::size_t>((to - from) * inner));
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, from, inner]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      const std::int64_t n = out.numel();
      T* gi = in.grad() + from * inner;
      for (std::int64_t i = 0; i < n; ++i) gi[i] += out.grad()[i];
    });
  }
  return out;
}

// Top-left spatial crop of a C x H x W tensor.
template <class T>
Tensor<T> crop2d(Graph<T>& g, const Tensor<T>& x, int new_h, int new_w) {
  if (x.ndim() != 3) throw DimensionError("crop2d: input must be CxHxW");
  if (new_h < 1 || new_w < 1 || new_h > x.dim(1) || new_w > x.dim(2))
    throw DimensionError("crop2d: crop exceeds input dims");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> out = Tensor<T>::zeros({c, new_h, new_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < new_h; ++y)
      std::memcpy(out.data() + out.offset(ch, y, 0), x.data() + x.offset(ch, y, 0),
                  sizeof(T) * static_cast<std::size_t>(new_w));
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, c, new_h, new_w]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < new_h; ++y) {
          const T* go = out.grad() + out.offset(ch, y, 0);
          T* gi = in.grad() + in.offset(ch, y, 0);
          for (int x2 = 0; x2 < new_w; ++x2) gi[x2] += go[x2];
        }
    });
  }
  return out;
}

// Broadcast a length-L vector to an L x H x W map.
template <class T>
Tensor<T> tile_to_map(Graph<T>& g, const Tensor<T>& vec, int h, int w) {
  if (vec.ndim() != 1) throw DimensionError("tile_to_map: input must be a vector");
  const int l = vec.dim(0);
  Tensor<T> out = Tensor<T>::zeros({l, h, w});
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int i = 0; i < l; ++i) {
    T* dst = out.data() + i * plane;
    const T v = vec.at(i);
    for (std::int64_t p = 0; p < plane; ++p) dst[p] = v;
  }
  if (g.track(out, vec.requires_grad())) {
    Tensor<T> in = vec;
    g.record([out, in, l, plane]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      for (int i = 0; i < l; ++i) {
        const T* go = out.grad() + i * plane;
        T s = T(0);
        for (std::int64_t p = 0; p < plane; ++p) s += go[p];
        in.grad()[i] += s;
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> concat(Graph<T>& g, const std::vector<Tensor<T>>& xs, int axis) {
  if (xs.empty()) throw ContractError("concat: empty input list");
  const int nd = xs[0].ndim();
  if (axis < 0 || axis >= nd) throw ContractError("concat: invalid axis");
  Shape s = xs[0].shape();
  int total = 0;
  bool any_grad = false;
  for (const auto& x : xs) {
    if (x.ndim() != nd) throw DimensionError("concat: rank mismatch");
    for (int d = 0; d < nd; ++d)
      if (d != axis && x.dim(d) != s[static_cast<std::size_t>(d)])
        throw DimensionError("concat: non-concat dims must agree");
    total += x.dim(axis);
    any_grad = any_grad || x.requires_grad();
  }
  s[static_cast<std::size_t>(axis)] = total;
  Tensor<T> out = Tensor<T>::zeros(s);

  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < nd; ++d) inner *= s[static_cast<std::size_t>(d)];

  std::int64_t off = 0;  // offset (in elements) within each outer row
  std::vector<std::int64_t> offsets;
  for (const auto& x : xs) {
    offsets.push_back(off);
    const std::int64_t blk = static_cast<std::int64_t>(x.dim(axis)) * inner;
    for (std::int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + o * (static_cast<std::int64_t>(total) * inner) + off,
                  x.data() + o * blk, sizeof(T) * static_cast<std::size_t>(blk));
    off += blk;
  }

  if (g.track(out, any_grad)) {
    std::vector<Tensor<T>> ins = xs;
    const std::int64_t row = static_cast<std::int64_t>(total) * inner;
    g.record([out, ins, offsets, outer, inner, row]() mutable {
      if (!out.has_grad()) return;
      for (std::size_t i = 0; i < ins.size(); ++i) {
        if (!ins[i].requires_grad()) continue;
        ins[i].ensure_grad();
        const std::int64_t blk = ins[i].numel() / outer;
        for (std::int64_t o = 0; o < outer; ++o) {
          const T* go = out.grad() + o * row + offsets[i];
          T* gi = ins[i].grad() + o * blk;
          for (std::int64_t j = 0; j < blk; ++j) gi[j] += go[j];
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Softmax over an axis set (max-stabilized)

namespace detail {

// Decompose flat index -> group id over the non-reduced axes.
struct SoftmaxGroups {
  std::vector<std::int64_t> strides;       // input strides
  std::vector<std::int64_t> group_stride;  // 0 for reduced axes
  int nd = 0;

  template <class T>
  explicit SoftmaxGroups(const Tensor<T>& x, const std::vector<int>& axes) {
    nd = x.ndim();
    strides.assign(static_cast<std::size_t>(nd), 1);
    for (int d = nd - 2; d >= 0; --d)
      strides[static_cast<std::size_t>(d)] = strides[static_cast<std::size_t>(d + 1)] * x.dim(d + 1);
    std::vector<bool> reduced(static_cast<std::size_t>(nd), false);
    for (int a : axes) {
      if (a < 0 || a >= nd) throw ContractError("softmax: invalid axis");
      reduced[static_cast<std::size_t>(a)] = true;
    }
    group_stride.assign(static_cast<std::size_t>(nd), 0);
    std::int64_t gs = 1;
    for (int d = nd - 1; d >= 0; --d) {
      if (!reduced[static_cast<std::size_t>(d)]) {
        group_stride[static_cast<std::size_t>(d)] = gs;
        gs *= x.dim(d);
      }
    }
    n_groups = gs;
  }

  template <class T>
  std::int64_t group_of(std::int64_t flat, const Tensor<T>& x) const {
    std::int64_t gid = 0;
    for (int d = 0; d < nd; ++d) {
      const std::int64_t idx = (flat / strides[static_cast<std::size_t>(d)]) % x.dim(d);
      gid += idx * group_stride[static_cast<std::size_t>(d)];
    }
    return gid;
  }

  std::int64_t n_groups = 1;
};

}  // namespace detail

template <class T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x, const std::vector<int>& axes) {
  if (axes.empty()) throw ContractError("softmax: axis set must be non-empty");
  detail::SoftmaxGroups grp(x, axes);
  const std::int64_t n = x.numel();

  std::vector<std::int64_t> gid(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) gid[static_cast<std::size_t>(i)] = grp.group_of(i, x);

  Tensor<T> out = Tensor<T>::zeros(x.shape());
  {
    std::vector<T> mx(static_cast<std::size_t>(grp.n_groups), -std::numeric_limits<T>::infinity());
    for (std::int64_t i = 0; i < n; ++i)
      mx[static_cast<std::size_t>(gid[static_cast<std::size_t>(i)])] =
          std::max(mx[static_cast<std::size_t>(gid[static_cast<std::size_t>(i)])], x.data()[i]);
    std::vector<T> sum(static_cast<std::size_t>(grp.n_groups), T(0));
    for (std::int64_t i = 0; i < n; ++i) {
      const T e = std::exp(x.data()[i] - mx[static_cast<std::size_t>(gid[static_cast<std::size_t>(i)])]);
      out.data()[i] = e;
      sum[static_cast<std::size_t>(gid[static_cast<std::size_t>(i)])] += e;
    }
    for (std::int64_t i = 0; i < n; ++i)
      out.data()[i] /= sum[static_cast<std::size_t>(gid[static_cast<std::size_t>(i)])];
  }

  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    auto gids = std::make_shared<std::vector<std::int64_t>>(std::move(gid));
    const std::int64_t ngroups = grp.n_groups;
    g.record([out, in, gids, n, ngroups]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      std::vector<T> dot(static_cast<std::size_t>(ngroups), T(0));
      const T* y = out.data();
      const T* go = out.grad();
      for (std::int64_t i = 0; i < n; ++i)
        dot[static_cast<std::size_t>((*gids)[static_cast<std::size_t>(i)])] += go[i] * y[i];
      for (std::int64_t i = 0; i < n; ++i)
        in.grad()[i] += y[i] * (go[i] - dot[static_cast<std::size_t>((*gids)[static_cast<std::size_t>(i)])]);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions / loss

template <class T>
Tensor<T> sum_all(Graph<T>& g, const Tensor<T>& x) {
  T s = T(0);
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) s += x.data()[i];
  Tensor<T> out = Tensor<T>::scalar(s);
  if (g.track(out, x.requires_grad())) {
    Tensor<T> in = x;
    g.record([out, in, n]() mutable {
      if (!out.has_grad()) return;
      in.ensure_grad();
      const T go = out.grad()[0];
      for (std::int64_t i = 0; i < n; ++i) in.grad()[i] += go;
    });
  }
  return out;
}

template <class T>
Tensor<T> mean_all(Graph<T>& g, const Tensor<T>& x) {
  Tensor<T> s = sum_all(g, x);
  return scale(g, s, T(1) / static_cast<T>(x.numel()));
}

// Mean over all elements of the squared difference.
template <class T>
Tensor<T> mse(Graph<T>& g, const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape())
    throw DimensionError("mse: shape mismatch " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
  const std::int64_t n = pred.numel();
  T s = T(0);
  for (std::int64_t i = 0; i < n; ++i) {
    const T d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  Tensor<T> out = Tensor<T>::scalar(s / static_cast<T>(n));
  if (g.track(out, pred.requires_grad() || target.requires_grad())) {
    Tensor<T> p = pred, t = target;
    g.record([out, p, t, n]() mutable {
      if (!out.has_grad()) return;
      const T go = out.grad()[0] * T(2) / static_cast<T>(n);
      if (p.requires_grad()) {
        p.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) p.grad()[i] += go * (p.data()[i] - t.data()[i]);
      }
      if (t.requires_grad()) {
        t.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) t.grad()[i] -= go * (p.data()[i] - t.data()[i]);
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense projection: y = W x + b  (x: n, W: m x n, b: m)

template <class T>
Tensor<T> linear(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.ndim() != 1 || weight.ndim() != 2 || bias.ndim() != 1)
    throw DimensionError("linear: expected vector input, matrix weight, vector bias");
  if (weight.dim(1) != x.dim(0) || weight.dim(0) != bias.dim(0))
    throw DimensionError("linear: weight dims do not match input/bias");
  const int m = weight.dim(0), n = weight.dim(1);
  Tensor<T> out = Tensor<T>::zeros({m});
  detail::gemm(weight.data(), x.data(), out.data(), m, n, 1);
  for (int i = 0; i < m; ++i) out.data()[i] += bias.at(i);
  if (g.track(out, x.requires_grad() || weight.requires_grad() || bias.requires_grad())) {
    Tensor<T> in = x, w = weight, b = bias;
    g.record([out, in, w, b, m, n]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad();
      if (in.requires_grad()) {
        in.ensure_grad();
        detail::gemm_at(w.data(), go, in.grad(), n, m, 1, true);
      }
      if (w.requires_grad()) {
        w.ensure_grad();
        detail::gemm_bt(go, in.data(), w.grad(), m, 1, n, true);
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        for (int i = 0; i < m; ++i) b.grad()[i] += go[i];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// CDNA-specific fused ops

// Applies each normalized k x k kernel to every channel of `frame`
// (true 2-D convolution, zero padding, same spatial size) and appends an
// identity slot that copies the frame unchanged.
// frame: C x H x W, kernels: n x k x k -> (n+1) x C x H x W.
template <class T>
Tensor<T> apply_cdna(Graph<T>& g, const Tensor<T>& frame, const Tensor<T>& kernels) {
  if (frame.ndim() != 3) throw DimensionError("apply_cdna: frame must be CxHxW");
  if (kernels.ndim() != 3 || kernels.dim(1) != kernels.dim(2))
    throw DimensionError("apply_cdna: kernels must be n x k x k");
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  const int nk = kernels.dim(0), k = kernels.dim(1);
  if (k > h || k > w) throw DimensionError("apply_cdna: kernel larger than frame");
  if (k % 2 == 0) throw ContractError("apply_cdna: kernel size must be odd");
  const int r = k / 2;

  Tensor<T> out = Tensor<T>::zeros({nk + 1, c, h, w});
  for (int kc = 0; kc < nk; ++kc) {
    const T* ker = kernels.data() + kernels.offset(kc, 0, 0);
    for (int ch = 0; ch < c; ++ch) {
      const T* src = frame.data() + frame.offset(ch, 0, 0);
      T* dst = out.data() + out.offset(kc, ch, 0, 0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T acc = T(0);
          for (int dy = -r; dy <= r; ++dy) {
            const int sy = y - dy;
            if (sy < 0 || sy >= h) continue;
            for (int dx = -r; dx <= r; ++dx) {
              const int sx = x - dx;
              if (sx < 0 || sx >= w) continue;
              acc += ker[(r + dy) * k + (r + dx)] * src[sy * w + sx];
            }
          }
          dst[y * w + x] = acc;
        }
    }
  }
  // Identity slot.
  std::memcpy(out.data() + out.offset(nk, 0, 0, 0), frame.data(),
              sizeof(T) * static_cast<std::size_t>(frame.numel()));

  if (g.track(out, frame.requires_grad() || kernels.requires_grad())) {
    Tensor<T> fr = frame, ks = kernels;
    g.record([out, fr, ks, c, h, w, nk, k, r]() mutable {
      if (!out.has_grad()) return;
      if (fr.requires_grad()) {
        fr.ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          T* gf = fr.grad() + fr.offset(ch, 0, 0);
          // Transformed slots (correlation with each kernel).
          for (int kc = 0; kc < nk; ++kc) {
            const T* ker = ks.data() + ks.offset(kc, 0, 0);
            const T* go = out.grad() + out.offset(kc, ch, 0, 0);
            for (int sy = 0; sy < h; ++sy)
              for (int sx = 0; sx < w; ++sx) {
                T acc = T(0);
                for (int dy = -r; dy <= r; ++dy) {
                  const int y = sy + dy;
                  if (y < 0 || y >= h) continue;
                  for (int dx = -r; dx <= r; ++dx) {
                    const int x = sx + dx;
                    if (x < 0 || x >= w) continue;
                    acc += ker[(r + dy) * k + (r + dx)] * go[y * w + x];
                  }
                }
                gf[sy * w + sx] += acc;
              }
          }
          // Identity slot.
          const T* go = out.grad() + out.offset(nk, ch, 0, 0);
          const std::int64_t plane = static_cast<std::int64_t>(h) * w;
          for (std::int64_t i = 0; i < plane; ++i) gf[i] += go[i];
        }
      }
      if (ks.requires_grad()) {
        ks.ensure_grad();
        for (int kc = 0; kc < nk; ++kc) {
          T* gk = ks.grad() + ks.offset(kc, 0, 0);
          for (int ch = 0; ch < c; ++ch) {
            const T* src = fr.data() + fr.offset(ch, 0, 0);
            const T* go = out.grad() + out.offset(kc, ch, 0, 0);
            for (int dy = -r; dy <= r; ++dy)
              for (int dx = -r; dx <= r; ++dx) {
                T acc = T(0);
                for (int y = 0; y < h; ++y) {
                  const int sy = y - dy;
                  if (sy < 0 || sy >= h) continue;
                  for (int x = 0; x < w; ++x) {
                    const int sx = x - dx;
                    if (sx < 0 || sx >= w) continue;
                    acc += go[y * w + x] * src[sy * w + sx];
                  }
                }
                gk[(r + dy) * k + (r + dx)] += acc;
              }
          }
        }
      }
    });
  }
  return out;
}

// Per-pixel convex combination of the transformed frames.
// frames: M x C x H x W, masks: M x H x W -> C x H x W.
template <class T>
Tensor<T> compose(Graph<T>& g, const Tensor<T>& frames, const Tensor<T>& masks) {
  if (frames.ndim() != 4 || masks.ndim() != 3)
    throw DimensionError("compose: expected MxCxHxW frames and MxHxW masks");
  if (frames.dim(0) != masks.dim(0))
    throw ContractError("compose: frame count does not match mask channels");
  if (frames.dim(2) != masks.dim(1) || frames.dim(3) != masks.dim(2))
    throw DimensionError("compose: spatial dims mismatch");
  const int m = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  Tensor<T> out = Tensor<T>::zeros({c, h, w});
  for (int mc = 0; mc < m; ++mc) {
    const T* msk = masks.data() + mc * plane;
    for (int ch = 0; ch < c; ++ch) {
      const T* src = frames.data() + frames.offset(mc, ch, 0, 0);
      T* dst = out.data() + ch * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i] * msk[i];
    }
  }
  if (g.track(out, frames.requires_grad() || masks.requires_grad())) {
    Tensor<T> fr = frames, ms = masks;
    g.record([out, fr, ms, m, c, plane]() mutable {
      if (!out.has_grad()) return;
      if (fr.requires_grad()) {
        fr.ensure_grad();
        for (int mc = 0; mc < m; ++mc) {
          const T* msk = ms.data() + mc * plane;
          for (int ch = 0; ch < c; ++ch) {
            const T* go = out.grad() + ch * plane;
            T* gf = fr.grad() + fr.offset(mc, ch, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) gf[i] += go[i] * msk[i];
          }
        }
      }
      if (ms.requires_grad()) {
        ms.ensure_grad();
        for (int mc = 0; mc < m; ++mc) {
          T* gm = ms.grad() + mc * plane;
          for (int ch = 0; ch < c; ++ch) {
            const T* go = out.grad() + ch * plane;
            const T* src = fr.data() + fr.offset(mc, ch, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) gm[i] += go[i] * src[i];
          }
        }
      }
    });
  }
  return out;
}

}  // namespace mmfp
