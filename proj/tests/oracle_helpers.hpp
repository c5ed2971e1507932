#pragma once

// Test-only reference implementations. These are intentionally written as
// direct summations / direct DFTs, independent of the library's im2col+GEMM
// and FFT paths, so they can serve as oracles.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "mmfp/core/graph.hpp"
#include "mmfp/core/tensor.hpp"

namespace oracle {

// Six-nested-loop convolution, zero padding.
template <class T>
mmfp::Tensor<T> conv2d_direct(const mmfp::Tensor<T>& input, const mmfp::Tensor<T>& kernel,
                              int stride, int pad) {
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = kernel.dim(0), k = kernel.dim(2);
  const int h_out = (h + 2 * pad - k) / stride + 1;
  const int w_out = (w + 2 * pad - k) / stride + 1;
  auto out = mmfp::Tensor<T>::zeros({c_out, h_out, w_out});
  for (int oc = 0; oc < c_out; ++oc)
    for (int oy = 0; oy < h_out; ++oy)
      for (int ox = 0; ox < w_out; ++ox) {
        T acc = T(0);
        for (int ic = 0; ic < c_in; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += kernel.at(kernel.offset(oc, ic, ky, kx)) * input.at(input.offset(ic, iy, ix));
            }
        out.at(out.offset(oc, oy, ox)) = acc;
      }
  return out;
}

// Scatter-add transposed convolution (adjoint of conv2d_direct).
template <class T>
mmfp::Tensor<T> conv_transpose2d_direct(const mmfp::Tensor<T>& input, const mmfp::Tensor<T>& kernel,
                                        int stride, int pad) {
  const int a = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int b = kernel.dim(1), k = kernel.dim(2);
  const int h_out = (h - 1) * stride - 2 * pad + k;
  const int w_out = (w - 1) * stride - 2 * pad + k;
  auto out = mmfp::Tensor<T>::zeros({b, h_out, w_out});
  for (int ac = 0; ac < a; ++ac)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const T v = input.at(input.offset(ac, y, x));
        for (int bc = 0; bc < b; ++bc)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int oy = y * stride - pad + ky;
              const int ox = x * stride - pad + kx;
              if (oy < 0 || oy >= h_out || ox < 0 || ox >= w_out) continue;
              out.at(out.offset(bc, oy, ox)) += v * kernel.at(kernel.offset(ac, bc, ky, kx));
            }
      }
  return out;
}

// Per-pixel mask composition.
template <class T>
mmfp::Tensor<T> compose_direct(const mmfp::Tensor<T>& frames, const mmfp::Tensor<T>& masks) {
  const int m = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  auto out = mmfp::Tensor<T>::zeros({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        T acc = T(0);
        for (int mc = 0; mc < m; ++mc)
          acc += frames.at(frames.offset(mc, ch, y, x)) * masks.at(masks.offset(mc, y, x));
        out.at(out.offset(ch, y, x)) = acc;
      }
  return out;
}

// CDNA transform by direct summation (true convolution, Eq.-style indexing).
template <class T>
mmfp::Tensor<T> cdna_direct(const mmfp::Tensor<T>& frame, const mmfp::Tensor<T>& kernels) {
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  const int nk = kernels.dim(0), k = kernels.dim(1), r = k / 2;
  auto out = mmfp::Tensor<T>::zeros({nk + 1, c, h, w});
  for (int kc = 0; kc < nk; ++kc)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T acc = T(0);
          for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
              const int sy = y - dy, sx = x - dx;
              if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
              acc += kernels.at(kernels.offset(kc, r + dy, r + dx)) * frame.at(frame.offset(ch, sy, sx));
            }
          out.at(out.offset(kc, ch, y, x)) = acc;
        }
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(out.offset(nk, ch, y, x)) = frame.at(frame.offset(ch, y, x));
  return out;
}

// Direct O(N^2) DFT of a real frame; returns all N complex bins.
inline std::vector<std::complex<double>> dft_direct(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-12});
  return std::abs(got - want) / denom;
}

template <class T>
double max_rel_diff(const mmfp::Tensor<T>& a, const mmfp::Tensor<T>& b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, rel_err(static_cast<double>(a.at(i)), static_cast<double>(b.at(i))));
  return worst;
}

// Central-difference gradient check. `f` must be a pure function of the
// given parameters, rebuilding its graph on every call. Returns the max
// relative error between tape gradients and finite differences.
//
// rel = |ad - fd| / max(|ad|, |fd|, 1e-4): the floor makes sub-1e-8
// absolute disagreements on near-zero gradients pass, matching the usual
// atol+rtol gradcheck recipe.
inline double gradcheck_max_rel(
    const std::function<mmfp::Tensor<double>(mmfp::Graph<double>&)>& f,
    std::vector<mmfp::Tensor<double>> params, double step = 1e-4) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  mmfp::Graph<double> g;
  mmfp::Tensor<double> loss = f(g);
  g.backward(loss);

  auto eval = [&]() {
    mmfp::Graph<double> gg;
    gg.set_grad_enabled(false);
    return f(gg).at(0);
  };

  double worst = 0.0;
  for (auto& p : params) {
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double saved = p.at(i);
      p.at(i) = saved + step;
      const double up = eval();
      p.at(i) = saved - step;
      const double down = eval();
      p.at(i) = saved;
      const double fd = (up - down) / (2.0 * step);
      const double ad = p.has_grad() ? p.grad()[i] : 0.0;
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace oracle
