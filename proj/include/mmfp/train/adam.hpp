#pragma once

#include <cmath>
#include <vector>

#include "mmfp/core/convlstm.hpp"

namespace mmfp {

// Per-parameter first/second moment buffers, keyed by parameter order.
template <class T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t step = 0;

  template <class P>
  static AdamState init(const P& params) {
    AdamState s;
    for (const auto& [name, p] : params) {
      s.m.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
      s.v.emplace_back(static_cast<std::size_t>(p.numel()), T(0));
    }
    return s;
  }
};

// Bias-corrected Adam update. Every parameter must carry a populated
// gradient buffer.
template <class T>
void adam_step(ParamMap<T>& params, AdamState<T>& state, T lr, T beta1 = T(0.9),
               T beta2 = T(0.999), T eps = T(1e-8)) {
  if (state.m.size() != params.size())
    throw ContractError("adam_step: state does not match parameter list");
  state.step += 1;
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1),
                                               static_cast<double>(state.step)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2),
                                               static_cast<double>(state.step)));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi].second;
    if (!p.has_grad())
      throw ContractError("adam_step: missing gradient for " + params[pi].first);
    T* w = p.data();
    const T* grad = p.grad();
    T* m = state.m[pi].data();
    T* v = state.v[pi].data();
    const std::int64_t n = p.numel();
    for (std::int64_t i = 0; i < n; ++i) {
      m[i] = beta1 * m[i] + (T(1) - beta1) * grad[i];
      v[i] = beta2 * v[i] + (T(1) - beta2) * grad[i] * grad[i];
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm. max_norm <= 0 disables clipping.
template <class T>
double clip_global_norm(ParamMap<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    const T* grad = p.grad();
    for (std::int64_t i = 0; i < p.numel(); ++i)
      sq += static_cast<double>(grad[i]) * static_cast<double>(grad[i]);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      T* grad = p.grad();
      for (std::int64_t i = 0; i < p.numel(); ++i) grad[i] *= factor;
    }
  }
  return norm;
}

}  // namespace mmfp
