#pragma once

#include <string>
#include <vector>

#include "mmfp/model/network.hpp"

namespace mmfp {

// Per-modality weights of the multi-task objective. Defaults are the
// grid-searched values; disabled or aux-off modalities contribute zero.
template <class T>
struct LossWeights {
  T vision = T(1.0);
  T haptic = T(1e-4);
  T audio = T(1e-3);
  T vibro = T(1e-4);
};

template <class T>
struct LossBreakdown {
  Tensor<T> total;  // scalar, on the graph
  double weighted = 0.0;
  double vision = 0.0;
  double haptic = 0.0;
  double audio = 0.0;
  double vibro = 0.0;
};

namespace detail {

// Mean over prediction steps of the per-frame MSE (frames share a shape,
// so this equals the MSE over all predicted elements).
template <class T>
Tensor<T> sequence_mse(Graph<T>& g, const std::vector<Tensor<T>>& preds,
                       const std::vector<Tensor<T>>& targets, const std::vector<int>& idx) {
  Tensor<T> acc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Tensor<T> e = mse(g, preds[i], targets[static_cast<std::size_t>(idx[i])]);
    acc = acc.defined() ? add(g, acc, e) : e;
  }
  return scale(g, acc, T(1) / static_cast<T>(preds.size()));
}

}  // namespace detail

// L_T = w_i*MSE_i + w_h*MSE_h + w_a*MSE_a + w_v*MSE_v, each MSE averaged
// over predicted timesteps and elements.
template <class T>
LossBreakdown<T> total_loss(Graph<T>& g, const Rollout<T>& rollout,
                            const SampleQuadruple<T>& sample, const LossWeights<T>& w) {
  if (rollout.steps() == 0) throw ContractError("total_loss: rollout has no predictions");
  if (rollout.target_index.back() >= sample.frames())
    throw ContractError("total_loss: rollout targets extend past the sample");
  if (!rollout.haptic.empty() && rollout.haptic.size() != rollout.vision.size())
    throw ContractError("total_loss: auxiliary predictions misaligned with vision steps");

  LossBreakdown<T> out;
  Tensor<T> li = detail::sequence_mse(g, rollout.vision, sample.vision, rollout.target_index);
  out.vision = static_cast<double>(li.at(0));
  Tensor<T> total = scale(g, li, w.vision);

  if (!rollout.haptic.empty()) {
    Tensor<T> lh = detail::sequence_mse(g, rollout.haptic, sample.haptic, rollout.target_index);
    out.haptic = static_cast<double>(lh.at(0));
    total = add(g, total, scale(g, lh, w.haptic));
  }
  if (!rollout.audio.empty()) {
    Tensor<T> la = detail::sequence_mse(g, rollout.audio, sample.audio, rollout.target_index);
    out.audio = static_cast<double>(la.at(0));
    total = add(g, total, scale(g, la, w.audio));
  }
  if (!rollout.vibro.empty()) {
    Tensor<T> lv = detail::sequence_mse(g, rollout.vibro, sample.vibro, rollout.target_index);
    out.vibro = static_cast<double>(lv.at(0));
    total = add(g, total, scale(g, lv, w.vibro));
  }
  out.total = total;
  out.weighted = static_cast<double>(total.at(0));
  return out;
}

}  // namespace mmfp
