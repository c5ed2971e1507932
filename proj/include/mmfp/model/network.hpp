#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmfp/model/encoders.hpp"
#include "mmfp/model/fusion.hpp"
#include "mmfp/model/heads.hpp"

namespace mmfp {

// Predictions from one autoregressive pass: one frame per modality per
// prediction step (0-based target frame indices K..T-1). Vision frames are
// clamped to [0,1]; aux frames live in the standardized modality space.
template <class T>
struct Rollout {
  std::vector<Tensor<T>> vision;
  std::vector<Tensor<T>> haptic;
  std::vector<Tensor<T>> audio;
  std::vector<Tensor<T>> vibro;
  std::vector<int> target_index;
  int context = 0;

  int steps() const { return static_cast<int>(vision.size()); }
};

// The full encoder / fusion / prediction-head network. A model instance is
// single-writer during a rollout (recurrent state mutation is confined to
// the call); parameters are read-only during evaluation, so independent
// trials may be evaluated concurrently on the same instance.
template <class T>
class PredictionModel {
 public:
  PredictionModel() = default;

  PredictionModel(const ModelConfig& cfg, const ModalityMask& mask, std::uint64_t seed)
      : cfg_(cfg), mask_(mask), seed_(seed) {
    cfg_.validate();
    Rng root(seed);
    Rng rv = root.split(1);
    vision_ = VisionEncoder<T>(cfg_, rv);
    if (mask_.use_haptic) {
      Rng r = root.split(2);
      haptic_.emplace(cfg_, r);
    }
    if (mask_.use_audio) {
      Rng r = root.split(3);
      audio_.emplace(cfg_.dims.audio_bins, cfg_.dims.audio_steps, cfg_.audio_channels,
                     cfg_.feat_h(), cfg_.feat_w(), r);
    }
    if (mask_.use_vibro) {
      Rng r = root.split(4);
      vibro_.emplace(cfg_.dims.vibro_bins, cfg_.dims.vibro_steps, cfg_.vibro_channels,
                     cfg_.feat_h(), cfg_.feat_w(), r);
    }
    {
      Rng r = root.split(5);
      fusion_ = FusionModule<T>(cfg_.fusion_in_channels(mask_), cfg_.fused_channels, cfg_.feat_h(),
                                cfg_.feat_w(), r);
    }
    {
      Rng r = root.split(6);
      cdna_ = CdnaHead<T>(cfg_, r);
    }
    {
      Rng r = root.split(7);
      masks_ = MaskHead<T>(cfg_, vision_.skip_low_channels(), vision_.skip_mid_channels(), r);
    }
    if (mask_.aux_training) {
      if (mask_.use_haptic) {
        Rng r = root.split(8);
        aux_haptic_.emplace(cfg_, cfg_.dims.haptic_channels, cfg_.dims.haptic_steps, r);
      }
      if (mask_.use_audio) {
        Rng r = root.split(9);
        aux_audio_.emplace(cfg_, cfg_.dims.audio_bins, cfg_.dims.audio_steps, r);
      }
      if (mask_.use_vibro) {
        Rng r = root.split(10);
        aux_vibro_.emplace(cfg_, cfg_.dims.vibro_bins, cfg_.dims.vibro_steps, r);
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const ModalityMask& mask() const { return mask_; }
  std::uint64_t seed() const { return seed_; }

  ParamMap<T>& params() {
    if (params_.empty()) {
      vision_.collect_params("vision", params_);
      if (haptic_) haptic_->collect_params("haptic", params_);
      if (audio_) audio_->collect_params("audio", params_);
      if (vibro_) vibro_->collect_params("vibro", params_);
      fusion_.collect_params("fusion", params_);
      cdna_.collect_params("cdna", params_);
      masks_.collect_params("masks", params_);
      if (aux_haptic_) aux_haptic_->collect_params("aux_haptic", params_);
      if (aux_audio_) aux_audio_->collect_params("aux_audio", params_);
      if (aux_vibro_) aux_vibro_->collect_params("aux_vibro", params_);
    }
    return params_;
  }

  std::int64_t num_params() {
    std::int64_t n = 0;
    for (auto& [name, p] : params()) n += p.numel();
    return n;
  }

  void zero_grads() {
    for (auto& [name, p] : params()) p.zero_grad();
  }

  // Autoregressive pass over one trial. Visual inputs are ground truth for
  // the K context steps (and throughout under teacher forcing); afterwards
  // the model consumes its own clamped prediction. Non-visual inputs are
  // ground truth up to t-1 unless self_feed_aux is set, in which case the
  // model's own auxiliary predictions are fed back after the context.
  Rollout<T> rollout(Graph<T>& g, const SampleQuadruple<T>& sample, int context,
                     bool teacher_forcing, bool self_feed_aux = false) const {
    const int t_total = sample.frames();
    if (context < 1 || context >= t_total)
      throw ContractError("rollout: need 1 <= K < T, got K=" + std::to_string(context) +
                          " T=" + std::to_string(t_total));
    if (!sample.synchronized()) throw ContractError("rollout: sample modalities not synchronized");
    if (self_feed_aux && !mask_.aux_training)
      throw ContractError("rollout: self_feed_aux requires auxiliary heads");

    typename VisionEncoder<T>::State vs = vision_.initial_state();
    typename HapticEncoder<T>::State hs;
    typename SpectrogramEncoder<T>::State as, bs;
    if (haptic_) hs = haptic_->initial_state();
    if (audio_) as = audio_->initial_state();
    if (vibro_) bs = vibro_->initial_state();
    typename FusionModule<T>::State fs = fusion_.initial_state();

    Tensor<T> behavior_map;
    if (mask_.use_behavior)
      behavior_map = embed_behavior<T>(g, sample.behavior, cfg_.feat_h(), cfg_.feat_w());

    Rollout<T> out;
    out.context = context;
    Tensor<T> prev_pred;
    Tensor<T> prev_aux_h, prev_aux_a, prev_aux_v;

    for (int t_in = 0; t_in + 1 < t_total; ++t_in) {
      const bool use_gt_vision = (t_in < context) || teacher_forcing;
      Tensor<T> vision_in = use_gt_vision ? sample.vision[static_cast<std::size_t>(t_in)]
                                          : prev_pred;
      const bool use_gt_aux = (t_in < context) || !self_feed_aux;

      auto [venc, vs2] = vision_.forward(g, vision_in, vs);
      vs = vs2;

      std::vector<Tensor<T>> maps = {venc.feat};
      if (haptic_) {
        Tensor<T> in = use_gt_aux ? sample.haptic[static_cast<std::size_t>(t_in)] : prev_aux_h;
        auto [m, s] = haptic_->forward(g, in, hs);
        maps.push_back(m);
        hs = s;
      }
      if (audio_) {
        Tensor<T> in = use_gt_aux ? sample.audio[static_cast<std::size_t>(t_in)] : prev_aux_a;
        auto [m, s] = audio_->forward(g, in, as);
        maps.push_back(m);
        as = s;
      }
      if (vibro_) {
        Tensor<T> in = use_gt_aux ? sample.vibro[static_cast<std::size_t>(t_in)] : prev_aux_v;
        auto [m, s] = vibro_->forward(g, in, bs);
        maps.push_back(m);
        bs = s;
      }
      if (mask_.use_behavior) maps.push_back(behavior_map);

      auto [fused, fs2] = fusion_.forward(g, maps, fs);
      fs = fs2;

      Tensor<T> kernels = cdna_.forward(g, fused);
      Tensor<T> transformed = apply_cdna(g, vision_in, kernels);
      Tensor<T> mask_stack = masks_.forward(g, fused, venc.skip_low, venc.skip_mid);
      Tensor<T> pred = clamp01(g, compose(g, transformed, mask_stack));
      prev_pred = pred;

      if (aux_haptic_) prev_aux_h = aux_haptic_->forward(g, fused);
      if (aux_audio_) prev_aux_a = aux_audio_->forward(g, fused);
      if (aux_vibro_) prev_aux_v = aux_vibro_->forward(g, fused);

      const int target = t_in + 1;
      if (target >= context) {
        out.vision.push_back(pred);
        if (aux_haptic_) out.haptic.push_back(prev_aux_h);
        if (aux_audio_) out.audio.push_back(prev_aux_a);
        if (aux_vibro_) out.vibro.push_back(prev_aux_v);
        out.target_index.push_back(target);
      }
    }
    return out;
  }

  // Evaluation entry point: no gradients, no teacher forcing on vision.
  Rollout<T> predict(const SampleQuadruple<T>& sample, int context,
                     bool self_feed_aux = false) const {
    Graph<T> g;
    g.set_grad_enabled(false);
    return rollout(g, sample, context, /*teacher_forcing=*/false, self_feed_aux);
  }

 private:
  ModelConfig cfg_;
  ModalityMask mask_;
  std::uint64_t seed_ = 0;

  VisionEncoder<T> vision_;
  std::optional<HapticEncoder<T>> haptic_;
  std::optional<SpectrogramEncoder<T>> audio_;
  std::optional<SpectrogramEncoder<T>> vibro_;
  FusionModule<T> fusion_;
  CdnaHead<T> cdna_;
  MaskHead<T> masks_;
  std::optional<AuxDecoder<T>> aux_haptic_;
  std::optional<AuxDecoder<T>> aux_audio_;
  std::optional<AuxDecoder<T>> aux_vibro_;

  ParamMap<T> params_;
};

}  // namespace mmfp
