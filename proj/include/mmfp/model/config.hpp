#pragma once

#include <string>

#include "mmfp/core/error.hpp"
#include "mmfp/signal/frames.hpp"

namespace mmfp {

// Which modalities (and the behavior-category feature) feed the fusion
// module, and whether auxiliary next-frame heads are trained. Vision is
// always on.
struct ModalityMask {
  bool use_haptic = false;
  bool use_audio = false;
  bool use_vibro = false;
  bool use_behavior = false;
  bool aux_training = false;

  static constexpr bool use_vision = true;

  int enabled_modalities() const {
    return 1 + (use_haptic ? 1 : 0) + (use_audio ? 1 : 0) + (use_vibro ? 1 : 0);
  }

  std::string id() const {
    std::string s = "v";
    if (use_haptic) s += "+h";
    if (use_audio) s += "+a";
    if (use_vibro) s += "+vb";
    if (use_behavior) s += "+b";
    if (aux_training) s += "(aux)";
    return s;
  }

  unsigned encode() const {
    return (use_haptic ? 1u : 0u) | (use_audio ? 2u : 0u) | (use_vibro ? 4u : 0u) |
           (use_behavior ? 8u : 0u) | (aux_training ? 16u : 0u);
  }

  static ModalityMask decode(unsigned bits) {
    ModalityMask m;
    m.use_haptic = bits & 1u;
    m.use_audio = bits & 2u;
    m.use_vibro = bits & 4u;
    m.use_behavior = bits & 8u;
    m.aux_training = bits & 16u;
    return m;
  }

  // "v+h+a+vb+b" style spec, '-' or "v" alone for vision only.
  static ModalityMask parse(const std::string& spec) {
    ModalityMask m;
    std::string tok;
    auto apply = [&m](const std::string& t) {
      if (t.empty() || t == "v" || t == "vision") return;
      if (t == "h" || t == "haptic") m.use_haptic = true;
      else if (t == "a" || t == "audio") m.use_audio = true;
      else if (t == "vb" || t == "vibro") m.use_vibro = true;
      else if (t == "b" || t == "behavior") m.use_behavior = true;
      else throw InputError("unknown modality token '" + t + "'");
    };
    for (char c : spec) {
      if (c == '+' || c == ',') {
        apply(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
    apply(tok);
    return m;
  }
};

// Architecture hyperparameters. The per-modality channel budget keeps all
// encoder outputs on a shared feat_h x feat_w grid so fusion can
// concatenate them along channels.
struct ModelConfig {
  PrepConfig dims;

  int vision_channels = 64;
  int haptic_channels = 16;
  int audio_channels = 16;
  int vibro_channels = 8;
  int fused_channels = 64;  // 64 default, 128 optional

  int n_kernels = 10;   // CDNA kernels (plus one implicit identity slot)
  int cdna_kernel = 5;  // k x k, odd

  int feat_h() const { return dims.frame_h / 4; }
  int feat_w() const { return dims.frame_w / 4; }

  // Channels entering the fusion concat for a given mask.
  int fusion_in_channels(const ModalityMask& m) const {
    int c = vision_channels;
    if (m.use_haptic) c += haptic_channels;
    if (m.use_audio) c += audio_channels;
    if (m.use_vibro) c += vibro_channels;
    if (m.use_behavior) c += kNumBehaviors;
    return c;
  }

  void validate() const {
    if (dims.frame_h % 4 != 0 || dims.frame_w % 4 != 0)
      throw ConfigError("frame dims must be divisible by 4 (two stride-2 stages)");
    if (vision_channels % 4 != 0) throw ConfigError("vision_channels must be divisible by 4");
    if (cdna_kernel % 2 == 0) throw ConfigError("cdna_kernel must be odd");
    const int fhw = feat_h() * feat_w();
    if ((dims.audio_bins * dims.audio_steps) % fhw != 0)
      throw ConfigError("audio frame size must be a multiple of the feature grid");
    if ((dims.vibro_bins * dims.vibro_steps) % fhw != 0)
      throw ConfigError("vibro frame size must be a multiple of the feature grid");
  }

  // Scaled-down preset used by finite-difference verification, where the
  // whole parameter set is swept.
  static ModelConfig toy() {
    ModelConfig c;
    c.dims.frame_h = c.dims.frame_w = 8;
    c.dims.haptic_channels = 4;
    c.dims.haptic_steps = 2;
    c.dims.audio_bins = 4;
    c.dims.audio_steps = 2;
    c.dims.vibro_bins = 4;
    c.dims.vibro_steps = 2;
    c.vision_channels = 8;
    c.haptic_channels = 4;
    c.audio_channels = 4;
    c.vibro_channels = 2;
    c.fused_channels = 8;
    c.n_kernels = 2;
    c.cdna_kernel = 3;
    return c;
  }
};

}  // namespace mmfp
