#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "mmfp/core/error.hpp"
#include "mmfp/core/tensor.hpp"
#include "mmfp/signal/spectrogram.hpp"

namespace mmfp {

// The nine exploratory behaviors.
enum class BehaviorId : int {
  kPush = 0,
  kPoke,
  kPress,
  kShake,
  kLift,
  kDrop,
  kGrasp,
  kTap,
  kHold,
};

inline constexpr int kNumBehaviors = 9;

inline const std::array<const char*, kNumBehaviors>& behavior_names() {
  static const std::array<const char*, kNumBehaviors> names = {
      "push", "poke", "press", "shake", "lift", "drop", "grasp", "tap", "hold"};
  return names;
}

inline const char* to_string(BehaviorId b) {
  const int i = static_cast<int>(b);
  if (i < 0 || i >= kNumBehaviors) throw InputError("unknown behavior id " + std::to_string(i));
  return behavior_names()[static_cast<std::size_t>(i)];
}

inline BehaviorId behavior_from_string(const std::string& s) {
  for (int i = 0; i < kNumBehaviors; ++i)
    if (s == behavior_names()[static_cast<std::size_t>(i)]) return static_cast<BehaviorId>(i);
  throw InputError("unknown behavior label '" + s + "'");
}

// Raw per-modality recordings for one interaction trial, before
// synchronization. Streams cover the same wall-clock interval.
template <class T>
struct RawTrial {
  std::vector<Tensor<T>> video;  // T frames, each 3 x H x W in [0,1]
  Tensor<T> haptic;              // M_d x N_h samples
  double haptic_rate = 0.0;
  std::vector<double> audio;  // mono waveform
  double audio_rate = 0.0;
  Tensor<T> vibro;  // 3 x N_v samples
  double vibro_rate = 0.0;
  BehaviorId behavior = BehaviorId::kPush;
};

// Synchronized fixed-shape representation: every modality has exactly T
// frames aligned to the video timeline.
template <class T>
struct SampleQuadruple {
  std::vector<Tensor<T>> vision;  // 3 x M_h x M_w, values in [0,1]
  std::vector<Tensor<T>> haptic;  // M_d x M_d'
  std::vector<Tensor<T>> audio;   // M_e x M_e'
  std::vector<Tensor<T>> vibro;   // M_f x M_f'
  BehaviorId behavior = BehaviorId::kPush;

  int frames() const { return static_cast<int>(vision.size()); }

  bool synchronized() const {
    const auto t = vision.size();
    return haptic.size() == t && audio.size() == t && vibro.size() == t;
  }
};

// Shapes and STFT settings for the synchronized representation.
struct PrepConfig {
  int frame_h = 32, frame_w = 32;       // M_h, M_w (M_c = 3)
  int haptic_channels = 10;             // M_d
  int haptic_steps = 8;                 // M_d'
  int audio_bins = 32;                  // M_e
  int audio_steps = 8;                  // M_e'
  int vibro_bins = 16;                  // M_f (rows from 3 stacked per-axis spectrograms)
  int vibro_steps = 8;                  // M_f'
  int audio_window = 256, audio_hop = 80;
  int vibro_window = 128, vibro_hop = 20;
};

namespace detail {

// Linear resampling of a window of L samples to S columns; identity when
// L == S, constant-preserving always.
template <class T>
void resample_row(const T* src, int l, T* dst, int s) {
  if (l == s) {
    for (int i = 0; i < s; ++i) dst[i] = src[i];
    return;
  }
  if (l == 1) {
    for (int i = 0; i < s; ++i) dst[i] = src[0];
    return;
  }
  if (s == 1) {
    const double pos = (l - 1) / 2.0;
    const int lo = static_cast<int>(pos);
    const double frac = pos - lo;
    dst[0] = static_cast<T>((1.0 - frac) * src[lo] + frac * src[std::min(lo + 1, l - 1)]);
    return;
  }
  for (int i = 0; i < s; ++i) {
    const double pos = static_cast<double>(i) * (l - 1) / static_cast<double>(s - 1);
    const int lo = static_cast<int>(pos);
    const double frac = pos - lo;
    dst[i] = static_cast<T>((1.0 - frac) * src[lo] + frac * src[std::min(lo + 1, l - 1)]);
  }
}

}  // namespace detail

// Partitions a C x N stream into T contiguous windows along time and
// linearly resamples each window to exactly `steps` columns.
template <class T>
std::vector<Tensor<T>> partition_resample(const Tensor<T>& stream, int t_frames, int steps,
                                          const std::string& modality) {
  if (stream.ndim() != 2) throw DimensionError("partition_resample: stream must be C x N");
  const int c = stream.dim(0);
  const int n = stream.dim(1);
  if (n < t_frames * steps)
    throw TruncationError(modality + " stream too short: " + std::to_string(n) +
                          " samples < " + std::to_string(t_frames * steps) + " required");
  std::vector<Tensor<T>> frames;
  frames.reserve(static_cast<std::size_t>(t_frames));
  for (int t = 0; t < t_frames; ++t) {
    const int lo = static_cast<int>(static_cast<std::int64_t>(t) * n / t_frames);
    const int hi = static_cast<int>(static_cast<std::int64_t>(t + 1) * n / t_frames);
    const int len = hi - lo;
    Tensor<T> frame = Tensor<T>::zeros({c, steps});
    for (int ch = 0; ch < c; ++ch)
      detail::resample_row(stream.data() + stream.offset(ch, lo), len,
                           frame.data() + frame.offset(ch, 0), steps);
    frames.push_back(std::move(frame));
  }
  return frames;
}

// Stacks per-axis spectrograms of a 3 x N accelerometer stream along the
// frequency axis into `total_bins` rows (split as evenly as possible,
// e.g. 16 -> 6/5/5).
template <class T>
Tensor<T> vibro_spectrogram(const Tensor<T>& stream, int window, int hop, int total_bins) {
  if (stream.ndim() != 2 || stream.dim(0) != 3)
    throw DimensionError("vibro_spectrogram: stream must be 3 x N");
  const int base = total_bins / 3;
  const int extra = total_bins - 3 * base;
  Tensor<T> out;
  int row = 0;
  std::vector<double> axis(static_cast<std::size_t>(stream.dim(1)));
  for (int a = 0; a < 3; ++a) {
    const int bins = base + (a < extra ? 1 : 0);
    for (int i = 0; i < stream.dim(1); ++i)
      axis[static_cast<std::size_t>(i)] = static_cast<double>(stream.at(stream.offset(a, i)));
    Tensor<T> spec = spectrogram<T>(axis, window, hop, bins);
    if (!out.defined()) out = Tensor<T>::zeros({total_bins, spec.dim(1)});
    for (int b = 0; b < bins; ++b)
      for (int f = 0; f < spec.dim(1); ++f)
        out.at(out.offset(row + b, f)) = spec.at(spec.offset(b, f));
    row += bins;
  }
  return out;
}

// Converts raw recordings into the synchronized fixed-shape quadruple:
// vision is passed through, the haptic series and the audio/vibro
// spectrogram columns are partitioned into per-frame windows.
template <class T>
SampleQuadruple<T> sync_to_frames(const RawTrial<T>& raw, const PrepConfig& cfg) {
  const int t_frames = static_cast<int>(raw.video.size());
  if (t_frames < 1) throw InputError("sync_to_frames: empty video stream");

  SampleQuadruple<T> out;
  out.behavior = raw.behavior;
  out.vision = raw.video;
  for (const auto& f : out.vision)
    if (f.ndim() != 3 || f.dim(0) != 3 || f.dim(1) != cfg.frame_h || f.dim(2) != cfg.frame_w)
      throw DimensionError("sync_to_frames: video frame must be 3x" + std::to_string(cfg.frame_h) +
                           "x" + std::to_string(cfg.frame_w));

  if (raw.haptic.dim(0) != cfg.haptic_channels)
    throw DimensionError("sync_to_frames: haptic stream must have " +
                         std::to_string(cfg.haptic_channels) + " channels");
  out.haptic = partition_resample(raw.haptic, t_frames, cfg.haptic_steps, "haptic");

  Tensor<T> audio_spec = spectrogram<T>(raw.audio, cfg.audio_window, cfg.audio_hop, cfg.audio_bins);
  out.audio = partition_resample(audio_spec, t_frames, cfg.audio_steps, "audio");

  Tensor<T> vib_spec = vibro_spectrogram(raw.vibro, cfg.vibro_window, cfg.vibro_hop, cfg.vibro_bins);
  out.vibro = partition_resample(vib_spec, t_frames, cfg.vibro_steps, "vibro");
  return out;
}

}  // namespace mmfp
