#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmfp/signal/frames.hpp"

namespace mmfp {

// Per-channel standardization statistics for the non-visual modalities.
// A "channel" is a row of the modality frame (haptic channel / frequency
// bin). Vision stays in [0,1] and is never standardized.
template <class T>
struct ModalityStats {
  std::vector<T> haptic_mean, haptic_std;
  std::vector<T> audio_mean, audio_std;
  std::vector<T> vibro_mean, vibro_std;
  // Channels whose std was clamped to 1 (constant in the training split).
  std::vector<std::string> warnings;

  bool empty() const { return haptic_mean.empty(); }
};

namespace detail {

template <class T>
void accumulate_stats(const std::vector<const SampleQuadruple<T>*>& trials,
                      std::vector<Tensor<T>> SampleQuadruple<T>::*field, int channels,
                      const char* name, std::vector<T>& mean, std::vector<T>& stddev,
                      std::vector<std::string>& warnings) {
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(channels), 0.0);
  std::int64_t count = 0;
  for (const auto* s : trials) {
    for (const auto& frame : s->*field) {
      const int cols = frame.dim(1);
      for (int c = 0; c < channels; ++c)
        for (int j = 0; j < cols; ++j) {
          const double v = static_cast<double>(frame.at(frame.offset(c, j)));
          sum[static_cast<std::size_t>(c)] += v;
          sumsq[static_cast<std::size_t>(c)] += v * v;
        }
      count += frame.dim(1);
    }
  }
  if (count == 0) throw ContractError("compute_stats: empty training split");
  mean.resize(static_cast<std::size_t>(channels));
  stddev.resize(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    const double m = sum[static_cast<std::size_t>(c)] / static_cast<double>(count);
    double var = sumsq[static_cast<std::size_t>(c)] / static_cast<double>(count) - m * m;
    if (var < 0.0) var = 0.0;
    double sd = std::sqrt(var);
    if (sd == 0.0) {
      sd = 1.0;
      warnings.push_back(std::string(name) + " channel " + std::to_string(c) +
                         ": zero variance, std clamped to 1");
    }
    mean[static_cast<std::size_t>(c)] = static_cast<T>(m);
    stddev[static_cast<std::size_t>(c)] = static_cast<T>(sd);
  }
}

template <class T>
void standardize_frames(std::vector<Tensor<T>>& frames, const std::vector<T>& mean,
                        const std::vector<T>& stddev, bool inverse) {
  for (auto& frame : frames) {
    const int channels = frame.dim(0), cols = frame.dim(1);
    for (int c = 0; c < channels; ++c)
      for (int j = 0; j < cols; ++j) {
        T& v = frame.at(frame.offset(c, j));
        if (inverse)
          v = v * stddev[static_cast<std::size_t>(c)] + mean[static_cast<std::size_t>(c)];
        else
          v = (v - mean[static_cast<std::size_t>(c)]) / stddev[static_cast<std::size_t>(c)];
      }
  }
}

}  // namespace detail

// Stats must come from the training split only; pass exactly the trials
// that will be trained on.
template <class T>
ModalityStats<T> compute_stats(const std::vector<const SampleQuadruple<T>*>& training) {
  ModalityStats<T> stats;
  if (training.empty()) throw ContractError("compute_stats: empty training split");
  const int hc = training[0]->haptic[0].dim(0);
  const int ac = training[0]->audio[0].dim(0);
  const int vc = training[0]->vibro[0].dim(0);
  detail::accumulate_stats(training, &SampleQuadruple<T>::haptic, hc, "haptic",
                           stats.haptic_mean, stats.haptic_std, stats.warnings);
  detail::accumulate_stats(training, &SampleQuadruple<T>::audio, ac, "audio",
                           stats.audio_mean, stats.audio_std, stats.warnings);
  detail::accumulate_stats(training, &SampleQuadruple<T>::vibro, vc, "vibro",
                           stats.vibro_mean, stats.vibro_std, stats.warnings);
  return stats;
}

template <class T>
void normalize(SampleQuadruple<T>& sample, const ModalityStats<T>& stats) {
  detail::standardize_frames(sample.haptic, stats.haptic_mean, stats.haptic_std, false);
  detail::standardize_frames(sample.audio, stats.audio_mean, stats.audio_std, false);
  detail::standardize_frames(sample.vibro, stats.vibro_mean, stats.vibro_std, false);
}

template <class T>
void denormalize(SampleQuadruple<T>& sample, const ModalityStats<T>& stats) {
  detail::standardize_frames(sample.haptic, stats.haptic_mean, stats.haptic_std, true);
  detail::standardize_frames(sample.audio, stats.audio_mean, stats.audio_std, true);
  detail::standardize_frames(sample.vibro, stats.vibro_mean, stats.vibro_std, true);
}

}  // namespace mmfp
