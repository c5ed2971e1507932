#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "mmfp/core/rng.hpp"
#include "mmfp/signal/frames.hpp"
#include "mmfp/signal/normalize.hpp"
#include "mmfp/signal/spectrogram.hpp"
#include "oracle_helpers.hpp"

using mmfp::Rng;
using mmfp::Tensor;

namespace {

TEST(PartitionResample, ExactSlicesWhenAlreadySynchronized) {
  Rng rng(1);
  const int t_frames = 5, steps = 8, channels = 3;
  auto stream = Tensor<double>::zeros({channels, t_frames * steps});
  for (std::int64_t i = 0; i < stream.numel(); ++i) stream.at(i) = rng.uniform(-2.0, 2.0);
  auto frames = mmfp::partition_resample(stream, t_frames, steps, "haptic");
  ASSERT_EQ(frames.size(), static_cast<std::size_t>(t_frames));
  for (int t = 0; t < t_frames; ++t)
    for (int c = 0; c < channels; ++c)
      for (int j = 0; j < steps; ++j)
        EXPECT_DOUBLE_EQ(frames[t].at(frames[t].offset(c, j)),
                         stream.at(stream.offset(c, t * steps + j)));
}

TEST(PartitionResample, ConstantStreamStaysConstant) {
  // Awkward rate: 37 samples against 4 frames of 8 columns.
  auto stream = Tensor<double>::full({2, 37}, 3.25);
  auto frames = mmfp::partition_resample(stream, 4, 8, "haptic");
  for (const auto& f : frames)
    for (std::int64_t i = 0; i < f.numel(); ++i) EXPECT_NEAR(f.at(i), 3.25, 1e-12);
}

TEST(PartitionResample, OversampledSinusoidMatchesInterpolationOracle) {
  const int t_frames = 20, steps = 8;
  const int n = 2 * t_frames * steps;  // 2x oversampled
  auto stream = Tensor<double>::zeros({1, n});
  for (int i = 0; i < n; ++i) stream.at(i) = std::sin(2.0 * M_PI * i / 160.0);
  auto frames = mmfp::partition_resample(stream, t_frames, steps, "haptic");

  // Independent linear-interpolation reference over each window.
  double worst = 0.0;
  for (int t = 0; t < t_frames; ++t) {
    const int lo = t * n / t_frames;
    const int hi = (t + 1) * n / t_frames;
    const int len = hi - lo;
    for (int j = 0; j < steps; ++j) {
      const double pos = static_cast<double>(j) * (len - 1) / (steps - 1);
      const int p = static_cast<int>(pos);
      const double frac = pos - p;
      const double want = (1.0 - frac) * stream.at(stream.offset(0, lo + p)) +
                          frac * stream.at(stream.offset(0, std::min(lo + p + 1, hi - 1)));
      worst = std::max(worst, std::abs(frames[t].at(frames[t].offset(0, j)) - want));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(PartitionResample, IdempotentOnResampledData) {
  Rng rng(2);
  const int t_frames = 6, steps = 8;
  auto stream = Tensor<double>::zeros({2, 100});
  for (std::int64_t i = 0; i < stream.numel(); ++i) stream.at(i) = rng.uniform(-1.0, 1.0);
  auto once = mmfp::partition_resample(stream, t_frames, steps, "haptic");
  // Re-packing the synchronized frames into a stream and re-syncing is identity.
  auto packed = Tensor<double>::zeros({2, t_frames * steps});
  for (int t = 0; t < t_frames; ++t)
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < steps; ++j)
        packed.at(packed.offset(c, t * steps + j)) = once[t].at(once[t].offset(c, j));
  auto twice = mmfp::partition_resample(packed, t_frames, steps, "haptic");
  for (int t = 0; t < t_frames; ++t)
    for (std::int64_t i = 0; i < once[t].numel(); ++i)
      EXPECT_DOUBLE_EQ(twice[t].at(i), once[t].at(i));
}

TEST(PartitionResample, ShortStreamNamesModality) {
  auto stream = Tensor<double>::zeros({1, 10});
  try {
    mmfp::partition_resample(stream, 4, 8, "vibro");
    FAIL() << "expected TruncationError";
  } catch (const mmfp::TruncationError& e) {
    EXPECT_NE(std::string(e.what()).find("vibro"), std::string::npos);
  }
}

TEST(Spectrogram, ZeroWaveGivesZeroOutput) {
  std::vector<double> wave(1024, 0.0);
  auto spec = mmfp::spectrogram<double>(wave, 256, 80, 32);
  for (std::int64_t i = 0; i < spec.numel(); ++i) EXPECT_DOUBLE_EQ(spec.at(i), 0.0);
}

TEST(Spectrogram, NonNegativeEverywhere) {
  Rng rng(3);
  std::vector<double> wave(2000);
  for (auto& v : wave) v = rng.uniform(-1.0, 1.0);
  auto spec = mmfp::spectrogram<double>(wave, 128, 32, 40);
  for (std::int64_t i = 0; i < spec.numel(); ++i) EXPECT_GE(spec.at(i), 0.0);
}

TEST(Spectrogram, SinusoidConcentratesInItsBin) {
  const int window = 64, b0 = 8;
  std::vector<double> wave(640);
  for (std::size_t i = 0; i < wave.size(); ++i)
    wave[i] = std::sin(2.0 * M_PI * b0 * static_cast<double>(i) / window);
  auto spec = mmfp::spectrogram<double>(wave, window, 32, 20);
  std::vector<double> mass(20, 0.0);
  for (int b = 0; b < 20; ++b)
    for (int f = 0; f < spec.dim(1); ++f) mass[static_cast<std::size_t>(b)] += spec.at(spec.offset(b, f));
  for (int b = 0; b < 20; ++b) {
    if (std::abs(b - b0) <= 1) continue;
    EXPECT_GE(mass[b0], 5.0 * mass[static_cast<std::size_t>(b)]) << "bin " << b;
  }
}

TEST(Spectrogram, FftMatchesDftOracleAndParseval) {
  Rng rng(4);
  const int n = 256;
  std::vector<double> frame(n);
  const auto win = mmfp::detail::hann_window(n);
  for (int i = 0; i < n; ++i) frame[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0) * win[static_cast<std::size_t>(i)];

  const auto fft = mmfp::detail::fft_real(frame);
  const auto dft = oracle::dft_direct(frame);
  for (int k = 0; k < n; ++k)
    EXPECT_LT(std::abs(fft[static_cast<std::size_t>(k)] - dft[static_cast<std::size_t>(k)]), 1e-9);

  // Parseval, pre-log: sum |X_k|^2 == N * sum |x_n|^2 (windowed frame).
  double lhs = 0.0, rhs = 0.0;
  for (int k = 0; k < n; ++k) lhs += std::norm(fft[static_cast<std::size_t>(k)]);
  for (int i = 0; i < n; ++i) rhs += frame[static_cast<std::size_t>(i)] * frame[static_cast<std::size_t>(i)];
  rhs *= n;
  EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-8);
}

TEST(Spectrogram, WaveShorterThanWindowThrows) {
  std::vector<double> wave(100, 0.0);
  EXPECT_THROW(mmfp::spectrogram<double>(wave, 256, 80, 32), mmfp::InputError);
}

TEST(VibroSpectrogram, StacksAxesIntoRequestedRows) {
  Rng rng(5);
  auto stream = Tensor<double>::zeros({3, 1000});
  for (std::int64_t i = 0; i < stream.numel(); ++i) stream.at(i) = rng.uniform(-1.0, 1.0);
  auto spec = mmfp::vibro_spectrogram(stream, 128, 20, 16);
  ASSERT_EQ(spec.dim(0), 16);  // rows split 6/5/5 across the axes
  for (std::int64_t i = 0; i < spec.numel(); ++i) EXPECT_GE(spec.at(i), 0.0);
}

mmfp::SampleQuadruple<double> make_sample(Rng& rng, int t_frames) {
  mmfp::SampleQuadruple<double> s;
  for (int t = 0; t < t_frames; ++t) {
    auto v = Tensor<double>::zeros({3, 8, 8});
    for (std::int64_t i = 0; i < v.numel(); ++i) v.at(i) = rng.uniform(0.0, 1.0);
    s.vision.push_back(v);
    auto h = Tensor<double>::zeros({4, 3});
    for (std::int64_t i = 0; i < h.numel(); ++i) h.at(i) = rng.uniform(-3.0, 5.0);
    s.haptic.push_back(h);
    auto a = Tensor<double>::zeros({5, 3});
    for (std::int64_t i = 0; i < a.numel(); ++i) a.at(i) = rng.uniform(0.0, 2.0);
    s.audio.push_back(a);
    auto vb = Tensor<double>::zeros({6, 3});
    for (std::int64_t i = 0; i < vb.numel(); ++i) vb.at(i) = rng.uniform(0.0, 1.0);
    s.vibro.push_back(vb);
  }
  return s;
}

TEST(Normalize, StandardizesToZeroMeanUnitStd) {
  Rng rng(6);
  std::vector<mmfp::SampleQuadruple<double>> samples;
  for (int i = 0; i < 4; ++i) samples.push_back(make_sample(rng, 6));
  std::vector<const mmfp::SampleQuadruple<double>*> ptrs;
  for (auto& s : samples) ptrs.push_back(&s);
  auto stats = mmfp::compute_stats(ptrs);
  for (auto& s : samples) mmfp::normalize(s, stats);

  // Re-derive per-channel moments of the normalized haptic data.
  const int channels = 4;
  std::vector<double> sum(channels, 0.0), sumsq(channels, 0.0);
  std::int64_t count = 0;
  for (const auto& s : samples)
    for (const auto& f : s.haptic) {
      for (int c = 0; c < channels; ++c)
        for (int j = 0; j < 3; ++j) {
          sum[static_cast<std::size_t>(c)] += f.at(f.offset(c, j));
          sumsq[static_cast<std::size_t>(c)] += f.at(f.offset(c, j)) * f.at(f.offset(c, j));
        }
      count += 3;
    }
  for (int c = 0; c < channels; ++c) {
    const double m = sum[static_cast<std::size_t>(c)] / static_cast<double>(count);
    const double sd = std::sqrt(sumsq[static_cast<std::size_t>(c)] / static_cast<double>(count) - m * m);
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(sd, 1.0, 1e-6);
  }
}

TEST(Normalize, ConstantChannelClampsStdAndWarns) {
  Rng rng(7);
  auto s = make_sample(rng, 5);
  for (auto& f : s.haptic)
    for (int j = 0; j < 3; ++j) f.at(f.offset(2, j)) = 42.0;
  std::vector<const mmfp::SampleQuadruple<double>*> ptrs = {&s};
  auto stats = mmfp::compute_stats(ptrs);
  ASSERT_FALSE(stats.warnings.empty());
  EXPECT_NE(stats.warnings[0].find("haptic channel 2"), std::string::npos);
  EXPECT_DOUBLE_EQ(stats.haptic_std[2], 1.0);
  mmfp::normalize(s, stats);
  for (auto& f : s.haptic)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(f.at(f.offset(2, j)), 0.0, 1e-12);
}

TEST(Normalize, RoundTripIsIdentity) {
  Rng rng(8);
  std::vector<mmfp::SampleQuadruple<double>> samples;
  for (int i = 0; i < 3; ++i) samples.push_back(make_sample(rng, 4));
  std::vector<const mmfp::SampleQuadruple<double>*> ptrs;
  for (auto& s : samples) ptrs.push_back(&s);
  auto stats = mmfp::compute_stats(ptrs);

  auto copy = samples[1];
  mmfp::normalize(samples[1], stats);
  mmfp::denormalize(samples[1], stats);
  for (std::size_t t = 0; t < copy.haptic.size(); ++t)
    for (std::int64_t i = 0; i < copy.haptic[t].numel(); ++i)
      EXPECT_NEAR(samples[1].haptic[t].at(i), copy.haptic[t].at(i), 1e-9);
}

TEST(SyncToFrames, ProducesSynchronizedQuadruple) {
  Rng rng(9);
  mmfp::PrepConfig cfg;
  cfg.frame_h = cfg.frame_w = 8;
  cfg.haptic_channels = 4;
  const int t_frames = 10;

  mmfp::RawTrial<double> raw;
  raw.behavior = mmfp::BehaviorId::kDrop;
  for (int t = 0; t < t_frames; ++t) {
    auto v = Tensor<double>::zeros({3, 8, 8});
    for (std::int64_t i = 0; i < v.numel(); ++i) v.at(i) = rng.uniform(0.0, 1.0);
    raw.video.push_back(v);
  }
  raw.haptic = Tensor<double>::zeros({4, 100});
  for (std::int64_t i = 0; i < raw.haptic.numel(); ++i) raw.haptic.at(i) = rng.uniform(-1.0, 1.0);
  raw.haptic_rate = 100.0;
  raw.audio.assign(8000, 0.0);
  for (auto& v : raw.audio) v = rng.uniform(-0.1, 0.1);
  raw.audio_rate = 8000.0;
  raw.vibro = Tensor<double>::zeros({3, 2000});
  for (std::int64_t i = 0; i < raw.vibro.numel(); ++i) raw.vibro.at(i) = rng.uniform(-1.0, 1.0);
  raw.vibro_rate = 2000.0;

  auto sample = mmfp::sync_to_frames(raw, cfg);
  EXPECT_TRUE(sample.synchronized());
  EXPECT_EQ(sample.frames(), t_frames);
  EXPECT_EQ(sample.behavior, mmfp::BehaviorId::kDrop);
  ASSERT_EQ(sample.haptic[0].shape(), (mmfp::Shape{4, 8}));
  ASSERT_EQ(sample.audio[0].shape(), (mmfp::Shape{32, 8}));
  ASSERT_EQ(sample.vibro[0].shape(), (mmfp::Shape{16, 8}));
  for (const auto& f : sample.audio)
    for (std::int64_t i = 0; i < f.numel(); ++i) EXPECT_GE(f.at(i), 0.0);
}

TEST(Behaviors, LabelSetAndParsing) {
  EXPECT_EQ(mmfp::kNumBehaviors, 9);
  EXPECT_EQ(mmfp::behavior_from_string("shake"), mmfp::BehaviorId::kShake);
  EXPECT_STREQ(mmfp::to_string(mmfp::BehaviorId::kHold), "hold");
  EXPECT_THROW(mmfp::behavior_from_string("fling"), mmfp::InputError);
}

}  // namespace
