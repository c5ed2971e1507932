#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmfp/core/convlstm.hpp"
#include "mmfp/model/config.hpp"

namespace mmfp {

// Vision branch: two stride-2 downsampling stages, each followed by a
// ConvLSTM, then a stride-1 conv to the output channel budget. The two
// ConvLSTM hidden maps double as the skip outputs for the mask head.
template <class T>
class VisionEncoder {
 public:
  struct State {
    ConvLSTMState<T> mid;  // at H/2
    ConvLSTMState<T> low;  // at H/4
  };

  struct Output {
    Tensor<T> feat;      // c_out x H/4 x W/4
    Tensor<T> skip_mid;  // c1 x H/2 x W/2
    Tensor<T> skip_low;  // c2 x H/4 x W/4
  };

  VisionEncoder() = default;

  VisionEncoder(const ModelConfig& cfg, Rng& rng)
      : h_(cfg.dims.frame_h),
        w_(cfg.dims.frame_w),
        c1_(cfg.vision_channels / 4),
        c2_(cfg.vision_channels / 2),
        conv_a_(3, c1_, 3, 2, 1, rng),
        lstm_a_(c1_, c1_, 3, rng),
        conv_b_(c1_, c2_, 3, 2, 1, rng),
        lstm_b_(c2_, c2_, 3, rng),
        conv_c_(c2_, cfg.vision_channels, 3, 1, 1, rng) {}

  State initial_state() const {
    return {lstm_a_.initial_state(h_ / 2, w_ / 2), lstm_b_.initial_state(h_ / 4, w_ / 4)};
  }

  std::pair<Output, State> forward(Graph<T>& g, const Tensor<T>& frame, const State& state) const {
    if (frame.ndim() != 3 || frame.dim(0) != 3 || frame.dim(1) != h_ || frame.dim(2) != w_)
      throw DimensionError("vision encoder: frame must be 3x" + std::to_string(h_) + "x" +
                           std::to_string(w_));
    Tensor<T> x = relu(g, conv_a_.forward(g, frame));
    auto [ha, sa] = lstm_a_.forward(g, x, state.mid);
    Tensor<T> y = relu(g, conv_b_.forward(g, ha));
    auto [hb, sb] = lstm_b_.forward(g, y, state.low);
    Tensor<T> out = relu(g, conv_c_.forward(g, hb));
    return {Output{out, ha, hb}, State{sa, sb}};
  }

  int skip_mid_channels() const { return c1_; }
  int skip_low_channels() const { return c2_; }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    conv_a_.collect_params(prefix + ".conv_a", out);
    lstm_a_.collect_params(prefix + ".lstm_a", out);
    conv_b_.collect_params(prefix + ".conv_b", out);
    lstm_b_.collect_params(prefix + ".lstm_b", out);
    conv_c_.collect_params(prefix + ".conv_c", out);
  }

 private:
  int h_ = 0, w_ = 0, c1_ = 0, c2_ = 0;
  ConvLayer<T> conv_a_, conv_b_, conv_c_;
  ConvLSTMCell<T> lstm_a_, lstm_b_;
};

// Haptic branch: the flattened frame is spatially tiled across the feature
// grid, then one conv + one ConvLSTM.
template <class T>
class HapticEncoder {
 public:
  using State = ConvLSTMState<T>;

  HapticEncoder() = default;

  HapticEncoder(const ModelConfig& cfg, Rng& rng)
      : rows_(cfg.dims.haptic_channels),
        cols_(cfg.dims.haptic_steps),
        fh_(cfg.feat_h()),
        fw_(cfg.feat_w()),
        conv_(rows_ * cols_, cfg.haptic_channels, 3, 1, 1, rng),
        lstm_(cfg.haptic_channels, cfg.haptic_channels, 3, rng) {}

  State initial_state() const { return lstm_.initial_state(fh_, fw_); }

  std::pair<Tensor<T>, State> forward(Graph<T>& g, const Tensor<T>& frame,
                                      const State& state) const {
    if (frame.ndim() != 2 || frame.dim(0) != rows_ || frame.dim(1) != cols_)
      throw DimensionError("haptic encoder: frame must be " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    Tensor<T> tiled = tile_to_map(g, flatten(g, frame), fh_, fw_);
    Tensor<T> x = relu(g, conv_.forward(g, tiled));
    return lstm_.forward(g, x, state);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    conv_.collect_params(prefix + ".conv", out);
    lstm_.collect_params(prefix + ".lstm", out);
  }

 private:
  int rows_ = 0, cols_ = 0, fh_ = 0, fw_ = 0;
  ConvLayer<T> conv_;
  ConvLSTMCell<T> lstm_;
};

// Audio / vibro branch: the spectrogram frame is reinterpreted as channel
// planes on the feature grid (rows x cols = c * feat_h * feat_w), then one
// conv + one ConvLSTM.
template <class T>
class SpectrogramEncoder {
 public:
  using State = ConvLSTMState<T>;

  SpectrogramEncoder() = default;

  SpectrogramEncoder(int rows, int cols, int out_channels, int fh, int fw, Rng& rng)
      : rows_(rows), cols_(cols), fh_(fh), fw_(fw), in_ch_(rows * cols / (fh * fw)),
        conv_(in_ch_, out_channels, 3, 1, 1, rng),
        lstm_(out_channels, out_channels, 3, rng) {}

  State initial_state() const { return lstm_.initial_state(fh_, fw_); }

  std::pair<Tensor<T>, State> forward(Graph<T>& g, const Tensor<T>& frame,
                                      const State& state) const {
    if (frame.ndim() != 2 || frame.dim(0) != rows_ || frame.dim(1) != cols_)
      throw DimensionError("spectrogram encoder: frame must be " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    Tensor<T> planes = reshape(g, frame, {in_ch_, fh_, fw_});
    Tensor<T> x = relu(g, conv_.forward(g, planes));
    return lstm_.forward(g, x, state);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    conv_.collect_params(prefix + ".conv", out);
    lstm_.collect_params(prefix + ".lstm", out);
  }

 private:
  int rows_ = 0, cols_ = 0, fh_ = 0, fw_ = 0, in_ch_ = 0;
  ConvLayer<T> conv_;
  ConvLSTMCell<T> lstm_;
};

// One-hot behavior vector tiled across the feature grid. Parameter-free.
template <class T>
Tensor<T> embed_behavior(Graph<T>& g, BehaviorId behavior, int fh, int fw) {
  const int idx = static_cast<int>(behavior);
  if (idx < 0 || idx >= kNumBehaviors)
    throw InputError("embed_behavior: unknown behavior id " + std::to_string(idx));
  Tensor<T> onehot = Tensor<T>::zeros({kNumBehaviors});
  onehot.at(idx) = T(1);
  return tile_to_map(g, onehot, fh, fw);
}

}  // namespace mmfp
