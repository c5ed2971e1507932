#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mmfp/core/ops.hpp"
#include "mmfp/core/rng.hpp"

namespace mmfp {

template <class T>
using ParamMap = std::vector<std::pair<std::string, Tensor<T>>>;

template <class T>
struct ConvLSTMState {
  Tensor<T> hidden;  // C x H x W
  Tensor<T> cell;    // C x H x W

  static ConvLSTMState zeros(int channels, int h, int w) {
    return {Tensor<T>::zeros({channels, h, w}), Tensor<T>::zeros({channels, h, w})};
  }
};

// Convolutional LSTM cell: input/forget/output gates plus tanh candidate,
// gate maps produced by a single convolution over [x ; h]. Gate channel
// order is [i, f, o, g]. No peepholes.
template <class T>
class ConvLSTMCell {
 public:
  ConvLSTMCell() = default;

  ConvLSTMCell(int in_channels, int out_channels, int kernel, Rng& rng)
      : in_ch_(in_channels), out_ch_(out_channels), k_(kernel) {
    const int fan_in = (in_channels + out_channels) * kernel * kernel;
    const T bound = static_cast<T>(std::sqrt(1.0 / fan_in));
    weight_ = Tensor<T>::zeros({4 * out_channels, in_channels + out_channels, kernel, kernel}, true);
    for (std::int64_t i = 0; i < weight_.numel(); ++i)
      weight_.at(i) = static_cast<T>(rng.uniform(-bound, bound));
    bias_ = Tensor<T>::zeros({4 * out_channels}, true);
    // Forget-gate bias starts at 1 so early cell state is retained.
    for (int i = out_channels; i < 2 * out_channels; ++i) bias_.at(i) = T(1);
  }

  int out_channels() const { return out_ch_; }
  int in_channels() const { return in_ch_; }

  std::pair<Tensor<T>, ConvLSTMState<T>> forward(Graph<T>& g, const Tensor<T>& x,
                                                 const ConvLSTMState<T>& state) const {
    if (x.ndim() != 3 || x.dim(0) != in_ch_)
      throw DimensionError("convlstm: input must be " + std::to_string(in_ch_) + " x H x W");
    if (state.hidden.dim(1) != x.dim(1) || state.hidden.dim(2) != x.dim(2))
      throw DimensionError("convlstm: state spatial dims do not match input");
    const int c = out_ch_;
    Tensor<T> xh = concat(g, {x, state.hidden}, 0);
    Tensor<T> gates = conv2d(g, xh, weight_, 1, (k_ - 1) / 2);
    gates = add_channel_bias(g, gates, bias_);
    Tensor<T> gi = sigmoid(g, slice_axis0(g, gates, 0, c));
    Tensor<T> gf = sigmoid(g, slice_axis0(g, gates, c, 2 * c));
    Tensor<T> go = sigmoid(g, slice_axis0(g, gates, 2 * c, 3 * c));
    Tensor<T> gc = tanh_act(g, slice_axis0(g, gates, 3 * c, 4 * c));
    Tensor<T> new_cell = add(g, mul(g, gf, state.cell), mul(g, gi, gc));
    Tensor<T> new_hidden = mul(g, go, tanh_act(g, new_cell));
    return {new_hidden, ConvLSTMState<T>{new_hidden, new_cell}};
  }

  ConvLSTMState<T> initial_state(int h, int w) const {
    return ConvLSTMState<T>::zeros(out_ch_, h, w);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    out.emplace_back(prefix + ".weight", weight_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  int in_ch_ = 0, out_ch_ = 0, k_ = 3;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

// Plain conv layer (weight + bias) with the same init scheme.
template <class T>
class ConvLayer {
 public:
  ConvLayer() = default;

  ConvLayer(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
      : stride_(stride), pad_(padding) {
    const int fan_in = in_channels * kernel * kernel;
    const T bound = static_cast<T>(std::sqrt(1.0 / fan_in));
    weight_ = Tensor<T>::zeros({out_channels, in_channels, kernel, kernel}, true);
    for (std::int64_t i = 0; i < weight_.numel(); ++i)
      weight_.at(i) = static_cast<T>(rng.uniform(-bound, bound));
    bias_ = Tensor<T>::zeros({out_channels}, true);
  }

  Tensor<T> forward(Graph<T>& g, const Tensor<T>& x) const {
    return add_channel_bias(g, conv2d(g, x, weight_, stride_, pad_), bias_);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    out.emplace_back(prefix + ".weight", weight_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  int stride_ = 1, pad_ = 0;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

// Transposed conv layer; weight layout matches conv_transpose2d
// (dim0 = input channels, dim1 = output channels).
template <class T>
class DeconvLayer {
 public:
  DeconvLayer() = default;

  DeconvLayer(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
      : stride_(stride), pad_(padding) {
    const int fan_in = in_channels * kernel * kernel;
    const T bound = static_cast<T>(std::sqrt(1.0 / fan_in));
    weight_ = Tensor<T>::zeros({in_channels, out_channels, kernel, kernel}, true);
    for (std::int64_t i = 0; i < weight_.numel(); ++i)
      weight_.at(i) = static_cast<T>(rng.uniform(-bound, bound));
    bias_ = Tensor<T>::zeros({out_channels}, true);
  }

  Tensor<T> forward(Graph<T>& g, const Tensor<T>& x) const {
    return add_channel_bias(g, conv_transpose2d(g, x, weight_, stride_, pad_), bias_);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    out.emplace_back(prefix + ".weight", weight_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  int stride_ = 1, pad_ = 0;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

}  // namespace mmfp
