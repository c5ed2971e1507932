#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmfp/core/convlstm.hpp"
#include "mmfp/model/config.hpp"

namespace mmfp {

// Dense projection of the flattened fused map to n_kernels*k*k logits,
// normalized per kernel by a spatial softmax so every kernel is positive
// and sums to one.
template <class T>
class CdnaHead {
 public:
  CdnaHead() = default;

  CdnaHead(const ModelConfig& cfg, Rng& rng) : n_(cfg.n_kernels), k_(cfg.cdna_kernel) {
    const int in = cfg.fused_channels * cfg.feat_h() * cfg.feat_w();
    const int out = n_ * k_ * k_;
    const T bound = static_cast<T>(std::sqrt(1.0 / in));
    weight_ = Tensor<T>::zeros({out, in}, true);
    for (std::int64_t i = 0; i < weight_.numel(); ++i)
      weight_.at(i) = static_cast<T>(rng.uniform(-bound, bound));
    bias_ = Tensor<T>::zeros({out}, true);
  }

  // Returns the normalized kernel set, n x k x k.
  Tensor<T> forward(Graph<T>& g, const Tensor<T>& fused) const {
    Tensor<T> logits = linear(g, flatten(g, fused), weight_, bias_);
    Tensor<T> kernels = reshape(g, logits, {n_, k_, k_});
    return softmax(g, kernels, {1, 2});
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    out.emplace_back(prefix + ".weight", weight_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  int n_ = 0, k_ = 0;
  Tensor<T> weight_, bias_;
};

// Upsamples the fused map back to frame resolution with skip concatenation
// at each matching resolution, ending in a channel softmax over the
// n_kernels+1 mask channels.
template <class T>
class MaskHead {
 public:
  MaskHead() = default;

  MaskHead(const ModelConfig& cfg, int skip_low_ch, int skip_mid_ch, Rng& rng)
      : deconv1_(cfg.fused_channels + skip_low_ch, cfg.vision_channels / 2, 4, 2, 1, rng),
        deconv2_(cfg.vision_channels / 2 + skip_mid_ch, cfg.vision_channels / 4, 4, 2, 1, rng),
        conv_out_(cfg.vision_channels / 4, cfg.n_kernels + 1, 3, 1, 1, rng) {}

  // fused: fused map at feat resolution; skips from the vision encoder at
  // the same timestep. Output: (n_kernels+1) x H x W, channels summing to 1.
  Tensor<T> forward(Graph<T>& g, const Tensor<T>& fused, const Tensor<T>& skip_low,
                    const Tensor<T>& skip_mid) const {
    if (skip_low.dim(1) != fused.dim(1) || skip_low.dim(2) != fused.dim(2))
      throw DimensionError("mask head: low skip resolution does not match fused map");
    Tensor<T> x = relu(g, deconv1_.forward(g, concat(g, {fused, skip_low}, 0)));
    if (skip_mid.dim(1) != x.dim(1) || skip_mid.dim(2) != x.dim(2))
      throw DimensionError("mask head: mid skip resolution does not match upsampled map");
    Tensor<T> y = relu(g, deconv2_.forward(g, concat(g, {x, skip_mid}, 0)));
    Tensor<T> logits = conv_out_.forward(g, y);
    return softmax(g, logits, {0});
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    deconv1_.collect_params(prefix + ".deconv1", out);
    deconv2_.collect_params(prefix + ".deconv2", out);
    conv_out_.collect_params(prefix + ".conv_out", out);
  }

 private:
  DeconvLayer<T> deconv1_, deconv2_;
  ConvLayer<T> conv_out_;
};

// Transposed-conv decoder reconstructing the next frame of a non-visual
// modality from the fused map: conv to a thin stack, one deconv chosen to
// cover the target rows, then a crop to the exact frame shape.
template <class T>
class AuxDecoder {
 public:
  AuxDecoder() = default;

  AuxDecoder(const ModelConfig& cfg, int target_rows, int target_cols, Rng& rng)
      : rows_(target_rows), cols_(target_cols) {
    const int fh = cfg.feat_h();
    const int mid = std::max(4, cfg.fused_channels / 8);
    int stride = std::max(1, target_rows / fh);
    int kernel = target_rows - (fh - 1) * stride;
    if (kernel < 1) {
      stride = 1;
      kernel = 1;
    }
    conv_ = ConvLayer<T>(cfg.fused_channels, mid, 3, 1, 1, rng);
    deconv_ = DeconvLayer<T>(mid, 1, kernel, stride, 0, rng);
  }

  // Returns a target_rows x target_cols frame in the modality's space.
  Tensor<T> forward(Graph<T>& g, const Tensor<T>& fused) const {
    Tensor<T> x = relu(g, conv_.forward(g, fused));
    Tensor<T> up = deconv_.forward(g, x);
    if (up.dim(1) < rows_ || up.dim(2) < cols_)
      throw DimensionError("aux decoder: upsampled map smaller than target frame");
    Tensor<T> cropped = crop2d(g, up, rows_, cols_);
    return reshape(g, cropped, {rows_, cols_});
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    conv_.collect_params(prefix + ".conv", out);
    deconv_.collect_params(prefix + ".deconv", out);
  }

 private:
  int rows_ = 0, cols_ = 0;
  ConvLayer<T> conv_;
  DeconvLayer<T> deconv_;
};

}  // namespace mmfp
