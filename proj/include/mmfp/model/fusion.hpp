#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmfp/core/convlstm.hpp"
#include "mmfp/model/config.hpp"

namespace mmfp {

// Channel-concatenates the enabled modality feature maps, then one conv
// and one ConvLSTM. Output channel count is fixed regardless of how many
// modalities are enabled; the conv's input width adapts at construction.
template <class T>
class FusionModule {
 public:
  using State = ConvLSTMState<T>;

  FusionModule() = default;

  FusionModule(int in_channels, int fused_channels, int fh, int fw, Rng& rng)
      : in_ch_(in_channels), fh_(fh), fw_(fw),
        conv_(in_channels, fused_channels, 3, 1, 1, rng),
        lstm_(fused_channels, fused_channels, 3, rng) {}

  State initial_state() const { return lstm_.initial_state(fh_, fw_); }

  int in_channels() const { return in_ch_; }

  std::pair<Tensor<T>, State> forward(Graph<T>& g, const std::vector<Tensor<T>>& maps,
                                      const State& state) const {
    if (maps.empty()) throw ContractError("fusion: empty feature map list");
    for (const auto& m : maps)
      if (m.ndim() != 3 || m.dim(1) != fh_ || m.dim(2) != fw_)
        throw DimensionError("fusion: feature maps must share the " + std::to_string(fh_) + "x" +
                             std::to_string(fw_) + " grid");
    Tensor<T> cat = maps.size() == 1 ? maps[0] : concat(g, maps, 0);
    if (cat.dim(0) != in_ch_)
      throw DimensionError("fusion: got " + std::to_string(cat.dim(0)) +
                           " input channels, expected " + std::to_string(in_ch_));
    Tensor<T> x = relu(g, conv_.forward(g, cat));
    return lstm_.forward(g, x, state);
  }

  void collect_params(const std::string& prefix, ParamMap<T>& out) {
    conv_.collect_params(prefix + ".conv", out);
    lstm_.collect_params(prefix + ".lstm", out);
  }

 private:
  int in_ch_ = 0, fh_ = 0, fw_ = 0;
  ConvLayer<T> conv_;
  ConvLSTMCell<T> lstm_;
};

}  // namespace mmfp
