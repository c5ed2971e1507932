#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "mmfp/core/error.hpp"
#include "mmfp/core/tensor.hpp"

namespace mmfp {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place.
inline void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Full complex spectrum of a real frame; O(N log N) for power-of-two N,
// direct DFT otherwise.
inline std::vector<std::complex<double>> fft_real(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> a(n);
  if (is_pow2(n)) {
    for (std::size_t i = 0; i < n; ++i) a[i] = std::complex<double>(x[i], 0.0);
    fft_pow2(a);
    return a;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    a[k] = acc;
  }
  return a;
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * M_PI * i / static_cast<double>(n - 1)));
  return w;
}

}  // namespace detail

// Log-compressed magnitude spectrogram: Hann-windowed frames, |FFT|,
// log(1+|X|), keeping the lowest `bins` frequency rows. Output is
// bins x frames, everything >= 0.
template <class T>
Tensor<T> spectrogram(const std::vector<double>& wave, int window, int hop, int bins) {
  if (window < 2) throw ContractError("spectrogram: window must be >= 2");
  if (hop < 1) throw ContractError("spectrogram: hop must be >= 1");
  if (bins < 1 || bins > window / 2 + 1)
    throw ContractError("spectrogram: bins must be in [1, window/2+1]");
  if (static_cast<int>(wave.size()) < window)
    throw InputError("spectrogram: wave shorter than one window (" +
                     std::to_string(wave.size()) + " < " + std::to_string(window) + ")");

  const int n_frames = (static_cast<int>(wave.size()) - window) / hop + 1;
  const std::vector<double> win = detail::hann_window(window);
  Tensor<T> out = Tensor<T>::zeros({bins, n_frames});

  std::vector<double> frame(static_cast<std::size_t>(window));
  for (int f = 0; f < n_frames; ++f) {
    const int start = f * hop;
    for (int i = 0; i < window; ++i)
      frame[static_cast<std::size_t>(i)] =
          wave[static_cast<std::size_t>(start + i)] * win[static_cast<std::size_t>(i)];
    const auto spec = detail::fft_real(frame);
    for (int b = 0; b < bins; ++b)
      out.at(out.offset(b, f)) = static_cast<T>(std::log1p(std::abs(spec[static_cast<std::size_t>(b)])));
  }
  return out;
}

}  // namespace mmfp
