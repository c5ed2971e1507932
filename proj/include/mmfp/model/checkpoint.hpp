#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mmfp/model/network.hpp"
#include "mmfp/signal/normalize.hpp"

// Checkpoint file: fixed header echoing the model/training configuration,
// the ModalityMask and seed, the persisted normalization stats, then named
// parameter blocks as little-endian 32-bit floats. Round-trips bit-exactly.

namespace mmfp {

enum class TeacherForcing : unsigned { kAlways = 0, kLinearDecay = 1 };

// Training hyperparameters (echoed into checkpoints for auditability).
struct TrainConfig {
  double lr = 1e-3;
  int epochs = 30;
  int batch = 32;
  int context = 4;  // K
  std::uint64_t seed = 0;
  LossWeights<float> weights;
  ModalityMask mask;
  TeacherForcing forcing = TeacherForcing::kAlways;
  double grad_clip = 5.0;  // global norm; <= 0 disables
  int workers = 2;
};

struct Checkpoint {
  ModelConfig model_cfg;
  ModalityMask mask;
  std::uint64_t seed = 0;
  TrainConfig train_cfg;
  ModalityStats<float> stats;
  std::vector<std::pair<std::string, std::vector<float>>> blocks;  // name -> flat values
  std::vector<Shape> shapes;
};

namespace detail {

constexpr char kCkptMagic[4] = {'M', 'M', 'C', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

inline void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_u64(std::ofstream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v & 0xffffffffULL));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64(std::ifstream& is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

inline void put_f64(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

inline double get_f64(std::ifstream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void put_f32_vec(std::ofstream& os, const std::vector<float>& v) {
  put_u32(os, static_cast<std::uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

inline std::vector<float> get_f32_vec(std::ifstream& is) {
  const std::uint32_t n = get_u32(is);
  std::vector<float> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, PredictionModel<float>& model,
                            const TrainConfig& tc, const ModalityStats<float>& stats) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path.string());
  using namespace detail;
  os.write(kCkptMagic, 4);
  put_u32(os, kCkptVersion);

  const ModelConfig& c = model.config();
  for (int v : {c.dims.frame_h, c.dims.frame_w, c.dims.haptic_channels, c.dims.haptic_steps,
                c.dims.audio_bins, c.dims.audio_steps, c.dims.vibro_bins, c.dims.vibro_steps,
                c.dims.audio_window, c.dims.audio_hop, c.dims.vibro_window, c.dims.vibro_hop,
                c.vision_channels, c.haptic_channels, c.audio_channels, c.vibro_channels,
                c.fused_channels, c.n_kernels, c.cdna_kernel})
    put_u32(os, static_cast<std::uint32_t>(v));

  put_u32(os, model.mask().encode());
  put_u64(os, model.seed());

  put_f64(os, tc.lr);
  put_u32(os, static_cast<std::uint32_t>(tc.epochs));
  put_u32(os, static_cast<std::uint32_t>(tc.batch));
  put_u32(os, static_cast<std::uint32_t>(tc.context));
  put_u64(os, tc.seed);
  put_f64(os, static_cast<double>(tc.weights.vision));
  put_f64(os, static_cast<double>(tc.weights.haptic));
  put_f64(os, static_cast<double>(tc.weights.audio));
  put_f64(os, static_cast<double>(tc.weights.vibro));
  put_u32(os, static_cast<std::uint32_t>(tc.forcing));
  put_f64(os, tc.grad_clip);

  put_u32(os, stats.empty() ? 0u : 1u);
  if (!stats.empty()) {
    put_f32_vec(os, stats.haptic_mean);
    put_f32_vec(os, stats.haptic_std);
    put_f32_vec(os, stats.audio_mean);
    put_f32_vec(os, stats.audio_std);
    put_f32_vec(os, stats.vibro_mean);
    put_f32_vec(os, stats.vibro_std);
  }

  auto& params = model.params();
  put_u32(os, static_cast<std::uint32_t>(params.size()));
  for (auto& [name, p] : params) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(p.ndim()));
    for (int d = 0; d < p.ndim(); ++d) put_u32(os, static_cast<std::uint32_t>(p.dim(d)));
    os.write(reinterpret_cast<const char*>(p.data()),
             static_cast<std::streamsize>(p.numel() * sizeof(float)));
  }
  if (!os) throw IoError("short write on checkpoint: " + path.string());
}

struct LoadedModel {
  PredictionModel<float> model;
  TrainConfig train_cfg;
  ModalityStats<float> stats;
};

inline LoadedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  using namespace detail;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
    throw IoError("bad checkpoint magic: " + path.string());
  if (get_u32(is) != kCkptVersion) throw IoError("unsupported checkpoint version: " + path.string());

  ModelConfig c;
  int* fields[] = {&c.dims.frame_h, &c.dims.frame_w, &c.dims.haptic_channels, &c.dims.haptic_steps,
                   &c.dims.audio_bins, &c.dims.audio_steps, &c.dims.vibro_bins, &c.dims.vibro_steps,
                   &c.dims.audio_window, &c.dims.audio_hop, &c.dims.vibro_window, &c.dims.vibro_hop,
                   &c.vision_channels, &c.haptic_channels, &c.audio_channels, &c.vibro_channels,
                   &c.fused_channels, &c.n_kernels, &c.cdna_kernel};
  for (int*& f : fields) *f = static_cast<int>(get_u32(is));

  const ModalityMask mask = ModalityMask::decode(get_u32(is));
  const std::uint64_t seed = get_u64(is);

  TrainConfig tc;
  tc.lr = get_f64(is);
  tc.epochs = static_cast<int>(get_u32(is));
  tc.batch = static_cast<int>(get_u32(is));
  tc.context = static_cast<int>(get_u32(is));
  tc.seed = get_u64(is);
  tc.weights.vision = static_cast<float>(get_f64(is));
  tc.weights.haptic = static_cast<float>(get_f64(is));
  tc.weights.audio = static_cast<float>(get_f64(is));
  tc.weights.vibro = static_cast<float>(get_f64(is));
  tc.forcing = static_cast<TeacherForcing>(get_u32(is));
  tc.grad_clip = get_f64(is);
  tc.mask = mask;

  ModalityStats<float> stats;
  if (get_u32(is) == 1u) {
    stats.haptic_mean = get_f32_vec(is);
    stats.haptic_std = get_f32_vec(is);
    stats.audio_mean = get_f32_vec(is);
    stats.audio_std = get_f32_vec(is);
    stats.vibro_mean = get_f32_vec(is);
    stats.vibro_std = get_f32_vec(is);
  }

  LoadedModel out{PredictionModel<float>(c, mask, seed), tc, stats};
  auto& params = out.model.params();
  const std::uint32_t count = get_u32(is);
  if (count != params.size())
    throw ConfigError("checkpoint parameter count mismatch: " + path.string());
  for (auto& [name, p] : params) {
    const std::uint32_t len = get_u32(is);
    std::string got(len, '\0');
    is.read(got.data(), len);
    if (got != name) throw ConfigError("checkpoint parameter order mismatch at " + got);
    const std::uint32_t nd = get_u32(is);
    Shape shape(nd);
    for (auto& d : shape) d = static_cast<int>(get_u32(is));
    if (shape != p.shape()) throw ConfigError("checkpoint shape mismatch for " + got);
    is.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(p.numel() * sizeof(float)));
  }
  if (!is) throw IoError("truncated checkpoint: " + path.string());
  return out;
}

}  // namespace mmfp
