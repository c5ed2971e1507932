#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mmfp/core/error.hpp"
#include "mmfp/signal/frames.hpp"

// Dataset container: one directory per dataset holding a UTF-8 key=value
// manifest plus one binary record per trial. Records are little-endian
// 32-bit floats behind a fixed header (magic "MMVP"), so generator,
// trainer and evaluator interchange bits exactly.

namespace mmfp {

struct TrialMeta {
  BehaviorId behavior = BehaviorId::kPush;
  int object_id = 0;
  int frames = 0;
  std::string scene;  // generator-provided description, free-form
};

struct Trial {
  SampleQuadruple<float> sample;
  int object_id = 0;
  std::string scene;
};

class Dataset {
 public:
  std::vector<Trial> trials;
  PrepConfig dims;

  int size() const { return static_cast<int>(trials.size()); }

  int num_objects() const {
    int m = 0;
    for (const auto& t : trials) m = std::max(m, t.object_id + 1);
    return m;
  }
};

namespace detail {

constexpr char kMagic[4] = {'M', 'M', 'V', 'P'};
constexpr std::uint32_t kVersion = 1;

inline void write_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32_block(std::ofstream& os, const float* data, std::size_t n) {
  // x86 is little-endian; floats go out verbatim.
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

inline void read_f32_block(std::ifstream& is, float* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

inline void write_frames(std::ofstream& os, const std::vector<Tensor<float>>& frames) {
  for (const auto& f : frames) write_f32_block(os, f.data(), static_cast<std::size_t>(f.numel()));
}

inline std::string trial_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%05d.bin", index);
  return buf;
}

}  // namespace detail

inline void write_trial_record(const std::filesystem::path& path, const Trial& trial,
                               const PrepConfig& dims) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open trial record for writing: " + path.string());
  const auto& s = trial.sample;
  os.write(detail::kMagic, 4);
  detail::write_u32(os, detail::kVersion);
  detail::write_u32(os, static_cast<std::uint32_t>(s.behavior));
  detail::write_u32(os, static_cast<std::uint32_t>(trial.object_id));
  detail::write_u32(os, static_cast<std::uint32_t>(s.frames()));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.frame_h));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.frame_w));
  detail::write_u32(os, 3);
  detail::write_u32(os, static_cast<std::uint32_t>(dims.haptic_channels));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.haptic_steps));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.audio_bins));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.audio_steps));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.vibro_bins));
  detail::write_u32(os, static_cast<std::uint32_t>(dims.vibro_steps));
  detail::write_frames(os, s.vision);
  detail::write_frames(os, s.haptic);
  detail::write_frames(os, s.audio);
  detail::write_frames(os, s.vibro);
  if (!os) throw IoError("short write on trial record: " + path.string());
}

inline Trial read_trial_record(const std::filesystem::path& path, const PrepConfig& dims) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open trial record: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, detail::kMagic, 4) != 0)
    throw IoError("bad magic in trial record: " + path.string());
  if (detail::read_u32(is) != detail::kVersion)
    throw IoError("unsupported record version: " + path.string());
  Trial trial;
  trial.sample.behavior = static_cast<BehaviorId>(detail::read_u32(is));
  trial.object_id = static_cast<int>(detail::read_u32(is));
  const int t_frames = static_cast<int>(detail::read_u32(is));
  const int fh = static_cast<int>(detail::read_u32(is));
  const int fw = static_cast<int>(detail::read_u32(is));
  const int fc = static_cast<int>(detail::read_u32(is));
  const int hd = static_cast<int>(detail::read_u32(is));
  const int hs = static_cast<int>(detail::read_u32(is));
  const int ab = static_cast<int>(detail::read_u32(is));
  const int as = static_cast<int>(detail::read_u32(is));
  const int vb = static_cast<int>(detail::read_u32(is));
  const int vs = static_cast<int>(detail::read_u32(is));
  if (fh != dims.frame_h || fw != dims.frame_w || fc != 3 || hd != dims.haptic_channels ||
      hs != dims.haptic_steps || ab != dims.audio_bins || as != dims.audio_steps ||
      vb != dims.vibro_bins || vs != dims.vibro_steps)
    throw ConfigError("trial record dims do not match manifest: " + path.string());

  auto read_set = [&](int c, int cols) {
    std::vector<Tensor<float>> frames;
    frames.reserve(static_cast<std::size_t>(t_frames));
    for (int t = 0; t < t_frames; ++t) {
      Tensor<float> f = (cols > 0) ? Tensor<float>::zeros({c, cols})
                                   : Tensor<float>::zeros({3, fh, fw});
      detail::read_f32_block(is, f.data(), static_cast<std::size_t>(f.numel()));
      frames.push_back(std::move(f));
    }
    return frames;
  };
  trial.sample.vision = read_set(3, 0);
  trial.sample.haptic = read_set(hd, hs);
  trial.sample.audio = read_set(ab, as);
  trial.sample.vibro = read_set(vb, vs);
  if (!is) throw IoError("truncated trial record: " + path.string());
  return trial;
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream man(dir / "manifest.txt", std::ios::trunc);
  if (!man) throw IoError("cannot write manifest in " + dir.string());
  man << "format=MMVP\n";
  man << "version=" << detail::kVersion << "\n";
  man << "trials=" << ds.size() << "\n";
  man << "vision=" << ds.dims.frame_h << "x" << ds.dims.frame_w << "x3\n";
  man << "haptic=" << ds.dims.haptic_channels << "x" << ds.dims.haptic_steps << "\n";
  man << "audio=" << ds.dims.audio_bins << "x" << ds.dims.audio_steps << "\n";
  man << "vibro=" << ds.dims.vibro_bins << "x" << ds.dims.vibro_steps << "\n";
  man << "behaviors=";
  for (int i = 0; i < kNumBehaviors; ++i)
    man << (i ? "," : "") << behavior_names()[static_cast<std::size_t>(i)];
  man << "\n";
  man << "objects=" << ds.num_objects() << "\n";
  for (int i = 0; i < ds.size(); ++i) {
    const auto& t = ds.trials[static_cast<std::size_t>(i)];
    const std::string file = detail::trial_filename(i);
    man << "trial_" << i << "=" << file << ";behavior=" << to_string(t.sample.behavior)
        << ";object=" << t.object_id << ";frames=" << t.sample.frames();
    if (!t.scene.empty()) man << ";scene=" << t.scene;
    man << "\n";
    write_trial_record(dir / file, t, ds.dims);
  }
  if (!man) throw IoError("short write on manifest in " + dir.string());
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest.txt");
  if (!man) throw IoError("cannot open manifest: " + (dir / "manifest.txt").string());
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> trial_lines;
  std::string line;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed manifest line: " + line);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key.rfind("trial_", 0) == 0)
      trial_lines.emplace_back(key, value);
    else
      kv[key] = value;
  }
  if (kv["format"] != "MMVP") throw IoError("not an MMVP dataset: " + dir.string());

  auto parse_dims = [&](const std::string& key, int& a, int& b) {
    const std::string& v = kv[key];
    const auto x = v.find('x');
    if (x == std::string::npos) throw IoError("malformed manifest dims for " + key);
    a = std::stoi(v.substr(0, x));
    b = std::stoi(v.substr(x + 1));
  };
  Dataset ds;
  parse_dims("vision", ds.dims.frame_h, ds.dims.frame_w);
  parse_dims("haptic", ds.dims.haptic_channels, ds.dims.haptic_steps);
  parse_dims("audio", ds.dims.audio_bins, ds.dims.audio_steps);
  parse_dims("vibro", ds.dims.vibro_bins, ds.dims.vibro_steps);

  const int n = std::stoi(kv["trials"]);
  ds.trials.reserve(static_cast<std::size_t>(n));
  for (const auto& [key, value] : trial_lines) {
    const auto semi = value.find(';');
    const std::string file = value.substr(0, semi);
    Trial t = read_trial_record(dir / file, ds.dims);
    const auto scene_pos = value.find(";scene=");
    if (scene_pos != std::string::npos) t.scene = value.substr(scene_pos + 7);
    ds.trials.push_back(std::move(t));
  }
  if (ds.size() != n)
    throw IoError("manifest declares " + std::to_string(n) + " trials, found " +
                  std::to_string(ds.size()));
  return ds;
}

}  // namespace mmfp
