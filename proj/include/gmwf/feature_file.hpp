// Copyright 2026 The gmwf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gmwf/util.hpp"

namespace gmwf {

inline constexpr std::uint32_t kFeatureFlagHmmResiduals = 1u;

// Per-frame mixture record; components are stored sorted by mean frequency.
struct GmmFrameRecord {
  float gain = 0.0f;
  std::vector<float> weights;
  std::vector<float> means;
  std::vector<float> sigmas;
};

// On-disk analysis result. Magic "GMWF", version 1, little-endian throughout;
// reals are IEEE-754 binary32, counts unsigned 32-bit. encode/decode is the
// identity on this struct, bit-level for every numeric field.
struct FeatureFile {
  std::uint32_t sample_rate = 16000;
  std::uint32_t hop_samples = 80;
  std::uint32_t win_samples = 400;
  std::uint32_t fft_size = 1024;
  std::uint32_t mixture_size = 16;   // K
  std::uint32_t n_states = 2;
  std::uint32_t n_scales = 10;
  std::uint32_t n_frames = 0;
  float scale0_s = 0.02f;            // a_0
  std::uint32_t flags = 0;

  std::vector<GmmFrameRecord> gmm_frames;          // n_frames
  std::vector<float> hmm_trans;                    // n_states^2
  std::vector<float> hmm_means;                    // n_states x (K + 1)
  std::vector<float> hmm_vars;                     // n_states x (K + 1)
  std::vector<std::uint8_t> state_path;            // n_frames
  std::vector<float> hmm_residuals;                // n_frames x (K + 1) when flagged
  std::vector<float> cwt_scales;                   // n_scales
  std::vector<float> cwt_coefficients;             // n_scales x n_frames, row-major
  std::vector<float> cwt_residual;                 // n_frames
  float cwt_mean_level = 0.0f;
  std::vector<float> energy;                       // n_frames, per-frame RMS

  int obs_dim() const { return static_cast<int>(mixture_size) + 1; }
};

namespace detail {

struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    bytes.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f32s(const std::vector<float>& vs) {
    for (float v : vs) f32(v);
  }
};

struct ByteReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;
  std::string block = "header";

  void need(std::size_t n) {
    if (pos + n > size) {
      throw Error("feature file: truncated " + block + " block at byte " + std::to_string(pos));
    }
  }
  std::uint8_t u8() {
    need(1);
    return data[pos++];
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::vector<float> f32s(std::size_t n) {
    need(4 * n);  // bounds before allocation
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f32();
    return out;
  }
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_feature_file(const FeatureFile& f) {
  const std::size_t k = f.mixture_size;
  const std::size_t d = static_cast<std::size_t>(f.obs_dim());
  detail::ByteWriter w;
  w.bytes.push_back('G');
  w.bytes.push_back('M');
  w.bytes.push_back('W');
  w.bytes.push_back('F');
  w.u16(1);
  w.u32(f.sample_rate);
  w.u32(f.hop_samples);
  w.u32(f.win_samples);
  w.u32(f.fft_size);
  w.u32(f.mixture_size);
  w.u32(f.n_states);
  w.u32(f.n_scales);
  w.u32(f.n_frames);
  w.f32(f.scale0_s);
  w.u32(f.flags);

  for (const auto& rec : f.gmm_frames) {
    w.f32(rec.gain);
    for (std::size_t i = 0; i < k; ++i) {
      w.f32(rec.weights[i]);
      w.f32(rec.means[i]);
      w.f32(rec.sigmas[i]);
    }
  }
  w.f32s(f.hmm_trans);
  w.f32s(f.hmm_means);
  w.f32s(f.hmm_vars);
  for (std::uint8_t s : f.state_path) w.bytes.push_back(s);
  if (f.flags & kFeatureFlagHmmResiduals) {
    if (f.hmm_residuals.size() != static_cast<std::size_t>(f.n_frames) * d) {
      throw Error("feature file: residual block size inconsistent with header");
    }
    w.f32s(f.hmm_residuals);
  }
  w.f32s(f.cwt_scales);
  w.f32s(f.cwt_coefficients);
  w.f32s(f.cwt_residual);
  w.f32(f.cwt_mean_level);
  w.f32s(f.energy);
  return w.bytes;
}

inline FeatureFile decode_feature_file(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r{bytes.data(), bytes.size()};
  r.need(6);
  if (std::memcmp(bytes.data(), "GMWF", 4) != 0) throw Error("feature file: bad magic at byte 0");
  r.pos = 4;
  const std::uint16_t version = r.u16();
  if (version != 1) throw Error("feature file: unsupported version " + std::to_string(version));

  FeatureFile f;
  f.sample_rate = r.u32();
  f.hop_samples = r.u32();
  f.win_samples = r.u32();
  f.fft_size = r.u32();
  f.mixture_size = r.u32();
  f.n_states = r.u32();
  f.n_scales = r.u32();
  f.n_frames = r.u32();
  f.scale0_s = r.f32();
  f.flags = r.u32();
  if (f.mixture_size < 1 || f.n_states < 1 || f.n_states > 255 || f.n_scales < 1) {
    throw Error("feature file: implausible header counts at byte 6");
  }

  const std::size_t k = f.mixture_size;
  const std::size_t d = static_cast<std::size_t>(f.obs_dim());
  const std::size_t t = f.n_frames;
  const std::size_t n = f.n_states;

  r.block = "gmm";
  r.need(t * (1 + 3 * k) * 4);  // bounds before allocation
  f.gmm_frames.resize(t);
  for (std::size_t fr = 0; fr < t; ++fr) {
    auto& rec = f.gmm_frames[fr];
    rec.gain = r.f32();
    rec.weights.resize(k);
    rec.means.resize(k);
    rec.sigmas.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      rec.weights[i] = r.f32();
      rec.means[i] = r.f32();
      rec.sigmas[i] = r.f32();
    }
  }
  r.block = "hmm";
  f.hmm_trans = r.f32s(n * n);
  f.hmm_means = r.f32s(n * d);
  f.hmm_vars = r.f32s(n * d);
  r.need(t);
  f.state_path.resize(t);
  for (std::size_t i = 0; i < t; ++i) f.state_path[i] = r.u8();
  if (f.flags & kFeatureFlagHmmResiduals) f.hmm_residuals = r.f32s(t * d);
  r.block = "cwt";
  f.cwt_scales = r.f32s(f.n_scales);
  f.cwt_coefficients = r.f32s(static_cast<std::size_t>(f.n_scales) * t);
  f.cwt_residual = r.f32s(t);
  f.cwt_mean_level = r.f32();
  r.block = "energy";
  f.energy = r.f32s(t);

  if (r.pos != bytes.size()) {
    throw Error("feature file: " + std::to_string(bytes.size() - r.pos) + " trailing bytes at byte " +
                std::to_string(r.pos));
  }
  return f;
}

// atomic: write to a temporary and rename into place
inline void write_feature_file(const FeatureFile& f, const std::string& path) {
  const auto bytes = encode_feature_file(f);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write feature file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("short write for feature file: " + path);
    }
  }
  std::filesystem::rename(tmp, path);
}

inline FeatureFile read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_file(bytes);
}

}  // namespace gmwf
