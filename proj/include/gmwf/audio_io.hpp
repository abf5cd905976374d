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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gmwf/util.hpp"

namespace gmwf {

// Mono waveform, samples normalized to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
};

// Fixed-length analysis windows; frame i starts at sample i * hop_samples.
struct FrameSequence {
  std::vector<std::vector<double>> frames;
  int hop_samples = 80;
  int win_samples = 400;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void append_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void append_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file. Accepts PCM (format 1), 16-bit, mono only; unknown
// chunks are skipped. Samples are decoded as s/32768.
inline Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error("not a wav file: " + path);
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = detail::read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw Error("truncated wav chunk in: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw Error("malformed fmt chunk in: " + path);
      format = detail::read_u16(bytes.data() + body);
      channels = detail::read_u16(bytes.data() + body + 2);
      rate = detail::read_u32(bytes.data() + body + 4);
      bits = detail::read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data_ptr == nullptr) throw Error("missing fmt or data chunk in: " + path);
  if (format != 1) throw Error("unsupported wav encoding (need PCM): " + path);
  if (bits != 16) throw Error("unsupported bit depth (need 16-bit): " + path);
  if (channels != 1) throw Error("unsupported channel count (need mono): " + path);

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  const std::size_t n = data_len / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(detail::read_u16(data_ptr + 2 * i));
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return w;
}

// Writes 16-bit PCM mono. Samples are hard-clipped to [-1, 1] before
// quantization. The file is written to a temporary path and renamed so an
// interrupted write never leaves a partial file behind.
inline void write_wav(const Waveform& w, const std::string& path) {
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw Error("non-finite sample, refusing to write: " + path);
  }
  std::vector<unsigned char> b;
  b.reserve(44 + 2 * w.samples.size());
  const std::uint32_t data_len = static_cast<std::uint32_t>(2 * w.samples.size());
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  detail::append_u32(b, 36 + data_len);
  b.insert(b.end(), {'W', 'A', 'V', 'E'});
  b.insert(b.end(), {'f', 'm', 't', ' '});
  detail::append_u32(b, 16);
  detail::append_u16(b, 1);  // PCM
  detail::append_u16(b, 1);  // mono
  detail::append_u32(b, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::append_u32(b, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  detail::append_u16(b, 2);
  detail::append_u16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  detail::append_u32(b, data_len);
  for (double s : w.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    long q = std::lround(clipped * 32768.0);
    q = std::clamp<long>(q, -32768, 32767);
    detail::append_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write wav file: " + path);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("short write for wav file: " + path);
    }
  }
  std::filesystem::rename(tmp, path);
}

// Number of frames such that every sample is covered by at least one window;
// the tail window is zero-padded.
inline int frame_count(std::size_t n_samples, int hop, int win) {
  if (n_samples <= static_cast<std::size_t>(win)) return 1;
  const std::size_t over = n_samples - static_cast<std::size_t>(win);
  return static_cast<int>((over + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop)) + 1;
}

inline FrameSequence frame_signal(const Waveform& w, int hop_samples, int win_samples) {
  if (hop_samples <= 0 || win_samples <= 0) throw Error("frame hop and window must be positive");
  if (hop_samples > win_samples) throw Error("frame hop must not exceed window length");
  if (w.samples.empty()) throw Error("cannot frame an empty waveform");

  FrameSequence fs;
  fs.hop_samples = hop_samples;
  fs.win_samples = win_samples;
  const int n_frames = frame_count(w.samples.size(), hop_samples, win_samples);
  fs.frames.resize(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) {
    auto& f = fs.frames[static_cast<std::size_t>(i)];
    f.assign(static_cast<std::size_t>(win_samples), 0.0);
    const std::size_t start = static_cast<std::size_t>(i) * static_cast<std::size_t>(hop_samples);
    for (int j = 0; j < win_samples; ++j) {
      const std::size_t idx = start + static_cast<std::size_t>(j);
      if (idx < w.samples.size()) f[static_cast<std::size_t>(j)] = w.samples[idx];
    }
  }
  return fs;
}

}  // namespace gmwf
