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
//
// Deterministic speech-like fixture clips: cascades of formant resonators
// driven by pulse trains (vowels) or noise (fricatives), with a declining F0
// contour, short silences, and a low noise floor. Everything is seeded, so
// the clips are bit-identical across runs.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gmwf/audio_io.hpp"
#include "gmwf/util.hpp"

namespace gmwf::testing {

struct Segment {
  bool voiced = true;
  double duration_s = 0.3;
  double amplitude = 1.0;
  std::vector<double> formants_hz;
  std::vector<double> bandwidths_hz;
};

inline Segment vowel(char which, double duration_s, double amplitude = 1.0) {
  Segment s;
  s.duration_s = duration_s;
  s.amplitude = amplitude;
  switch (which) {
    case 'a': s.formants_hz = {730, 1090, 2440}; s.bandwidths_hz = {90, 110, 170}; break;
    case 'i': s.formants_hz = {270, 2290, 3010}; s.bandwidths_hz = {60, 100, 400}; break;
    case 'u': s.formants_hz = {300, 870, 2240}; s.bandwidths_hz = {60, 80, 140}; break;
    case 'e': s.formants_hz = {530, 1840, 2480}; s.bandwidths_hz = {70, 100, 200}; break;
    default:  s.formants_hz = {570, 840, 2410};  s.bandwidths_hz = {70, 80, 140}; break;  // 'o'
  }
  return s;
}

inline Segment fricative(double duration_s, double amplitude = 0.25) {
  Segment s;
  s.voiced = false;
  s.duration_s = duration_s;
  s.amplitude = amplitude;
  s.formants_hz = {4800};
  s.bandwidths_hz = {1400};
  return s;
}

inline Segment silence(double duration_s) {
  Segment s;
  s.voiced = false;
  s.duration_s = duration_s;
  s.amplitude = 0.0;
  return s;
}

// one two-pole resonator pass, in place
inline void resonate(std::vector<double>& x, double freq_hz, double bw_hz, int fs) {
  const double r = std::exp(-M_PI * bw_hz / static_cast<double>(fs));
  const double c = 2.0 * r * std::cos(2.0 * M_PI * freq_hz / static_cast<double>(fs));
  const double r2 = r * r;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = v + c * y1 - r2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

// Speech-like test clip. f0 declines from f0_start to f0_end across the
// voiced portions; segments get raised-cosine 20 ms edges; a -50 dB noise
// floor runs under everything.
inline Waveform synth_speech_like(const std::vector<Segment>& segments, double f0_start, double f0_end,
                                  std::uint64_t seed, int fs = 16000) {
  double total_s = 0.0;
  for (const auto& s : segments) total_s += s.duration_s;
  const std::size_t n_total = static_cast<std::size_t>(std::lround(total_s * fs));

  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.assign(n_total, 0.0);

  Rng rng(seed);
  double phase = 0.0;
  std::size_t cursor = 0;
  for (const auto& seg : segments) {
    const std::size_t n = static_cast<std::size_t>(std::lround(seg.duration_s * fs));
    std::vector<double> x(n, 0.0);
    if (seg.amplitude > 0.0) {
      if (seg.voiced) {
        for (std::size_t i = 0; i < n; ++i) {
          const double global_frac = static_cast<double>(cursor + i) / static_cast<double>(n_total);
          const double f0 = f0_start + (f0_end - f0_start) * global_frac;
          phase += f0 / fs;
          if (phase >= 1.0) {
            phase -= 1.0;
            x[i] = 1.0;
          }
        }
        // spectral tilt toward a glottal-like source
        double prev = 0.0;
        for (double& v : x) {
          prev = v + 0.94 * prev;
          v = prev * 0.06;
        }
      } else {
        for (double& v : x) v = rng.next_gaussian() * 0.2;
      }
      for (std::size_t fi = 0; fi < seg.formants_hz.size(); ++fi) {
        resonate(x, seg.formants_hz[fi], seg.bandwidths_hz[fi], fs);
      }
      double peak = 0.0;
      for (double v : x) peak = std::max(peak, std::abs(v));
      const double norm = peak > 0.0 ? seg.amplitude / peak : 0.0;
      const std::size_t edge = static_cast<std::size_t>(0.02 * fs);
      for (std::size_t i = 0; i < n; ++i) {
        double envl = 1.0;
        if (i < edge) envl = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / static_cast<double>(edge));
        if (n - 1 - i < edge) {
          envl = std::min(envl, 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(n - 1 - i) / static_cast<double>(edge)));
        }
        x[i] *= norm * envl;
      }
    }
    for (std::size_t i = 0; i < n && cursor + i < n_total; ++i) w.samples[cursor + i] = x[i];
    cursor += n;
  }

  // noise floor about 50 dB below the working level
  for (double& v : w.samples) v += rng.next_gaussian() * 0.003;

  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : w.samples) v *= 0.9 / peak;
  }
  return w;
}

// The three bundled fixture clips used by the end-to-end checks.
inline Waveform speech_fixture(int which) {
  switch (which) {
    case 0:  // lower-pitched speaker
      return synth_speech_like(
          {silence(0.1), vowel('a', 0.35), vowel('i', 0.3), fricative(0.2), vowel('o', 0.35),
           vowel('e', 0.3), fricative(0.15), vowel('u', 0.35), silence(0.1)},
          112.0, 86.0, 0xA5EED001);
    case 1:  // higher-pitched speaker
      return synth_speech_like(
          {silence(0.08), vowel('i', 0.3), vowel('a', 0.35), vowel('e', 0.3), fricative(0.18),
           vowel('u', 0.3), vowel('o', 0.35), fricative(0.15), vowel('a', 0.3), silence(0.08)},
          218.0, 168.0, 0xA5EED002);
    default:  // mid range, fricative heavy
      return synth_speech_like(
          {silence(0.1), vowel('e', 0.3), fricative(0.15), vowel('a', 0.3), fricative(0.2),
           vowel('i', 0.25), vowel('o', 0.3), fricative(0.15), vowel('u', 0.3), fricative(0.12),
           vowel('a', 0.3), silence(0.1)},
          152.0, 118.0, 0xA5EED003);
  }
}

}  // namespace gmwf::testing
