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
#include <complex>
#include <vector>

#include "gmwf/dsp.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

// Floor applied to every envelope bin; keeps log and division well defined.
inline constexpr double kEnvelopeFloor = 1e-9;

inline constexpr double kF0Min = 50.0;
inline constexpr double kF0Max = 500.0;

// Linear-magnitude envelope on fft_size/2 + 1 bins spaced bin_hz apart.
struct SpectralEnvelope {
  std::vector<double> values;
  double bin_hz = 16000.0 / 1024.0;

  int n_bins() const { return static_cast<int>(values.size()); }
  double nyquist_hz() const { return bin_hz * static_cast<double>(n_bins() - 1); }
};

// Cepstral coefficients c(0..M) on the warped frequency axis.
struct MelCepstrum {
  std::vector<double> coeffs;
  int order = 24;
};

// Hann-windowed magnitude of the half spectrum (fft_size/2 + 1 bins).
inline std::vector<double> magnitude_spectrum(const std::vector<double>& frame, int fft_size) {
  if (!is_power_of_two(fft_size)) throw Error("fft size must be a power of two");
  if (fft_size < static_cast<int>(frame.size())) throw Error("fft size smaller than window length");
  const std::vector<double> win = hann_window(static_cast<int>(frame.size()));
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * win[i];
  const auto spec = fft_real(x, fft_size);
  std::vector<double> mag(static_cast<std::size_t>(fft_size / 2 + 1));
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spec[k]);
  return mag;
}

namespace detail {

// Real cepstrum of the log envelope: c[n] with L(w_k) = sum_n c_sym[n] cos(..),
// computed on the even symmetric extension of the half spectrum.
inline std::vector<double> log_envelope_cepstrum(const std::vector<double>& values) {
  const int n_bins = static_cast<int>(values.size());
  const int fft_size = 2 * (n_bins - 1);
  if (!is_power_of_two(fft_size)) throw Error("envelope bin count must be fft/2 + 1 with fft a power of two");
  std::vector<std::complex<double>> a(static_cast<std::size_t>(fft_size));
  for (int k = 0; k < fft_size; ++k) {
    const int bin = k <= fft_size / 2 ? k : fft_size - k;
    a[static_cast<std::size_t>(k)] = {std::log(std::max(values[static_cast<std::size_t>(bin)], kEnvelopeFloor)), 0.0};
  }
  fft_inplace(a, true);
  std::vector<double> c(static_cast<std::size_t>(fft_size));
  for (int n = 0; n < fft_size; ++n) c[static_cast<std::size_t>(n)] = a[static_cast<std::size_t>(n)].real();
  return c;
}

inline std::vector<double> cepstrum_to_log_envelope(const std::vector<double>& c) {
  const int fft_size = static_cast<int>(c.size());
  std::vector<std::complex<double>> a(static_cast<std::size_t>(fft_size));
  for (int n = 0; n < fft_size; ++n) a[static_cast<std::size_t>(n)] = {c[static_cast<std::size_t>(n)], 0.0};
  fft_inplace(a, false);
  std::vector<double> log_env(static_cast<std::size_t>(fft_size / 2 + 1));
  for (std::size_t k = 0; k < log_env.size(); ++k) log_env[k] = a[k].real();
  return log_env;
}

// Oppenheim frequency transform: maps the one-sided cepstral series
// sum_n c1[n] cos(n w) onto the all-pass warped axis, returning c2 such that
// the same curve equals sum_m c2[m] cos(m lambda(w)).
inline std::vector<double> freqt(const std::vector<double>& c1, int m2, double alpha) {
  const int m1 = static_cast<int>(c1.size()) - 1;
  const double b = 1.0 - alpha * alpha;
  std::vector<double> g(static_cast<std::size_t>(m2) + 1, 0.0);
  std::vector<double> d(static_cast<std::size_t>(m2) + 1, 0.0);
  for (int k = m1; k >= 0; --k) {
    d = g;
    g[0] = c1[static_cast<std::size_t>(k)] + alpha * d[0];
    if (m2 >= 1) g[1] = b * d[0] + alpha * d[1];
    for (int j = 2; j <= m2; ++j) {
      g[static_cast<std::size_t>(j)] =
          d[static_cast<std::size_t>(j - 1)] + alpha * (d[static_cast<std::size_t>(j)] - g[static_cast<std::size_t>(j - 1)]);
    }
  }
  return g;
}

}  // namespace detail

// All-pass warped angular frequency lambda(w) for warp factor alpha;
// monotone [0, pi] -> [0, pi].
inline double warped_frequency(double omega, double alpha) {
  return omega + 2.0 * std::atan(alpha * std::sin(omega) / (1.0 - alpha * std::cos(omega)));
}

// Keeps cepstral coefficients below lifter_order, zeroes the rest, and maps
// back to a (floored) linear-magnitude envelope. Projection: applying it
// twice gives the same result as applying it once.
inline SpectralEnvelope cepstral_lifter(const SpectralEnvelope& envelope, int lifter_order) {
  if (lifter_order < 1) throw Error("lifter order must be >= 1");
  auto c = detail::log_envelope_cepstrum(envelope.values);
  const int fft_size = static_cast<int>(c.size());
  for (int n = lifter_order; n <= fft_size - lifter_order; ++n) c[static_cast<std::size_t>(n)] = 0.0;
  const auto log_env = detail::cepstrum_to_log_envelope(c);
  SpectralEnvelope out;
  out.bin_hz = envelope.bin_hz;
  out.values.resize(log_env.size());
  for (std::size_t k = 0; k < log_env.size(); ++k) out.values[k] = std::max(std::exp(log_env[k]), kEnvelopeFloor);
  return out;
}

// Smooth spectral envelope from one analysis frame. Three stages: Hann power
// spectrum, rectangular smoothing of width 2 f0 / 3 Hz, and cepstral
// liftering with cutoff at quefrency 0.5 / f0 seconds.
inline SpectralEnvelope estimate_envelope(const std::vector<double>& frame, double f0_hz, int fft_size,
                                          int sample_rate_hz = 16000) {
  const double f0 = std::clamp(f0_hz, kF0Min, kF0Max);
  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fft_size);

  const auto mag = magnitude_spectrum(frame, fft_size);
  const int n_bins = static_cast<int>(mag.size());
  std::vector<double> power(mag.size());
  for (std::size_t k = 0; k < mag.size(); ++k) power[k] = mag[k] * mag[k];

  // rectangular moving average, mirrored at the band edges
  const int hw = std::max(1, static_cast<int>(std::lround(f0 / (3.0 * bin_hz))));
  std::vector<double> smooth(power.size());
  for (int k = 0; k < n_bins; ++k) {
    double acc = 0.0;
    for (int m = -hw; m <= hw; ++m) {
      int idx = k + m;
      if (idx < 0) idx = -idx;
      if (idx >= n_bins) idx = 2 * (n_bins - 1) - idx;
      acc += power[static_cast<std::size_t>(idx)];
    }
    smooth[static_cast<std::size_t>(k)] = acc / static_cast<double>(2 * hw + 1);
  }

  SpectralEnvelope env;
  env.bin_hz = bin_hz;
  env.values.resize(smooth.size());
  for (std::size_t k = 0; k < smooth.size(); ++k) env.values[k] = std::max(std::sqrt(smooth[k]), kEnvelopeFloor);

  const int lifter_order =
      std::clamp(static_cast<int>(std::floor(0.5 * static_cast<double>(sample_rate_hz) / f0)), 1, fft_size / 2);
  return cepstral_lifter(env, lifter_order);
}

// Mel-cepstrum of the log envelope on the bilinear-warped axis. c(0) carries
// the overall log level; scaling the envelope by s shifts c(0) by ln s and
// leaves c(1..M) untouched.
inline MelCepstrum envelope_to_melcepstrum(const SpectralEnvelope& envelope, int order = 24, double warp_alpha = 0.42) {
  if (order < 1) throw Error("mel-cepstrum order must be >= 1");
  const auto c = detail::log_envelope_cepstrum(envelope.values);
  const int half = static_cast<int>(c.size()) / 2;
  std::vector<double> one_sided(static_cast<std::size_t>(half) + 1);
  one_sided[0] = c[0];
  for (int n = 1; n < half; ++n) one_sided[static_cast<std::size_t>(n)] = 2.0 * c[static_cast<std::size_t>(n)];
  one_sided[static_cast<std::size_t>(half)] = c[static_cast<std::size_t>(half)];

  MelCepstrum mc;
  mc.order = order;
  mc.coeffs = detail::freqt(one_sided, order, warp_alpha);
  for (double v : mc.coeffs) {
    if (!std::isfinite(v)) throw Error("non-finite mel-cepstrum coefficient");
  }
  return mc;
}

}  // namespace gmwf
