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

#include "gmwf/audio_io.hpp"
#include "gmwf/cont_f0.hpp"
#include "gmwf/cwt_f0.hpp"
#include "gmwf/dsp.hpp"
#include "gmwf/feature_file.hpp"
#include "gmwf/gmm_envelope.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

inline constexpr double kOutputPeak = 0.95;

// Inputs for excitation generation. Pulses below voicing_split_hz, seeded
// noise above; per-frame unit RMS scaled by frame_gains when present.
struct ExcitationPlan {
  ContF0Track f0_track;
  double voicing_split_hz = 4000.0;
  std::uint64_t noise_seed = 42;
  std::vector<double> frame_gains;  // optional; empty means unit RMS
  int hop_samples = 80;
  int win_samples = 400;
};

struct SynthOptions {
  std::uint64_t noise_seed = 42;
  double voicing_split_hz = 4000.0;
  bool include_f0_residual = true;
  bool hmm_restore = false;
  double f0_scale = 1.0;
  int n_threads = 1;
};

namespace detail {

// zero-phase brickwall band extraction by DFT masking (keep_low selects bins
// strictly below cutoff_hz, the complement keeps the rest)
inline std::vector<double> brickwall_band(const std::vector<double>& x, double cutoff_hz, int sample_rate,
                                          bool keep_low) {
  int nfft = 1;
  while (nfft < static_cast<int>(x.size())) nfft <<= 1;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(nfft), {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) spec[i] = {x[i], 0.0};
  fft_inplace(spec, false);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);
  for (int k = 0; k < nfft; ++k) {
    const int sym = k <= nfft / 2 ? k : nfft - k;
    const bool low = static_cast<double>(sym) * bin_hz < cutoff_hz;
    if (low != keep_low) spec[static_cast<std::size_t>(k)] = {0.0, 0.0};
  }
  fft_inplace(spec, true);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec[i].real();
  return out;
}

// fraction of the spectrum kept by the high band; the expected power of
// unit-variance white noise after the mask
inline double high_band_power_fraction(std::size_t n_samples, double cutoff_hz, int sample_rate) {
  int nfft = 1;
  while (nfft < static_cast<int>(n_samples)) nfft <<= 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);
  int kept = 0;
  for (int k = 0; k < nfft; ++k) {
    const int sym = k <= nfft / 2 ? k : nfft - k;
    if (static_cast<double>(sym) * bin_hz >= cutoff_hz) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(nfft);
}

}  // namespace detail

// Mixed excitation: an impulse train placed by a continuous phase accumulator
// (no cumulative rounding drift) below the voicing split, seeded white noise
// above, combined through complementary zero-phase brickwall filters. Pulse
// height sqrt(fs / f0) matches the average spectral density of the two bands.
// Frame scaling uses the deterministic pulse band plus the expected noise
// power, so the voiced band does not depend on the noise seed.
inline std::vector<double> build_excitation(const ExcitationPlan& plan, std::size_t n_samples, int sample_rate) {
  if (plan.f0_track.f0_hz.empty()) throw Error("build_excitation: empty f0 track");
  const double fs = static_cast<double>(sample_rate);
  const int hop = plan.hop_samples;
  const std::size_t n_frames = plan.f0_track.f0_hz.size();

  auto f0_at = [&](std::size_t s) {
    const std::size_t frame = std::min(s / static_cast<std::size_t>(hop), n_frames - 1);
    return plan.f0_track.f0_hz[frame];
  };

  std::vector<double> pulses(n_samples, 0.0);
  double phase = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double f0 = f0_at(s);
    phase += f0 / fs;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulses[s] = std::sqrt(fs / f0);
    }
  }

  const double split = std::clamp(plan.voicing_split_hz, 0.0, fs / 2.0);
  std::vector<double> voiced_band;   // deterministic part
  std::vector<double> noise_band;    // seed-dependent part
  double noise_expected_power = 0.0;
  if (split <= 0.0) {
    voiced_band.assign(n_samples, 0.0);
    noise_expected_power = 1.0;
  } else if (split >= fs / 2.0) {
    voiced_band = pulses;
  } else {
    voiced_band = detail::brickwall_band(pulses, split, sample_rate, true);
    noise_expected_power = detail::high_band_power_fraction(n_samples, split, sample_rate);
  }
  if (noise_expected_power > 0.0) {
    std::vector<double> noise(n_samples);
    Rng rng(plan.noise_seed);
    for (std::size_t s = 0; s < n_samples; ++s) noise[s] = rng.next_gaussian();
    noise_band = split <= 0.0 ? std::move(noise) : detail::brickwall_band(noise, split, sample_rate, false);
  } else {
    noise_band.assign(n_samples, 0.0);
  }

  std::vector<double> excitation(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) excitation[s] = voiced_band[s] + noise_band[s];

  // per-frame scaling toward unit RMS (times the frame gain when given); the
  // frame RMS estimate is deterministic by construction
  const int win = plan.win_samples;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(hop);
    if (start >= n_samples) break;
    double acc = 0.0;
    for (int j = 0; j < win; ++j) {
      const std::size_t idx = start + static_cast<std::size_t>(j);
      if (idx < n_samples) acc += voiced_band[idx] * voiced_band[idx];
    }
    const double rms = std::sqrt(acc / static_cast<double>(win) + noise_expected_power);
    const double gain = plan.frame_gains.empty() ? 1.0 : plan.frame_gains[std::min(t, plan.frame_gains.size() - 1)];
    const double scale = rms > 1e-12 ? gain / rms : 0.0;
    const std::size_t stop = t + 1 == n_frames ? n_samples : std::min(n_samples, start + static_cast<std::size_t>(hop));
    for (std::size_t idx = start; idx < stop; ++idx) excitation[idx] *= scale;
  }
  return excitation;
}

// Per-frame zero-phase magnitude filtering with Hann overlap-add. The output
// is divided by the accumulated window sum; if the peak exceeds 0.95 the
// whole signal is normalized down to that ceiling.
inline Waveform envelope_filter(const std::vector<double>& excitation,
                                const std::vector<SpectralEnvelope>& envelopes, int hop, int win,
                                int sample_rate = 16000, int n_threads = 1) {
  if (envelopes.empty()) throw Error("envelope_filter: no envelopes");
  const std::size_t n_frames = envelopes.size();
  const std::size_t expected = (n_frames - 1) * static_cast<std::size_t>(hop) + static_cast<std::size_t>(win);
  if (excitation.size() != expected) throw Error("envelope_filter: frame count mismatch with excitation length");
  const int fft_size = 2 * (envelopes[0].n_bins() - 1);
  if (!is_power_of_two(fft_size) || fft_size < win) throw Error("envelope_filter: bad envelope bin count");

  const std::vector<double> window = hann_window(win);
  const int margin = fft_size;
  std::vector<double> ola(excitation.size() + 2 * static_cast<std::size_t>(margin), 0.0);
  std::vector<double> wsum(excitation.size(), 0.0);

  std::vector<std::vector<double>> frame_out(n_frames);
  parallel_for(n_frames, n_threads, [&](std::size_t t) {
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size), {0.0, 0.0});
    const std::size_t start = t * static_cast<std::size_t>(hop);
    for (int j = 0; j < win; ++j) {
      buf[static_cast<std::size_t>(j)] = {excitation[start + static_cast<std::size_t>(j)] * window[static_cast<std::size_t>(j)], 0.0};
    }
    fft_inplace(buf, false);
    const auto& env = envelopes[t].values;
    for (int k = 0; k < fft_size; ++k) {
      const int bin = k <= fft_size / 2 ? k : fft_size - k;
      buf[static_cast<std::size_t>(k)] *= env[static_cast<std::size_t>(bin)];
    }
    fft_inplace(buf, true);
    auto& out = frame_out[t];
    out.resize(static_cast<std::size_t>(fft_size));
    for (int m = 0; m < fft_size; ++m) out[static_cast<std::size_t>(m)] = buf[static_cast<std::size_t>(m)].real();
  });

  for (std::size_t t = 0; t < n_frames; ++t) {
    const long start = static_cast<long>(t) * hop;
    for (int m = 0; m < fft_size; ++m) {
      // the zero-phase response wraps around the FFT buffer; recenter it
      const int signed_m = m <= fft_size / 2 ? m : m - fft_size;
      ola[static_cast<std::size_t>(start + signed_m + margin)] += frame_out[t][static_cast<std::size_t>(m)];
    }
    for (int j = 0; j < win; ++j) {
      wsum[static_cast<std::size_t>(start + j)] += window[static_cast<std::size_t>(j)];
    }
  }

  double wsum_max = 0.0;
  for (double v : wsum) wsum_max = std::max(wsum_max, v);
  const double wsum_floor = std::max(wsum_max, 1.0) * 1e-3;

  Waveform out;
  out.sample_rate_hz = sample_rate;
  out.samples.resize(excitation.size());
  for (std::size_t s = 0; s < excitation.size(); ++s) {
    out.samples[s] = ola[s + static_cast<std::size_t>(margin)] / std::max(wsum[s], wsum_floor);
  }

  // normalize downward only so quiet signals stay quiet
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > kOutputPeak) {
    const double scale = kOutputPeak / peak;
    for (double& v : out.samples) v *= scale;
  }
  return out;
}

namespace detail {

// per-frame mixture parameters for synthesis, either stored or quantized to
// the decoded HMM state (state emission mean for gain and weights, per-state
// average of the stored means/sigmas)
inline std::vector<GmmEnvelope> synthesis_mixtures(const FeatureFile& f, bool hmm_restore) {
  const int k = static_cast<int>(f.mixture_size);
  const std::size_t t = f.n_frames;
  std::vector<GmmEnvelope> out(t);
  if (!hmm_restore) {
    for (std::size_t i = 0; i < t; ++i) {
      const auto& rec = f.gmm_frames[i];
      GmmEnvelope g;
      g.K = k;
      g.gain = rec.gain;
      g.weights.assign(rec.weights.begin(), rec.weights.end());
      g.means.assign(rec.means.begin(), rec.means.end());
      g.sigmas.assign(rec.sigmas.begin(), rec.sigmas.end());
      out[i] = std::move(g);
    }
    return out;
  }

  const int n = static_cast<int>(f.n_states);
  std::vector<std::vector<double>> mean_mu(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::vector<std::vector<double>> mean_sigma(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::vector<double> count(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    const int s = f.state_path[i];
    count[static_cast<std::size_t>(s)] += 1.0;
    for (int c = 0; c < k; ++c) {
      mean_mu[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] += f.gmm_frames[i].means[static_cast<std::size_t>(c)];
      mean_sigma[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] += f.gmm_frames[i].sigmas[static_cast<std::size_t>(c)];
    }
  }
  for (int s = 0; s < n; ++s) {
    if (count[static_cast<std::size_t>(s)] <= 0.0) continue;
    for (int c = 0; c < k; ++c) {
      mean_mu[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] /= count[static_cast<std::size_t>(s)];
      mean_sigma[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] /= count[static_cast<std::size_t>(s)];
    }
  }
  const std::size_t d = static_cast<std::size_t>(f.obs_dim());
  for (std::size_t i = 0; i < t; ++i) {
    const int s = f.state_path[i];
    GmmEnvelope g;
    g.K = k;
    g.gain = std::max(0.0, static_cast<double>(f.hmm_means[static_cast<std::size_t>(s) * d]));
    g.weights.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      g.weights[static_cast<std::size_t>(c)] =
          std::max(0.0, static_cast<double>(f.hmm_means[static_cast<std::size_t>(s) * d + 1 + static_cast<std::size_t>(c)]));
    }
    g.means = mean_mu[static_cast<std::size_t>(s)];
    g.sigmas = mean_sigma[static_cast<std::size_t>(s)];
    out[i] = std::move(g);
  }
  return out;
}

}  // namespace detail

// Reconstructed continuous F0 from the stored wavelet representation.
inline ContF0Track reconstruct_f0(const FeatureFile& f, bool include_residual, double f0_scale = 1.0) {
  CwtDecomposition d;
  d.frame_hop_s = static_cast<double>(f.hop_samples) / static_cast<double>(f.sample_rate);
  d.mean_level = f.cwt_mean_level;
  d.scales.assign(f.cwt_scales.begin(), f.cwt_scales.end());
  d.coefficients.assign(f.n_scales, std::vector<double>(f.n_frames));
  for (std::size_t i = 0; i < f.n_scales; ++i) {
    for (std::size_t b = 0; b < f.n_frames; ++b) {
      d.coefficients[i][b] = f.cwt_coefficients[i * f.n_frames + b];
    }
  }
  d.residual.assign(f.cwt_residual.begin(), f.cwt_residual.end());

  const auto logf0 = cwt_reconstruct(d, include_residual);
  ContF0Track track;
  track.frame_hop_s = d.frame_hop_s;
  track.f0_hz.resize(logf0.size());
  track.variance.assign(logf0.size(), 0.0);
  for (std::size_t i = 0; i < logf0.size(); ++i) {
    track.f0_hz[i] = std::clamp(std::exp(logf0[i]) * f0_scale, kF0Min, kF0Max);
  }
  return track;
}

// Full feature-to-waveform synthesis: mixture envelopes (stored or
// HMM-restored), wavelet-reconstructed F0, pulse/noise excitation, zero-phase
// envelope filtering.
inline Waveform synthesize(const FeatureFile& f, const SynthOptions& options = {}) {
  if (f.n_frames == 0) throw Error("synthesize: feature file has no frames");
  const int hop = static_cast<int>(f.hop_samples);
  const int win = static_cast<int>(f.win_samples);
  const int fft_size = static_cast<int>(f.fft_size);
  const int n_bins = fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(f.sample_rate) / static_cast<double>(fft_size);

  std::vector<double> grid(static_cast<std::size_t>(n_bins));
  for (int j = 0; j < n_bins; ++j) grid[static_cast<std::size_t>(j)] = static_cast<double>(j) * bin_hz;

  const auto mixtures = detail::synthesis_mixtures(f, options.hmm_restore);
  std::vector<SpectralEnvelope> envelopes(f.n_frames);
  parallel_for(f.n_frames, options.n_threads, [&](std::size_t t) {
    SpectralEnvelope env;
    env.bin_hz = bin_hz;
    env.values = gmm_eval(mixtures[t], grid);
    // normalize to unit mean-square response; the frame level comes from the
    // excitation gain track
    double msq = 0.0;
    for (int k = 0; k < fft_size; ++k) {
      const int bin = k <= fft_size / 2 ? k : fft_size - k;
      const double v = env.values[static_cast<std::size_t>(bin)];
      msq += v * v;
    }
    msq /= static_cast<double>(fft_size);
    const double scale = msq > 1e-300 ? 1.0 / std::sqrt(msq) : 0.0;
    for (double& v : env.values) v = std::max(v * scale, kEnvelopeFloor);
    envelopes[t] = std::move(env);
  });

  ExcitationPlan plan;
  plan.f0_track = reconstruct_f0(f, options.include_f0_residual, options.f0_scale);
  plan.voicing_split_hz = options.voicing_split_hz;
  plan.noise_seed = options.noise_seed;
  plan.frame_gains.assign(f.energy.begin(), f.energy.end());
  plan.hop_samples = hop;
  plan.win_samples = win;

  const std::size_t n_samples = (static_cast<std::size_t>(f.n_frames) - 1) * static_cast<std::size_t>(hop) +
                                static_cast<std::size_t>(win);
  const auto excitation = build_excitation(plan, n_samples, static_cast<int>(f.sample_rate));
  return envelope_filter(excitation, envelopes, hop, win, static_cast<int>(f.sample_rate), options.n_threads);
}

// Degraded upper-spectrum reference condition: per frame, the upper mixture
// components (9..16 for K = 16, ceil(K/2)..K otherwise) have weight, mean,
// and sigma each replaced by their average over those components.
inline FeatureFile apply_anchor_distortion(const FeatureFile& f) {
  FeatureFile out = f;
  const int k = static_cast<int>(f.mixture_size);
  const int first = k >= 16 ? 8 : (k + 1) / 2 - 1;  // 0-based index of the first distorted component
  const int last = k >= 16 ? 15 : k - 1;
  if (first >= last) return out;  // nothing to average

  for (auto& rec : out.gmm_frames) {
    float w = 0.0f, mu = 0.0f, sg = 0.0f;
    const float cnt = static_cast<float>(last - first + 1);
    for (int c = first; c <= last; ++c) {
      w += rec.weights[static_cast<std::size_t>(c)];
      mu += rec.means[static_cast<std::size_t>(c)];
      sg += rec.sigmas[static_cast<std::size_t>(c)];
    }
    w /= cnt;
    mu /= cnt;
    sg /= cnt;
    for (int c = first; c <= last; ++c) {
      rec.weights[static_cast<std::size_t>(c)] = w;
      rec.means[static_cast<std::size_t>(c)] = mu;
      rec.sigmas[static_cast<std::size_t>(c)] = sg;
    }
  }
  return out;
}

}  // namespace gmwf
