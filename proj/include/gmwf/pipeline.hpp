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
#include <string>
#include <vector>

#include "gmwf/audio_io.hpp"
#include "gmwf/cont_f0.hpp"
#include "gmwf/cwt_f0.hpp"
#include "gmwf/feature_file.hpp"
#include "gmwf/gmm_envelope.hpp"
#include "gmwf/hmm.hpp"
#include "gmwf/metrics.hpp"
#include "gmwf/spectral.hpp"
#include "gmwf/synthesis.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

struct AnalyzeOptions {
  int mixture_size = 16;   // K
  int n_states = 2;
  int n_scales = 10;
  double scale0_s = 0.02;  // a_0
  int fft_size = 1024;
  int hop_samples = 80;
  int win_samples = 400;
  double process_noise = kPitchProcessNoise;
  double pitch_v0 = kPitchObsVarScale;
  double pitch_v_floor = kPitchObsVarFloor;
  int n_threads = 1;
};

inline void require_16k_mono(const Waveform& w) {
  if (w.sample_rate_hz != 16000) {
    throw Error("expected 16 kHz input, got " + std::to_string(w.sample_rate_hz) +
                " Hz (resampling is out of scope)");
  }
  if (w.samples.empty()) throw Error("empty waveform");
}

// Full analysis: framing, pitch candidates, Kalman smoothing, per-frame
// envelope estimation and mixture fitting, HMM reduction over the mixture
// features, and the wavelet decomposition of the smoothed log-F0.
inline FeatureFile analyze(const Waveform& w, const AnalyzeOptions& opt = {}) {
  require_16k_mono(w);
  if (opt.mixture_size < 1) throw Error("analyze: mixture size must be >= 1");
  if (opt.n_states < 1 || opt.n_states > 255) throw Error("analyze: state count must be in [1, 255]");
  if (opt.fft_size < opt.win_samples || !is_power_of_two(opt.fft_size)) {
    throw Error("analyze: fft size must be a power of two >= window length");
  }

  const FrameSequence frames = frame_signal(w, opt.hop_samples, opt.win_samples);
  const std::size_t n_frames = frames.frames.size();
  const double hop_s = static_cast<double>(opt.hop_samples) / static_cast<double>(w.sample_rate_hz);

  const auto pitch_obs =
      estimate_pitch_candidates(w, opt.hop_samples, opt.win_samples, kF0Min, kF0Max, opt.pitch_v0,
                                opt.pitch_v_floor, opt.n_threads);
  const ContF0Track track = kalman_smooth(pitch_obs, opt.process_noise, kF0Min, kF0Max, hop_s);

  std::vector<GmmEnvelope> mixtures(n_frames);
  std::vector<double> energy(n_frames);
  parallel_for(n_frames, opt.n_threads, [&](std::size_t t) {
    const auto& frame = frames.frames[t];
    double acc = 0.0;
    for (double v : frame) acc += v * v;
    energy[t] = std::sqrt(acc / static_cast<double>(frame.size()));

    const SpectralEnvelope env =
        estimate_envelope(frame, track.f0_hz[t], opt.fft_size, w.sample_rate_hz);
    mixtures[t] = fit_gmm(env, opt.mixture_size);
  });

  // HMM over the per-frame (gain, weights) feature vectors
  const int d = opt.mixture_size + 1;
  ObservationSequence obs;
  obs.vectors.assign(n_frames, std::vector<double>(static_cast<std::size_t>(d)));
  for (std::size_t t = 0; t < n_frames; ++t) {
    obs.vectors[t][0] = mixtures[t].gain;
    for (int k = 0; k < opt.mixture_size; ++k) {
      obs.vectors[t][static_cast<std::size_t>(k + 1)] = mixtures[t].weights[static_cast<std::size_t>(k)];
    }
  }
  const ReduceRestoreResult rr = reduce_restore(obs, opt.n_states);

  std::vector<double> logf0(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) logf0[t] = std::log(track.f0_hz[t]);
  const CwtDecomposition cwt =
      cwt_decompose(logf0, hop_s, dyadic_scales(opt.scale0_s, opt.n_scales), opt.n_threads);

  FeatureFile f;
  f.sample_rate = static_cast<std::uint32_t>(w.sample_rate_hz);
  f.hop_samples = static_cast<std::uint32_t>(opt.hop_samples);
  f.win_samples = static_cast<std::uint32_t>(opt.win_samples);
  f.fft_size = static_cast<std::uint32_t>(opt.fft_size);
  f.mixture_size = static_cast<std::uint32_t>(opt.mixture_size);
  f.n_states = static_cast<std::uint32_t>(opt.n_states);
  f.n_scales = static_cast<std::uint32_t>(opt.n_scales);
  f.n_frames = static_cast<std::uint32_t>(n_frames);
  f.scale0_s = static_cast<float>(opt.scale0_s);
  f.flags = kFeatureFlagHmmResiduals;

  f.gmm_frames.resize(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    auto& rec = f.gmm_frames[t];
    rec.gain = static_cast<float>(mixtures[t].gain);
    rec.weights.resize(static_cast<std::size_t>(opt.mixture_size));
    rec.means.resize(static_cast<std::size_t>(opt.mixture_size));
    rec.sigmas.resize(static_cast<std::size_t>(opt.mixture_size));
    for (int k = 0; k < opt.mixture_size; ++k) {
      rec.weights[static_cast<std::size_t>(k)] = static_cast<float>(mixtures[t].weights[static_cast<std::size_t>(k)]);
      rec.means[static_cast<std::size_t>(k)] = static_cast<float>(mixtures[t].means[static_cast<std::size_t>(k)]);
      rec.sigmas[static_cast<std::size_t>(k)] = static_cast<float>(mixtures[t].sigmas[static_cast<std::size_t>(k)]);
    }
  }

  f.hmm_trans.resize(static_cast<std::size_t>(opt.n_states) * static_cast<std::size_t>(opt.n_states));
  for (std::size_t i = 0; i < f.hmm_trans.size(); ++i) f.hmm_trans[i] = static_cast<float>(rr.model.trans[i]);
  f.hmm_means.resize(static_cast<std::size_t>(opt.n_states) * static_cast<std::size_t>(d));
  f.hmm_vars.resize(f.hmm_means.size());
  for (int i = 0; i < opt.n_states; ++i) {
    for (int k = 0; k < d; ++k) {
      f.hmm_means[static_cast<std::size_t>(i * d + k)] = static_cast<float>(rr.model.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      f.hmm_vars[static_cast<std::size_t>(i * d + k)] = static_cast<float>(rr.model.vars[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
  }
  f.state_path.resize(n_frames);
  f.hmm_residuals.resize(n_frames * static_cast<std::size_t>(d));
  for (std::size_t t = 0; t < n_frames; ++t) {
    f.state_path[t] = static_cast<std::uint8_t>(rr.state_path[t]);
    for (int k = 0; k < d; ++k) {
      f.hmm_residuals[t * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
          static_cast<float>(obs.vectors[t][static_cast<std::size_t>(k)] - rr.restored.vectors[t][static_cast<std::size_t>(k)]);
    }
  }

  f.cwt_scales.resize(cwt.scales.size());
  for (std::size_t i = 0; i < cwt.scales.size(); ++i) f.cwt_scales[i] = static_cast<float>(cwt.scales[i]);
  f.cwt_coefficients.resize(cwt.scales.size() * n_frames);
  for (std::size_t i = 0; i < cwt.scales.size(); ++i) {
    for (std::size_t b = 0; b < n_frames; ++b) {
      f.cwt_coefficients[i * n_frames + b] = static_cast<float>(cwt.coefficients[i][b]);
    }
  }
  f.cwt_residual.resize(n_frames);
  // the stored residual also absorbs the float quantization of the
  // coefficients, so file-level reconstruction stays exact
  {
    CwtDecomposition quantized = cwt;
    for (std::size_t i = 0; i < cwt.scales.size(); ++i) {
      for (std::size_t b = 0; b < n_frames; ++b) {
        quantized.coefficients[i][b] = static_cast<double>(f.cwt_coefficients[i * n_frames + b]);
      }
    }
    quantized.residual.assign(n_frames, 0.0);
    const auto partial = cwt_reconstruct(quantized, false);
    f.cwt_mean_level = static_cast<float>(cwt.mean_level);
    for (std::size_t b = 0; b < n_frames; ++b) {
      const double target = logf0[b];
      f.cwt_residual[b] = static_cast<float>(target - (partial[b] - cwt.mean_level + static_cast<double>(f.cwt_mean_level)));
    }
  }

  f.energy.resize(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) f.energy[t] = static_cast<float>(energy[t]);
  return f;
}

// Mel-cepstra of a waveform through the standard front end (pitch tracking,
// envelope estimation, warping).
inline std::vector<MelCepstrum> melcepstra_for_waveform(const Waveform& w, int order = 24, double warp_alpha = 0.42,
                                                        int fft_size = 1024, int hop = 80, int win = 400,
                                                        int n_threads = 1) {
  require_16k_mono(w);
  const FrameSequence frames = frame_signal(w, hop, win);
  const auto pitch_obs = estimate_pitch_candidates(w, hop, win);
  const double hop_s = static_cast<double>(hop) / static_cast<double>(w.sample_rate_hz);
  const ContF0Track track = kalman_smooth(pitch_obs, kPitchProcessNoise, kF0Min, kF0Max, hop_s);

  std::vector<MelCepstrum> out(frames.frames.size());
  parallel_for(frames.frames.size(), n_threads, [&](std::size_t t) {
    const SpectralEnvelope env = estimate_envelope(frames.frames[t], track.f0_hz[t], fft_size, w.sample_rate_hz);
    out[t] = envelope_to_melcepstrum(env, order, warp_alpha);
  });
  return out;
}

// MCD between two waveforms of (near) equal duration; both must share the
// analysis framing, so mismatches beyond one hop are an error (no DTW).
inline McdReport mcd_between_waveforms(const Waveform& ref, const Waveform& test, int order = 24,
                                       int fft_size = 1024, int hop = 80, int win = 400, int n_threads = 1) {
  const long diff = std::labs(static_cast<long>(ref.samples.size()) - static_cast<long>(test.samples.size()));
  if (diff > hop) {
    throw Error("duration mismatch beyond one frame hop (" + std::to_string(diff) + " samples); no time warping");
  }
  auto c_ref = melcepstra_for_waveform(ref, order, 0.42, fft_size, hop, win, n_threads);
  auto c_test = melcepstra_for_waveform(test, order, 0.42, fft_size, hop, win, n_threads);
  const std::size_t n = std::min(c_ref.size(), c_test.size());
  c_ref.resize(n);
  c_test.resize(n);
  return mcd(c_ref, c_test);
}

struct CopySynthResult {
  FeatureFile features;
  Waveform output;
  McdReport report;
};

// analyze -> (optional anchor distortion) -> synthesize -> MCD against the
// input's own mel-cepstra
inline CopySynthResult copy_synthesis(const Waveform& w, bool anchor = false, const AnalyzeOptions& aopt = {},
                                      SynthOptions sopt = {}) {
  CopySynthResult res;
  res.features = analyze(w, aopt);
  if (anchor) res.features = apply_anchor_distortion(res.features);
  sopt.n_threads = aopt.n_threads;
  res.output = synthesize(res.features, sopt);
  res.report = mcd_between_waveforms(w, res.output, 24, aopt.fft_size, aopt.hop_samples, aopt.win_samples,
                                     aopt.n_threads);
  return res;
}

}  // namespace gmwf
