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
#include <vector>

#include "gmwf/audio_io.hpp"
#include "gmwf/spectral.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

// Observation-variance model constants (log-F0 units).
inline constexpr double kPitchObsVarScale = 1.0;   // v0
inline constexpr double kPitchObsVarFloor = 1e-4;  // v_floor
inline constexpr double kPitchProcessNoise = 5e-4; // random-walk q per frame

// Gap-free F0 trajectory; variance is the uncertainty of the log-F0 state.
struct ContF0Track {
  std::vector<double> f0_hz;
  std::vector<double> variance;
  double frame_hop_s = 0.005;
};

// One per-frame pitch observation: estimate, variance of log-F0, and the
// normalized-autocorrelation peak height that produced it.
struct PitchObservation {
  double f0_obs_hz = 0.0;
  double obs_variance = 0.0;
  double clarity = 0.0;
};

// Normalized-autocorrelation pitch candidates. Unvoiced and silent frames get
// clarity near zero and therefore near-maximal variance; there is never a
// missing value. A mild short-lag tilt on the peak score avoids picking the
// double period of strongly periodic frames.
inline std::vector<PitchObservation> estimate_pitch_candidates(const Waveform& w, int hop_samples, int win_samples,
                                                               double f0_min = kF0Min, double f0_max = kF0Max,
                                                               double v0 = kPitchObsVarScale,
                                                               double v_floor = kPitchObsVarFloor,
                                                               int n_threads = 1) {
  const FrameSequence frames = frame_signal(w, hop_samples, win_samples);
  const double fs = static_cast<double>(w.sample_rate_hz);
  const int lag_min = std::max(2, static_cast<int>(std::ceil(fs / f0_max)));
  const int lag_max = std::min(win_samples - 2, static_cast<int>(std::floor(fs / f0_min)));
  if (lag_max <= lag_min) throw Error("pitch range unresolvable at this window length");
  const double fallback_f0 = std::sqrt(f0_min * f0_max);

  std::vector<PitchObservation> out(frames.frames.size());
  parallel_for(frames.frames.size(), n_threads, [&](std::size_t fi) {
    const auto& x = frames.frames[fi];
    const int n = static_cast<int>(x.size());

    std::vector<double> r(static_cast<std::size_t>(lag_max) + 1, 0.0);
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      for (int t = 0; t + lag < n; ++t) {
        num += x[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t + lag)];
        e0 += x[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t)];
        e1 += x[static_cast<std::size_t>(t + lag)] * x[static_cast<std::size_t>(t + lag)];
      }
      const double denom = std::sqrt(e0 * e1);
      r[static_cast<std::size_t>(lag)] = denom > 1e-20 ? num / denom : 0.0;
    }

    int best_lag = lag_min;
    double best_score = -2.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const double tilt = 1.0 - 0.05 * static_cast<double>(lag - lag_min) / static_cast<double>(lag_max - lag_min);
      const double score = r[static_cast<std::size_t>(lag)] * tilt;
      if (score > best_score) {
        best_score = score;
        best_lag = lag;
      }
    }

    // parabolic refinement of the raw autocorrelation around the peak
    double lag_hat = static_cast<double>(best_lag);
    double peak = r[static_cast<std::size_t>(best_lag)];
    if (best_lag > lag_min && best_lag < lag_max) {
      const double ym = r[static_cast<std::size_t>(best_lag - 1)];
      const double y0 = r[static_cast<std::size_t>(best_lag)];
      const double yp = r[static_cast<std::size_t>(best_lag + 1)];
      const double denom = ym - 2.0 * y0 + yp;
      if (std::abs(denom) > 1e-20) {
        const double shift = std::clamp(0.5 * (ym - yp) / denom, -1.0, 1.0);
        lag_hat += shift;
        peak = y0 - 0.25 * (ym - yp) * shift;
      }
    }

    PitchObservation obs;
    obs.clarity = std::clamp(peak, 0.0, 1.0);
    obs.f0_obs_hz = obs.clarity > 0.0 ? std::clamp(fs / lag_hat, f0_min, f0_max) : fallback_f0;
    obs.obs_variance = v0 * (1.0 - obs.clarity) * (1.0 - obs.clarity) + v_floor;
    out[fi] = obs;
  });
  return out;
}

// Rauch-Tung-Striebel smoother over a random-walk model in log-F0. The state
// prior is diffuse: the filter is started from the first observation.
// Smoothed variance <= filtered variance <= observation variance per frame.
inline ContF0Track kalman_smooth(const std::vector<PitchObservation>& observations,
                                 double process_noise = kPitchProcessNoise, double f0_min = kF0Min,
                                 double f0_max = kF0Max, double frame_hop_s = 0.005,
                                 std::vector<double>* filtered_variance = nullptr) {
  const int T = static_cast<int>(observations.size());
  if (T < 1) throw Error("kalman_smooth: no observations");

  std::vector<double> m(static_cast<std::size_t>(T)), p(static_cast<std::size_t>(T));
  std::vector<double> m_pred(static_cast<std::size_t>(T)), p_pred(static_cast<std::size_t>(T));

  m[0] = std::log(observations[0].f0_obs_hz);
  p[0] = observations[0].obs_variance;
  m_pred[0] = m[0];
  p_pred[0] = p[0];
  for (int t = 1; t < T; ++t) {
    m_pred[static_cast<std::size_t>(t)] = m[static_cast<std::size_t>(t - 1)];
    p_pred[static_cast<std::size_t>(t)] = p[static_cast<std::size_t>(t - 1)] + process_noise;
    const double z = std::log(observations[static_cast<std::size_t>(t)].f0_obs_hz);
    const double rr = observations[static_cast<std::size_t>(t)].obs_variance;
    const double denom = p_pred[static_cast<std::size_t>(t)] + rr;
    const double gain = denom > 0.0 ? p_pred[static_cast<std::size_t>(t)] / denom : 1.0;
    m[static_cast<std::size_t>(t)] = m_pred[static_cast<std::size_t>(t)] + gain * (z - m_pred[static_cast<std::size_t>(t)]);
    p[static_cast<std::size_t>(t)] = (1.0 - gain) * p_pred[static_cast<std::size_t>(t)];
  }
  if (filtered_variance) *filtered_variance = p;

  std::vector<double> xs(static_cast<std::size_t>(T)), vs(static_cast<std::size_t>(T));
  xs[static_cast<std::size_t>(T - 1)] = m[static_cast<std::size_t>(T - 1)];
  vs[static_cast<std::size_t>(T - 1)] = p[static_cast<std::size_t>(T - 1)];
  for (int t = T - 2; t >= 0; --t) {
    const double pp = p_pred[static_cast<std::size_t>(t + 1)];
    const double c = pp > 0.0 ? p[static_cast<std::size_t>(t)] / pp : 0.0;
    xs[static_cast<std::size_t>(t)] =
        m[static_cast<std::size_t>(t)] + c * (xs[static_cast<std::size_t>(t + 1)] - m_pred[static_cast<std::size_t>(t + 1)]);
    vs[static_cast<std::size_t>(t)] =
        p[static_cast<std::size_t>(t)] + c * c * (vs[static_cast<std::size_t>(t + 1)] - pp);
  }

  ContF0Track track;
  track.frame_hop_s = frame_hop_s;
  track.f0_hz.resize(static_cast<std::size_t>(T));
  track.variance.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    track.f0_hz[static_cast<std::size_t>(t)] = std::clamp(std::exp(xs[static_cast<std::size_t>(t)]), f0_min, f0_max);
    track.variance[static_cast<std::size_t>(t)] = std::max(vs[static_cast<std::size_t>(t)], 0.0);
  }
  return track;
}

}  // namespace gmwf
