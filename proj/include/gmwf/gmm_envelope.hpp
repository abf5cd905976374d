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
#include <limits>
#include <numeric>
#include <vector>

#include "gmwf/spectral.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

// Lower bound on component standard deviations, in Hz. Stops components from
// collapsing onto single frequency bins.
inline constexpr double kSigmaMinHz = 10.0;

// K-component Gaussian mixture over frequency. The mixture models spectral
// shape; `gain` carries the absolute scale (integral of the envelope).
struct GmmEnvelope {
  int K = 16;
  std::vector<double> weights;  // w_k >= 0
  std::vector<double> means;    // Hz, within [0, Nyquist]
  std::vector<double> sigmas;   // Hz, >= kSigmaMinHz after fitting
  double gain = 0.0;
};

// gain * sum_k w_k N(w; mu_k, sigma_k^2) on an arbitrary frequency grid.
inline std::vector<double> gmm_eval(const GmmEnvelope& params, const std::vector<double>& freq_grid) {
  std::vector<double> out(freq_grid.size(), 0.0);
  for (int k = 0; k < params.K; ++k) {
    const double w = params.weights[static_cast<std::size_t>(k)];
    if (w <= 0.0) continue;
    const double mu = params.means[static_cast<std::size_t>(k)];
    const double sigma = params.sigmas[static_cast<std::size_t>(k)];
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    const double norm = w / (std::sqrt(2.0 * M_PI) * sigma);
    for (std::size_t j = 0; j < freq_grid.size(); ++j) {
      const double d = freq_grid[j] - mu;
      out[j] += norm * std::exp(-d * d * inv_two_var);
    }
  }
  if (params.gain != 1.0) {
    for (double& v : out) v *= params.gain;
  }
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

// Generalized Kullback-Leibler divergence for nonnegative functions,
// sum_w [H ln(H/G) - H + G] with the 0 ln 0 = 0 convention. G is floored at
// kEnvelopeFloor wherever H > 0.
inline double i_divergence(const std::vector<double>& h, const std::vector<double>& g) {
  if (h.size() != g.size()) throw Error("i_divergence: length mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (h[j] > 0.0) {
      const double gj = std::max(g[j], kEnvelopeFloor);
      acc += h[j] * std::log(h[j] / gj) - h[j] + gj;
    } else {
      acc += g[j];
    }
  }
  return acc;
}

// Peak-picking initialization: means at the K largest local maxima (ties
// broken toward lower frequency), weights at the envelope value there,
// sigmas at Nyquist / (2K). Missing peaks fall back to a uniform layout.
inline GmmEnvelope init_gmm(const SpectralEnvelope& envelope, int K) {
  if (K < 1) throw Error("mixture size must be >= 1");
  const auto& v = envelope.values;
  const int n = static_cast<int>(v.size());
  const double nyquist = envelope.nyquist_hz();

  std::vector<int> peaks;
  for (int j = 1; j + 1 < n; ++j) {
    if (v[static_cast<std::size_t>(j)] > v[static_cast<std::size_t>(j - 1)] &&
        v[static_cast<std::size_t>(j)] >= v[static_cast<std::size_t>(j + 1)]) {
      peaks.push_back(j);
    }
  }
  std::sort(peaks.begin(), peaks.end(), [&](int a, int b) {
    if (v[static_cast<std::size_t>(a)] != v[static_cast<std::size_t>(b)]) {
      return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  if (static_cast<int>(peaks.size()) > K) peaks.resize(static_cast<std::size_t>(K));
  std::sort(peaks.begin(), peaks.end());

  GmmEnvelope p;
  p.K = K;
  p.weights.reserve(static_cast<std::size_t>(K));
  p.means.reserve(static_cast<std::size_t>(K));
  p.sigmas.assign(static_cast<std::size_t>(K), nyquist / (2.0 * static_cast<double>(K)));
  p.gain = 1.0;

  for (int idx : peaks) {
    p.means.push_back(static_cast<double>(idx) * envelope.bin_hz);
    p.weights.push_back(v[static_cast<std::size_t>(idx)]);
  }
  const int missing = K - static_cast<int>(peaks.size());
  for (int m = 0; m < missing; ++m) {
    const double mu = nyquist * (static_cast<double>(m) + 0.5) / static_cast<double>(missing);
    const int idx = std::clamp(static_cast<int>(std::lround(mu / envelope.bin_hz)), 0, n - 1);
    p.means.push_back(mu);
    p.weights.push_back(v[static_cast<std::size_t>(idx)]);
  }
  return p;
}

namespace detail {

// Mixture curve on the uniform bin grid with per-component support trimming
// (contributions beyond 8 sigma are dropped).
inline void gmm_curve_on_bins(const GmmEnvelope& p, double bin_hz, std::vector<double>& curve) {
  std::fill(curve.begin(), curve.end(), 0.0);
  const int n = static_cast<int>(curve.size());
  for (int k = 0; k < p.K; ++k) {
    const double w = p.weights[static_cast<std::size_t>(k)];
    if (w <= 0.0) continue;
    const double mu = p.means[static_cast<std::size_t>(k)];
    const double sigma = p.sigmas[static_cast<std::size_t>(k)];
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    const double norm = w / (std::sqrt(2.0 * M_PI) * sigma);
    const int lo = std::max(0, static_cast<int>(std::floor((mu - 8.0 * sigma) / bin_hz)));
    const int hi = std::min(n - 1, static_cast<int>(std::ceil((mu + 8.0 * sigma) / bin_hz)));
    for (int j = lo; j <= hi; ++j) {
      const double d = static_cast<double>(j) * bin_hz - mu;
      curve[static_cast<std::size_t>(j)] += norm * std::exp(-d * d * inv_two_var);
    }
  }
}

inline GmmEnvelope project_gmm(GmmEnvelope p, double nyquist) {
  for (int k = 0; k < p.K; ++k) {
    p.weights[static_cast<std::size_t>(k)] = std::max(p.weights[static_cast<std::size_t>(k)], 0.0);
    p.means[static_cast<std::size_t>(k)] = std::clamp(p.means[static_cast<std::size_t>(k)], 0.0, nyquist);
    p.sigmas[static_cast<std::size_t>(k)] = std::max(p.sigmas[static_cast<std::size_t>(k)], kSigmaMinHz);
  }
  return p;
}

inline void sort_components_by_mean(GmmEnvelope& p) {
  std::vector<int> order(static_cast<std::size_t>(p.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.means[static_cast<std::size_t>(a)] < p.means[static_cast<std::size_t>(b)];
  });
  GmmEnvelope q = p;
  for (int k = 0; k < p.K; ++k) {
    const int src = order[static_cast<std::size_t>(k)];
    q.weights[static_cast<std::size_t>(k)] = p.weights[static_cast<std::size_t>(src)];
    q.means[static_cast<std::size_t>(k)] = p.means[static_cast<std::size_t>(src)];
    q.sigmas[static_cast<std::size_t>(k)] = p.sigmas[static_cast<std::size_t>(src)];
  }
  p = q;
}

}  // namespace detail

// Fits the mixture to the envelope by minimizing the I-divergence with
// multiplicative EM updates on the gain-normalized shape. An update that
// would increase the divergence is damped by half, up to 20 halvings; if it
// still increases, the iterate is kept unchanged and the fit stops. The
// accepted divergence sequence is therefore non-increasing.
inline GmmEnvelope fit_gmm(const SpectralEnvelope& envelope, int K, int max_iters = 200, double tol = 1e-6,
                           std::vector<double>* divergence_trace = nullptr) {
  if (K < 1) throw Error("mixture size must be >= 1");
  const auto& v = envelope.values;
  const int n = static_cast<int>(v.size());
  const double bin_hz = envelope.bin_hz;
  const double nyquist = envelope.nyquist_hz();

  const double vmax = *std::max_element(v.begin(), v.end());
  if (vmax <= kEnvelopeFloor * (1.0 + 1e-6)) {
    // silence: everything at the floor fits a zero-weight mixture, gain 0
    GmmEnvelope p = init_gmm(envelope, K);
    std::fill(p.weights.begin(), p.weights.end(), 0.0);
    p.gain = 0.0;
    detail::sort_components_by_mean(p);
    return p;
  }

  const double gain = std::accumulate(v.begin(), v.end(), 0.0) * bin_hz;
  SpectralEnvelope shape_env;
  shape_env.bin_hz = bin_hz;
  shape_env.values.resize(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) shape_env.values[j] = v[j] / gain;
  const auto& h = shape_env.values;

  GmmEnvelope params = detail::project_gmm(init_gmm(shape_env, K), nyquist);

  std::vector<double> curve(static_cast<std::size_t>(n));
  detail::gmm_curve_on_bins(params, bin_hz, curve);
  double div_prev = i_divergence(h, curve);
  if (divergence_trace) divergence_trace->push_back(div_prev);

  std::vector<double> phi(static_cast<std::size_t>(K) * static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step: per-component densities and their sum
    std::fill(phi.begin(), phi.end(), 0.0);
    std::vector<double> total(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < K; ++k) {
      const double w = params.weights[static_cast<std::size_t>(k)];
      if (w <= 0.0) continue;
      const double mu = params.means[static_cast<std::size_t>(k)];
      const double sigma = params.sigmas[static_cast<std::size_t>(k)];
      const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
      const double norm = w / (std::sqrt(2.0 * M_PI) * sigma);
      const int lo = std::max(0, static_cast<int>(std::floor((mu - 8.0 * sigma) / bin_hz)));
      const int hi = std::min(n - 1, static_cast<int>(std::ceil((mu + 8.0 * sigma) / bin_hz)));
      double* row = &phi[static_cast<std::size_t>(k) * static_cast<std::size_t>(n)];
      for (int j = lo; j <= hi; ++j) {
        const double d = static_cast<double>(j) * bin_hz - mu;
        const double val = norm * std::exp(-d * d * inv_two_var);
        row[j] = val;
        total[static_cast<std::size_t>(j)] += val;
      }
    }

    // M-step: responsibility-weighted mass, mean, and variance per component
    GmmEnvelope cand = params;
    for (int k = 0; k < K; ++k) {
      if (params.weights[static_cast<std::size_t>(k)] <= 0.0) continue;
      const double* row = &phi[static_cast<std::size_t>(k) * static_cast<std::size_t>(n)];
      double s0 = 0.0, s1 = 0.0;
      for (int j = 0; j < n; ++j) {
        if (row[j] <= 0.0) continue;
        const double r = h[static_cast<std::size_t>(j)] * row[j] / std::max(total[static_cast<std::size_t>(j)], 1e-300);
        s0 += r;
        s1 += r * static_cast<double>(j) * bin_hz;
      }
      if (s0 <= 0.0) continue;  // component has no support; leave it as is
      const double mu_new = s1 / s0;
      double s2 = 0.0;
      for (int j = 0; j < n; ++j) {
        if (row[j] <= 0.0) continue;
        const double r = h[static_cast<std::size_t>(j)] * row[j] / std::max(total[static_cast<std::size_t>(j)], 1e-300);
        const double d = static_cast<double>(j) * bin_hz - mu_new;
        s2 += r * d * d;
      }
      cand.weights[static_cast<std::size_t>(k)] = s0 * bin_hz;
      cand.means[static_cast<std::size_t>(k)] = mu_new;
      cand.sigmas[static_cast<std::size_t>(k)] = std::sqrt(s2 / s0);
    }
    cand = detail::project_gmm(cand, nyquist);

    // damped acceptance: never let the divergence increase
    double div_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    GmmEnvelope trial = cand;
    for (int halving = 0; halving <= 20; ++halving) {
      detail::gmm_curve_on_bins(trial, bin_hz, curve);
      div_new = i_divergence(h, curve);
      if (div_new <= div_prev * (1.0 + 1e-15) + 1e-300) {
        accepted = true;
        break;
      }
      for (int k = 0; k < K; ++k) {
        trial.weights[static_cast<std::size_t>(k)] =
            0.5 * (trial.weights[static_cast<std::size_t>(k)] + params.weights[static_cast<std::size_t>(k)]);
        trial.means[static_cast<std::size_t>(k)] =
            0.5 * (trial.means[static_cast<std::size_t>(k)] + params.means[static_cast<std::size_t>(k)]);
        trial.sigmas[static_cast<std::size_t>(k)] =
            0.5 * (trial.sigmas[static_cast<std::size_t>(k)] + params.sigmas[static_cast<std::size_t>(k)]);
      }
      trial = detail::project_gmm(trial, nyquist);
    }
    if (!accepted) break;  // frozen: no damped step improves the fit

    params = trial;
    if (divergence_trace) divergence_trace->push_back(div_new);
    const double rel = (div_prev - div_new) / std::max(div_prev, 1e-300);
    div_prev = div_new;
    if (rel < tol) break;
  }

  params.gain = gain;
  detail::sort_components_by_mean(params);
  return params;
}

}  // namespace gmwf
