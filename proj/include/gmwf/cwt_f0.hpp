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
#include <numeric>
#include <vector>

#include "gmwf/util.hpp"

namespace gmwf {

// Single-sum reconstruction weight for the dyadic Mexican-hat bank,
// calibrated once by least squares against a broadband log-frequency chirp
// and frozen. See tests/test_cwt.cpp for the calibration reference.
inline constexpr double kCwtReconstructGain = 0.3264950302401354;

// Truncation radius of the sampled wavelet, in units of t = (x - b) / a.
inline constexpr double kWaveletSupport = 6.0;

// M x N wavelet analysis of a mean-removed signal plus the exact
// reconstruction residual.
struct CwtDecomposition {
  std::vector<double> scales;                      // seconds, expected dyadic
  std::vector<std::vector<double>> coefficients;   // scales x N
  std::vector<double> residual;                    // N
  double mean_level = 0.0;
  double frame_hop_s = 0.005;
};

// Unit-L2-norm Mexican hat, psi(t) = 2 / (sqrt(3) pi^(1/4)) (1 - t^2) e^(-t^2/2).
inline double mexican_hat(double t) {
  const double norm = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
  return norm * (1.0 - t * t) * std::exp(-0.5 * t * t);
}

// a_i = a0 * 2^i, i = 0..count-1.
inline std::vector<double> dyadic_scales(double a0 = 0.02, int count = 10) {
  if (a0 <= 0.0 || count < 1) throw Error("dyadic_scales: bad parameters");
  std::vector<double> s(static_cast<std::size_t>(count));
  double a = a0;
  for (int i = 0; i < count; ++i, a *= 2.0) s[static_cast<std::size_t>(i)] = a;
  return s;
}

namespace detail {

// mirror reflection about the end samples (period 2(N-1))
inline int reflect_index(int idx, int n) {
  const int period = 2 * (n - 1);
  int r = idx % period;
  if (r < 0) r += period;
  return r < n ? r : period - r;
}

inline std::vector<double> scale_sum(const std::vector<double>& scales,
                                     const std::vector<std::vector<double>>& coefficients, std::size_t n) {
  std::vector<double> acc(n, 0.0);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double wgt = kCwtReconstructGain / std::sqrt(scales[i]);
    for (std::size_t b = 0; b < n; ++b) acc[b] += wgt * coefficients[i][b];
  }
  return acc;
}

}  // namespace detail

// W(a, b) = (1/sqrt(a)) sum_x f(x) psi((x - b) hop / a) hop, with the signal
// mean removed first and the boundary handled by mirror reflection. The
// residual makes reconstruct(decomp, true) reproduce the input exactly.
inline CwtDecomposition cwt_decompose(const std::vector<double>& signal, double frame_hop_s,
                                      const std::vector<double>& scales, int n_threads = 1) {
  const int n = static_cast<int>(signal.size());
  if (n < 2) throw Error("cwt_decompose: need at least two samples");
  if (frame_hop_s <= 0.0) throw Error("cwt_decompose: hop must be positive");
  for (double a : scales) {
    if (a < 2.0 * frame_hop_s) throw Error("cwt_decompose: scale shorter than two hops is unresolvable");
  }

  CwtDecomposition d;
  d.scales = scales;
  d.frame_hop_s = frame_hop_s;
  d.mean_level = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);

  std::vector<double> x(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) x[i] = signal[i] - d.mean_level;

  d.coefficients.assign(scales.size(), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  parallel_for(scales.size(), n_threads, [&](std::size_t si) {
    const double a = scales[si];
    const int radius = static_cast<int>(std::ceil(kWaveletSupport * a / frame_hop_s));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    const double inv_sqrt_a = 1.0 / std::sqrt(a);
    for (int m = -radius; m <= radius; ++m) {
      kernel[static_cast<std::size_t>(m + radius)] =
          mexican_hat(static_cast<double>(m) * frame_hop_s / a) * frame_hop_s * inv_sqrt_a;
    }
    auto& row = d.coefficients[si];
    for (int b = 0; b < n; ++b) {
      double acc = 0.0;
      for (int m = -radius; m <= radius; ++m) {
        acc += x[static_cast<std::size_t>(detail::reflect_index(b + m, n))] * kernel[static_cast<std::size_t>(m + radius)];
      }
      row[static_cast<std::size_t>(b)] = acc;
    }
  });

  const std::vector<double> recon = detail::scale_sum(d.scales, d.coefficients, static_cast<std::size_t>(n));
  d.residual.resize(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) d.residual[static_cast<std::size_t>(b)] = x[static_cast<std::size_t>(b)] - recon[static_cast<std::size_t>(b)];
  return d;
}

// mean + gain * sum_i W(a_i, x) / sqrt(a_i), plus the stored residual when
// include_residual is set (exact round trip).
inline std::vector<double> cwt_reconstruct(const CwtDecomposition& decomp, bool include_residual) {
  if (decomp.coefficients.size() != decomp.scales.size()) throw Error("cwt_reconstruct: malformed decomposition");
  std::vector<double> out = detail::scale_sum(decomp.scales, decomp.coefficients, decomp.residual.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b] += decomp.mean_level;
    if (include_residual) out[b] += decomp.residual[b];
  }
  return out;
}

}  // namespace gmwf
