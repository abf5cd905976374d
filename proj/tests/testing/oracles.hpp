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
// Independent oracles used by the test suites: brute-force DFT, exhaustive
// HMM path enumeration, a dense Gaussian-posterior solve for the smoother,
// and a direct wavelet correlation. These deliberately avoid the library's
// own recursions so each check has two routes to the same value.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "gmwf/hmm.hpp"

namespace gmwf::testing {

// O(N^2) DFT of a real signal.
inline std::vector<std::complex<double>> direct_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline double gaussian_pdf(double y, double mean, double var) {
  const double d = y - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

inline double emission_pdf(const std::vector<double>& y, const std::vector<double>& mean,
                           const std::vector<double>& var) {
  double p = 1.0;
  for (std::size_t i = 0; i < y.size(); ++i) p *= gaussian_pdf(y[i], mean[i], var[i]);
  return p;
}

// Probability-domain tables from exhaustive enumeration over all n^T paths.
struct EnumeratedHmm {
  std::vector<std::vector<double>> alpha;  // P(X_t = i, y_1..y_t)
  std::vector<std::vector<double>> beta;   // P(y_{t+1}..y_T | X_t = i)
  std::vector<std::vector<double>> gamma;  // P(X_t = i | y_1..y_T)
  double likelihood = 0.0;
  std::vector<int> best_path;
};

inline EnumeratedHmm enumerate_hmm(const HmmModel& model, const ObservationSequence& obs) {
  const int T = obs.length();
  const int n = model.n;
  EnumeratedHmm out;
  out.alpha.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  out.beta.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  out.gamma.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n), 0.0));

  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double best = -1.0;
  long total_paths = 1;
  for (int t = 0; t < T; ++t) total_paths *= n;

  for (long code = 0; code < total_paths; ++code) {
    long c = code;
    for (int t = 0; t < T; ++t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(c % n);
      c /= n;
    }
    double joint = model.initial[static_cast<std::size_t>(path[0])] *
                   emission_pdf(obs.vectors[0], model.means[static_cast<std::size_t>(path[0])],
                                model.vars[static_cast<std::size_t>(path[0])]);
    for (int t = 1; t < T; ++t) {
      joint *= model.p(path[static_cast<std::size_t>(t - 1)], path[static_cast<std::size_t>(t)]) *
               emission_pdf(obs.vectors[static_cast<std::size_t>(t)], model.means[static_cast<std::size_t>(path[static_cast<std::size_t>(t)])],
                            model.vars[static_cast<std::size_t>(path[static_cast<std::size_t>(t)])]);
    }
    out.likelihood += joint;
    for (int t = 0; t < T; ++t) out.gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[static_cast<std::size_t>(t)])] += joint;
    if (joint > best) {
      best = joint;
      out.best_path = path;
    }
  }

  // alpha and beta by direct summation over partial paths
  for (int t = 0; t < T; ++t) {
    long prefix_paths = 1;
    for (int u = 0; u <= t; ++u) prefix_paths *= n;
    for (long code = 0; code < prefix_paths; ++code) {
      long c = code;
      std::vector<int> pp(static_cast<std::size_t>(t) + 1);
      for (int u = 0; u <= t; ++u) {
        pp[static_cast<std::size_t>(u)] = static_cast<int>(c % n);
        c /= n;
      }
      double joint = model.initial[static_cast<std::size_t>(pp[0])] *
                     emission_pdf(obs.vectors[0], model.means[static_cast<std::size_t>(pp[0])],
                                  model.vars[static_cast<std::size_t>(pp[0])]);
      for (int u = 1; u <= t; ++u) {
        joint *= model.p(pp[static_cast<std::size_t>(u - 1)], pp[static_cast<std::size_t>(u)]) *
                 emission_pdf(obs.vectors[static_cast<std::size_t>(u)], model.means[static_cast<std::size_t>(pp[static_cast<std::size_t>(u)])],
                              model.vars[static_cast<std::size_t>(pp[static_cast<std::size_t>(u)])]);
      }
      out.alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(pp[static_cast<std::size_t>(t)])] += joint;
    }
  }
  for (int t = 0; t < T; ++t) {
    const int tail = T - 1 - t;
    long tail_paths = 1;
    for (int u = 0; u < tail; ++u) tail_paths *= n;
    for (int i = 0; i < n; ++i) {
      if (tail == 0) {
        out.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = 1.0;
        continue;
      }
      double acc = 0.0;
      for (long code = 0; code < tail_paths; ++code) {
        long c = code;
        std::vector<int> tp(static_cast<std::size_t>(tail));
        for (int u = 0; u < tail; ++u) {
          tp[static_cast<std::size_t>(u)] = static_cast<int>(c % n);
          c /= n;
        }
        double joint = model.p(i, tp[0]) * emission_pdf(obs.vectors[static_cast<std::size_t>(t + 1)],
                                                        model.means[static_cast<std::size_t>(tp[0])],
                                                        model.vars[static_cast<std::size_t>(tp[0])]);
        for (int u = 1; u < tail; ++u) {
          joint *= model.p(tp[static_cast<std::size_t>(u - 1)], tp[static_cast<std::size_t>(u)]) *
                   emission_pdf(obs.vectors[static_cast<std::size_t>(t + 1 + u)], model.means[static_cast<std::size_t>(tp[static_cast<std::size_t>(u)])],
                                model.vars[static_cast<std::size_t>(tp[static_cast<std::size_t>(u)])]);
        }
        acc += joint;
      }
      out.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = acc;
    }
  }
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) out.gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] /= out.likelihood;
  }
  return out;
}

// Posterior mean and marginal variances of the random-walk smoothing problem
// with a flat prior on the first state: tridiagonal precision
// Lam_tt = 1/R_t + (neighbors)/q, Lam_{t,t+1} = -1/q, right side z_t / R_t.
struct DensePosterior {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline DensePosterior dense_random_walk_posterior(const std::vector<double>& z, const std::vector<double>& r,
                                                  double q) {
  const int T = static_cast<int>(z.size());
  std::vector<std::vector<double>> lam(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  for (int t = 0; t < T; ++t) {
    lam[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] = 1.0 / r[static_cast<std::size_t>(t)];
    if (t > 0) {
      lam[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] += 1.0 / q;
      lam[static_cast<std::size_t>(t)][static_cast<std::size_t>(t - 1)] -= 1.0 / q;
    }
    if (t < T - 1) {
      lam[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] += 1.0 / q;
      lam[static_cast<std::size_t>(t)][static_cast<std::size_t>(t + 1)] -= 1.0 / q;
    }
  }

  // invert by Gaussian elimination against [b | I]
  const int m = T + 1 + T;  // rhs columns: b plus unit vectors
  std::vector<std::vector<double>> aug(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T + m), 0.0));
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = lam[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(T)] = z[static_cast<std::size_t>(i)] / r[static_cast<std::size_t>(i)];
    aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(T + 1 + i)] = 1.0;
  }
  for (int col = 0; col < T; ++col) {
    int best = col;
    for (int row = col + 1; row < T; ++row) {
      if (std::abs(aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) >
          std::abs(aug[static_cast<std::size_t>(best)][static_cast<std::size_t>(col)])) {
        best = row;
      }
    }
    std::swap(aug[static_cast<std::size_t>(col)], aug[static_cast<std::size_t>(best)]);
    const double piv = aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    for (int j = col; j < T + m; ++j) aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] /= piv;
    for (int row = 0; row < T; ++row) {
      if (row == col) continue;
      const double f = aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
      if (f == 0.0) continue;
      for (int j = col; j < T + m; ++j) {
        aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)] -= f * aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
      }
    }
  }

  DensePosterior out;
  out.mean.resize(static_cast<std::size_t>(T));
  out.variance.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    out.mean[static_cast<std::size_t>(t)] = aug[static_cast<std::size_t>(t)][static_cast<std::size_t>(T)];
    out.variance[static_cast<std::size_t>(t)] = aug[static_cast<std::size_t>(t)][static_cast<std::size_t>(T + 1 + t)];
  }
  return out;
}

// Direct wavelet correlation at one scale, no reflection: only valid for
// positions whose support lies inside the signal.
inline double direct_cwt_coefficient(const std::vector<double>& x, double hop_s, double scale, int b,
                                     double support) {
  const int n = static_cast<int>(x.size());
  const int radius = static_cast<int>(std::ceil(support * scale / hop_s));
  double acc = 0.0;
  for (int m = -radius; m <= radius; ++m) {
    const int idx = b + m;
    if (idx < 0 || idx >= n) continue;
    const double t = static_cast<double>(m) * hop_s / scale;
    const double norm = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
    acc += x[static_cast<std::size_t>(idx)] * norm * (1.0 - t * t) * std::exp(-0.5 * t * t) * hop_s / std::sqrt(scale);
  }
  return acc;
}

}  // namespace gmwf::testing
