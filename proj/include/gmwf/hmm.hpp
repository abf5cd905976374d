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

#include "gmwf/util.hpp"

namespace gmwf {

inline constexpr double kHmmVarMin = 1e-8;

// Gaussian-emission HMM with diagonal covariances. The scalar case is d = 1.
struct HmmModel {
  int n = 2;                               // state count
  std::vector<double> trans;               // n x n row-stochastic, row-major
  std::vector<std::vector<double>> means;  // n x d
  std::vector<std::vector<double>> vars;   // n x d, each >= kHmmVarMin
  std::vector<double> initial;             // length n, sums to 1

  double p(int i, int j) const { return trans[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

struct ObservationSequence {
  std::vector<std::vector<double>> vectors;  // T x d

  int length() const { return static_cast<int>(vectors.size()); }
  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double log_gaussian(const std::vector<double>& y, const std::vector<double>& mean,
                           const std::vector<double>& var) {
  double acc = 0.0;
  for (std::size_t d = 0; d < y.size(); ++d) {
    const double diff = y[d] - mean[d];
    acc += -0.5 * (std::log(2.0 * M_PI * var[d]) + diff * diff / var[d]);
  }
  return acc;
}

// Dense LU with partial pivoting, for the small stationary-distribution
// systems (n is the HMM state count).
struct Lu {
  int n = 0;
  std::vector<double> a;   // n x n factors
  std::vector<int> piv;
  bool singular = false;
};

inline Lu lu_factor(std::vector<double> a, int n) {
  Lu lu;
  lu.n = n;
  lu.piv.resize(static_cast<std::size_t>(n));
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) scale = 1.0;
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)]) >
          std::abs(a[static_cast<std::size_t>(best) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)])) {
        best = r;
      }
    }
    lu.piv[static_cast<std::size_t>(col)] = best;
    if (best != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(a[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)],
                  a[static_cast<std::size_t>(best) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)]);
      }
    }
    const double pivot = a[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)];
    if (std::abs(pivot) < 1e-12 * scale) {
      lu.singular = true;
      lu.a = std::move(a);
      return lu;
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)] / pivot;
      a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)] = f;
      for (int c = col + 1; c < n; ++c) {
        a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] -=
            f * a[static_cast<std::size_t>(col) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)];
      }
    }
  }
  lu.a = std::move(a);
  return lu;
}

inline std::vector<double> lu_solve(const Lu& lu, std::vector<double> b) {
  const int n = lu.n;
  for (int col = 0; col < n; ++col) {
    std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(lu.piv[static_cast<std::size_t>(col)])]);
    for (int r = col + 1; r < n; ++r) {
      b[static_cast<std::size_t>(r)] -= lu.a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(col)] * b[static_cast<std::size_t>(col)];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    for (int c = r + 1; c < n; ++c) {
      b[static_cast<std::size_t>(r)] -= lu.a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] * b[static_cast<std::size_t>(c)];
    }
    b[static_cast<std::size_t>(r)] /= lu.a[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(r)];
  }
  return b;
}

}  // namespace detail

// Stationary distribution pi with pi P = pi, solved as a linear system (the
// last equation is replaced by the normalization sum pi = 1). Iterative
// refinement pushes the residual below 1e-13 when the system allows it.
// Throws if the stationary distribution is not unique.
inline std::vector<double> stationary_distribution(const std::vector<double>& trans, int n) {
  if (n < 1 || static_cast<int>(trans.size()) != n * n) throw Error("stationary: bad transition matrix");
  std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // equation i: sum_j pi_j p_ji - pi_i = 0
      m[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
          trans[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] - (i == j ? 1.0 : 0.0);
    }
  }
  for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = 1.0;

  const detail::Lu lu = detail::lu_factor(m, n);
  if (lu.singular) throw Error("stationary distribution is not unique");

  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  rhs[static_cast<std::size_t>(n - 1)] = 1.0;
  std::vector<double> pi = detail::lu_solve(lu, rhs);

  auto residual = [&](const std::vector<double>& p) {
    double r = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = -p[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        acc += p[static_cast<std::size_t>(j)] * trans[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      }
      r = std::max(r, std::abs(acc));
    }
    return r;
  };

  for (int pass = 0; pass < 3 && residual(pi) > 1e-14; ++pass) {
    std::vector<double> err(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n - 1; ++i) {
      double acc = -pi[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        acc += pi[static_cast<std::size_t>(j)] * trans[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      }
      err[static_cast<std::size_t>(i)] = -acc;
    }
    err[static_cast<std::size_t>(n - 1)] = 1.0 - std::accumulate(pi.begin(), pi.end(), 0.0);
    const std::vector<double> delta = detail::lu_solve(lu, err);
    for (int i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] += delta[static_cast<std::size_t>(i)];
  }
  if (residual(pi) > 1e-12) throw Error("stationary distribution solve did not converge");
  return pi;
}

// Forward recursion in the log domain. alpha_t(i) = P(X_t = i, Y_1..Y_t).
struct ForwardResult {
  std::vector<std::vector<double>> log_alpha;  // T x n
  double log_likelihood = 0.0;
};

inline ForwardResult forward(const HmmModel& model, const ObservationSequence& obs) {
  const int T = obs.length();
  const int n = model.n;
  if (T < 1) throw Error("forward: empty observation sequence");
  if (obs.dim() != model.dim()) throw Error("forward: observation dimension mismatch");

  ForwardResult r;
  r.log_alpha.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lp0 = model.initial[static_cast<std::size_t>(i)] > 0.0
                           ? std::log(model.initial[static_cast<std::size_t>(i)])
                           : -std::numeric_limits<double>::infinity();
    r.log_alpha[0][static_cast<std::size_t>(i)] =
        lp0 + detail::log_gaussian(obs.vectors[0], model.means[static_cast<std::size_t>(i)], model.vars[static_cast<std::size_t>(i)]);
  }
  for (int t = 1; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double lp = model.p(j, i) > 0.0 ? std::log(model.p(j, i)) : -std::numeric_limits<double>::infinity();
        terms[static_cast<std::size_t>(j)] = r.log_alpha[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(j)] + lp;
      }
      r.log_alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
          detail::log_sum_exp(terms) +
          detail::log_gaussian(obs.vectors[static_cast<std::size_t>(t)], model.means[static_cast<std::size_t>(i)], model.vars[static_cast<std::size_t>(i)]);
    }
  }
  r.log_likelihood = detail::log_sum_exp(r.log_alpha[static_cast<std::size_t>(T - 1)]);
  return r;
}

// Backward recursion in the log domain. beta_T(i) = 1 by convention.
inline std::vector<std::vector<double>> backward(const HmmModel& model, const ObservationSequence& obs) {
  const int T = obs.length();
  const int n = model.n;
  if (T < 1) throw Error("backward: empty observation sequence");
  if (obs.dim() != model.dim()) throw Error("backward: observation dimension mismatch");

  std::vector<std::vector<double>> log_beta(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double lp = model.p(i, j) > 0.0 ? std::log(model.p(i, j)) : -std::numeric_limits<double>::infinity();
        terms[static_cast<std::size_t>(j)] =
            lp +
            detail::log_gaussian(obs.vectors[static_cast<std::size_t>(t + 1)], model.means[static_cast<std::size_t>(j)], model.vars[static_cast<std::size_t>(j)]) +
            log_beta[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(j)];
      }
      log_beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = detail::log_sum_exp(terms);
    }
  }
  return log_beta;
}

// State posteriors gamma_t(i) = P(X_t = i | Y_1..Y_T); each time slice is
// normalized to sum to 1.
inline std::vector<std::vector<double>> posterior(const std::vector<std::vector<double>>& log_alpha,
                                                  const std::vector<std::vector<double>>& log_beta) {
  if (log_alpha.size() != log_beta.size()) throw Error("posterior: table length mismatch");
  const std::size_t T = log_alpha.size();
  std::vector<std::vector<double>> gamma(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t n = log_alpha[t].size();
    if (log_beta[t].size() != n) throw Error("posterior: table width mismatch");
    std::vector<double> lg(n);
    for (std::size_t i = 0; i < n; ++i) lg[i] = log_alpha[t][i] + log_beta[t][i];
    const double norm = detail::log_sum_exp(lg);
    gamma[t].resize(n);
    for (std::size_t i = 0; i < n; ++i) gamma[t][i] = std::exp(lg[i] - norm);
  }
  return gamma;
}

// Baum-Welch re-estimation. After each iteration the initial distribution is
// reset to the stationary distribution of the updated transition matrix
// (uniform fallback when that is not unique); if that reset would lower the
// likelihood it is deferred to the next iteration, which keeps the
// log-likelihood non-decreasing. The returned model always carries the
// stationary initial distribution. Emission variances are floored at
// kHmmVarMin, transition rows stay normalized.
inline HmmModel baum_welch(const ObservationSequence& obs, int n, const HmmModel& seed_model, int max_iters = 100,
                           double tol = 1e-6, std::vector<double>* loglik_trace = nullptr) {
  const int T = obs.length();
  const int d = obs.dim();
  if (T < n) throw Error("baum_welch: fewer observations than states");
  if (seed_model.n != n || seed_model.dim() != d) throw Error("baum_welch: seed model shape mismatch");

  HmmModel model = seed_model;
  double prev_ll = -std::numeric_limits<double>::infinity();

  auto stationary_or_uniform = [&](const std::vector<double>& trans) {
    try {
      return stationary_distribution(trans, n);
    } catch (const Error&) {
      return std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
    }
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    const ForwardResult fr = forward(model, obs);
    const auto log_beta = backward(model, obs);
    const auto gamma = posterior(fr.log_alpha, log_beta);
    if (loglik_trace) loglik_trace->push_back(fr.log_likelihood);

    // transition statistics
    std::vector<double> xi_sum(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t + 1 < T; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (model.p(i, j) <= 0.0) continue;
          const double lx = fr.log_alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] + std::log(model.p(i, j)) +
                            detail::log_gaussian(obs.vectors[static_cast<std::size_t>(t + 1)], model.means[static_cast<std::size_t>(j)],
                                                 model.vars[static_cast<std::size_t>(j)]) +
                            log_beta[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(j)] - fr.log_likelihood;
          xi_sum[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] += std::exp(lx);
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) row += xi_sum[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      if (row > 0.0) {
        for (int j = 0; j < n; ++j) {
          model.trans[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
              xi_sum[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] / row;
        }
      }
      // a state never left keeps its previous row
    }

    // emission statistics
    for (int i = 0; i < n; ++i) {
      double mass = 0.0;
      std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
      for (int t = 0; t < T; ++t) {
        const double g = gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
        mass += g;
        for (int k = 0; k < d; ++k) mean[static_cast<std::size_t>(k)] += g * obs.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
      }
      if (mass <= 0.0) continue;
      for (int k = 0; k < d; ++k) mean[static_cast<std::size_t>(k)] /= mass;
      std::vector<double> var(static_cast<std::size_t>(d), 0.0);
      for (int t = 0; t < T; ++t) {
        const double g = gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
        for (int k = 0; k < d; ++k) {
          const double diff = obs.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
          var[static_cast<std::size_t>(k)] += g * diff * diff;
        }
      }
      for (int k = 0; k < d; ++k) var[static_cast<std::size_t>(k)] = std::max(var[static_cast<std::size_t>(k)] / mass, kHmmVarMin);
      model.means[static_cast<std::size_t>(i)] = std::move(mean);
      model.vars[static_cast<std::size_t>(i)] = std::move(var);
    }

    // reset the initial distribution to the stationary one, unless doing so
    // would lower the likelihood (the re-estimated transitions and emissions
    // alone never can)
    const std::vector<double> kept_initial = model.initial;
    model.initial = stationary_or_uniform(model.trans);
    const ForwardResult probe = forward(model, obs);
    if (probe.log_likelihood < fr.log_likelihood) model.initial = kept_initial;

    const double rel = (fr.log_likelihood - prev_ll) / std::max(std::abs(prev_ll), 1.0);
    prev_ll = fr.log_likelihood;
    if (iter > 0 && rel < tol) break;
  }
  model.initial = stationary_or_uniform(model.trans);
  return model;
}

// Most probable state path; ties break toward the lower state index.
inline std::vector<int> viterbi(const HmmModel& model, const ObservationSequence& obs) {
  const int T = obs.length();
  const int n = model.n;
  if (T < 1) throw Error("viterbi: empty observation sequence");
  if (obs.dim() != model.dim()) throw Error("viterbi: observation dimension mismatch");

  std::vector<std::vector<double>> delta(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<std::vector<int>> back(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i) {
    const double lp0 = model.initial[static_cast<std::size_t>(i)] > 0.0
                           ? std::log(model.initial[static_cast<std::size_t>(i)])
                           : -std::numeric_limits<double>::infinity();
    delta[0][static_cast<std::size_t>(i)] =
        lp0 + detail::log_gaussian(obs.vectors[0], model.means[static_cast<std::size_t>(i)], model.vars[static_cast<std::size_t>(i)]);
  }
  for (int t = 1; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int j = 0; j < n; ++j) {
        const double lp = model.p(j, i) > 0.0 ? std::log(model.p(j, i)) : -std::numeric_limits<double>::infinity();
        const double cand = delta[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(j)] + lp;
        if (cand > best) {
          best = cand;
          arg = j;
        }
      }
      delta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
          best +
          detail::log_gaussian(obs.vectors[static_cast<std::size_t>(t)], model.means[static_cast<std::size_t>(i)], model.vars[static_cast<std::size_t>(i)]);
      back[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = arg;
    }
  }
  int last = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (delta[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(i)] > best) {
      best = delta[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(i)];
      last = i;
    }
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  path[static_cast<std::size_t>(T - 1)] = last;
  for (int t = T - 2; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = back[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(path[static_cast<std::size_t>(t + 1)])];
  }
  return path;
}

struct ReduceRestoreResult {
  std::vector<int> state_path;
  HmmModel model;                  // in the original (unstandardized) units
  ObservationSequence restored;    // state means per frame
};

// Fits an n-state model (seed: frames split into energy quantile groups),
// decodes with Viterbi, and replaces every frame by the emission mean of its
// decoded state. Fitting happens on per-dimension standardized features; the
// returned model is mapped back to the original units.
inline ReduceRestoreResult reduce_restore(const ObservationSequence& obs, int n, int max_iters = 100,
                                          double tol = 1e-6) {
  const int T = obs.length();
  const int d = obs.dim();
  if (T < n) throw Error("reduce_restore: fewer observations than states");
  if (d < 1) throw Error("reduce_restore: empty observation vectors");

  // per-dimension standardization
  std::vector<double> mu(static_cast<std::size_t>(d), 0.0), sd(static_cast<std::size_t>(d), 0.0);
  for (const auto& y : obs.vectors) {
    for (int k = 0; k < d; ++k) mu[static_cast<std::size_t>(k)] += y[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < d; ++k) mu[static_cast<std::size_t>(k)] /= static_cast<double>(T);
  for (const auto& y : obs.vectors) {
    for (int k = 0; k < d; ++k) {
      const double diff = y[static_cast<std::size_t>(k)] - mu[static_cast<std::size_t>(k)];
      sd[static_cast<std::size_t>(k)] += diff * diff;
    }
  }
  for (int k = 0; k < d; ++k) sd[static_cast<std::size_t>(k)] = std::max(std::sqrt(sd[static_cast<std::size_t>(k)] / static_cast<double>(T)), 1e-12);

  ObservationSequence z;
  z.vectors.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(d)));
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < d; ++k) {
      z.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] =
          (obs.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] - mu[static_cast<std::size_t>(k)]) / sd[static_cast<std::size_t>(k)];
    }
  }

  // seed: group frames by raw-energy quantiles
  std::vector<std::pair<double, int>> energy(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    double e = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = obs.vectors[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
      e += v * v;
    }
    energy[static_cast<std::size_t>(t)] = {e, t};
  }
  std::sort(energy.begin(), energy.end());

  HmmModel seed;
  seed.n = n;
  seed.trans.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), n > 1 ? 0.1 / static_cast<double>(n - 1) : 1.0);
  for (int i = 0; i < n; ++i) seed.trans[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = n > 1 ? 0.9 : 1.0;
  seed.means.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  seed.vars.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d), 1.0));
  for (int g = 0; g < n; ++g) {
    const int lo = g * T / n;
    const int hi = (g + 1) * T / n;
    std::vector<double> gm(static_cast<std::size_t>(d), 0.0), gv(static_cast<std::size_t>(d), 0.0);
    for (int r = lo; r < hi; ++r) {
      const auto& y = z.vectors[static_cast<std::size_t>(energy[static_cast<std::size_t>(r)].second)];
      for (int k = 0; k < d; ++k) gm[static_cast<std::size_t>(k)] += y[static_cast<std::size_t>(k)];
    }
    const double cnt = static_cast<double>(std::max(hi - lo, 1));
    for (int k = 0; k < d; ++k) gm[static_cast<std::size_t>(k)] /= cnt;
    for (int r = lo; r < hi; ++r) {
      const auto& y = z.vectors[static_cast<std::size_t>(energy[static_cast<std::size_t>(r)].second)];
      for (int k = 0; k < d; ++k) {
        const double diff = y[static_cast<std::size_t>(k)] - gm[static_cast<std::size_t>(k)];
        gv[static_cast<std::size_t>(k)] += diff * diff;
      }
    }
    for (int k = 0; k < d; ++k) gv[static_cast<std::size_t>(k)] = std::max(gv[static_cast<std::size_t>(k)] / cnt, kHmmVarMin);
    seed.means[static_cast<std::size_t>(g)] = std::move(gm);
    seed.vars[static_cast<std::size_t>(g)] = std::move(gv);
  }
  try {
    seed.initial = stationary_distribution(seed.trans, n);
  } catch (const Error&) {
    seed.initial.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  }

  HmmModel fitted = baum_welch(z, n, seed, max_iters, tol);
  const std::vector<int> path = viterbi(fitted, z);

  // map the model back to original units
  HmmModel out_model = fitted;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      out_model.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          fitted.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * sd[static_cast<std::size_t>(k)] + mu[static_cast<std::size_t>(k)];
      out_model.vars[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = std::max(
          fitted.vars[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * sd[static_cast<std::size_t>(k)] * sd[static_cast<std::size_t>(k)],
          kHmmVarMin);
    }
  }

  ReduceRestoreResult res;
  res.state_path = path;
  res.model = out_model;
  res.restored.vectors.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    res.restored.vectors[static_cast<std::size_t>(t)] = out_model.means[static_cast<std::size_t>(path[static_cast<std::size_t>(t)])];
  }
  return res;
}

}  // namespace gmwf
