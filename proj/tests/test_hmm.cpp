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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gmwf/hmm.hpp"
#include "gmwf/util.hpp"
#include "testing/oracles.hpp"

using namespace gmwf;
using gmwf::testing::enumerate_hmm;

namespace {

HmmModel scalar_model(const std::vector<double>& trans, const std::vector<double>& means,
                      const std::vector<double>& vars, const std::vector<double>& initial) {
  HmmModel m;
  m.n = static_cast<int>(initial.size());
  m.trans = trans;
  m.initial = initial;
  for (std::size_t i = 0; i < means.size(); ++i) {
    m.means.push_back({means[i]});
    m.vars.push_back({vars[i]});
  }
  return m;
}

ObservationSequence scalar_obs(const std::vector<double>& ys) {
  ObservationSequence o;
  for (double y : ys) o.vectors.push_back({y});
  return o;
}

HmmModel random_model(int n, Rng& rng) {
  HmmModel m;
  m.n = n;
  m.trans.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = rng.uniform(0.05, 1.0);
      m.trans[static_cast<std::size_t>(i * n + j)] = v;
      row += v;
    }
    for (int j = 0; j < n; ++j) m.trans[static_cast<std::size_t>(i * n + j)] /= row;
  }
  m.initial.resize(static_cast<std::size_t>(n));
  double tot = 0.0;
  for (int i = 0; i < n; ++i) {
    m.initial[static_cast<std::size_t>(i)] = rng.uniform(0.1, 1.0);
    tot += m.initial[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < n; ++i) m.initial[static_cast<std::size_t>(i)] /= tot;
  for (int i = 0; i < n; ++i) {
    m.means.push_back({rng.uniform(-3.0, 3.0)});
    m.vars.push_back({rng.uniform(0.2, 2.0)});
  }
  return m;
}

}  // namespace

TEST_CASE("stationary distribution solves the pinned examples") {
  const auto pi = stationary_distribution({0.9, 0.1, 0.5, 0.5}, 2);
  REQUIRE(pi[0] == Catch::Approx(5.0 / 6.0).margin(1e-12));
  REQUIRE(pi[1] == Catch::Approx(1.0 / 6.0).margin(1e-12));

  const auto swap = stationary_distribution({0.0, 1.0, 1.0, 0.0}, 2);
  REQUIRE(swap[0] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(swap[1] == Catch::Approx(0.5).margin(1e-12));

  REQUIRE_THROWS_AS(stationary_distribution({1.0, 0.0, 0.0, 1.0}, 2), Error);
}

TEST_CASE("stationary distribution residual stays below 1e-12 on random chains") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 4);
    std::vector<double> p(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        const double v = rng.uniform(0.01, 1.0);
        p[static_cast<std::size_t>(i * n + j)] = v;
        row += v;
      }
      for (int j = 0; j < n; ++j) p[static_cast<std::size_t>(i * n + j)] /= row;
    }
    const auto pi = stationary_distribution(p, n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = -pi[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) acc += pi[static_cast<std::size_t>(j)] * p[static_cast<std::size_t>(j * n + i)];
      REQUIRE(std::abs(acc) <= 1e-12);
      sum += pi[static_cast<std::size_t>(i)];
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("forward base case matches the closed form at T = 1") {
  const auto m = scalar_model({0.7, 0.3, 0.4, 0.6}, {0.0, 2.0}, {1.0, 0.5}, {0.6, 0.4});
  const auto r = forward(m, scalar_obs({0.3}));
  for (int i = 0; i < 2; ++i) {
    const double expect = std::log(m.initial[static_cast<std::size_t>(i)]) +
                          std::log(gmwf::testing::gaussian_pdf(0.3, m.means[static_cast<std::size_t>(i)][0],
                                                               m.vars[static_cast<std::size_t>(i)][0]));
    REQUIRE(r.log_alpha[0][static_cast<std::size_t>(i)] == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("forward and backward match exhaustive enumeration at T = 2") {
  const auto m = scalar_model({0.8, 0.2, 0.3, 0.7}, {-1.0, 1.5}, {0.6, 1.2}, {0.55, 0.45});
  const auto obs = scalar_obs({0.2, -0.7});
  const auto fr = forward(m, obs);
  const auto bw = backward(m, obs);
  const auto oracle = enumerate_hmm(m, obs);
  for (int t = 0; t < 2; ++t) {
    for (int i = 0; i < 2; ++i) {
      REQUIRE(fr.log_alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] ==
              Catch::Approx(std::log(oracle.alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)])).margin(1e-12));
      REQUIRE(bw[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] ==
              Catch::Approx(std::log(oracle.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)])).margin(1e-12));
    }
  }
  REQUIRE(fr.log_likelihood == Catch::Approx(std::log(oracle.likelihood)).margin(1e-12));
}

TEST_CASE("identical emissions reduce the forward table to chain marginals") {
  const auto m = scalar_model({0.6, 0.4, 0.2, 0.8}, {0.5, 0.5}, {1.0, 1.0}, {0.3, 0.7});
  const auto obs = scalar_obs({0.1, -0.2, 0.3, 0.0});
  const auto fr = forward(m, obs);
  // chain marginal by direct propagation
  std::vector<double> marg = m.initial;
  for (int t = 0; t < 4; ++t) {
    double norm = 0.0;
    std::vector<double> a(2);
    for (int i = 0; i < 2; ++i) {
      a[static_cast<std::size_t>(i)] = std::exp(fr.log_alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
      norm += a[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < 2; ++i) {
      REQUIRE(a[static_cast<std::size_t>(i)] / norm == Catch::Approx(marg[static_cast<std::size_t>(i)]).margin(1e-10));
    }
    std::vector<double> next(2, 0.0);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) next[static_cast<std::size_t>(j)] += marg[static_cast<std::size_t>(i)] * m.p(i, j);
    }
    marg = next;
  }
}

TEST_CASE("backward boundary and forward-backward consistency") {
  const auto m = scalar_model({0.75, 0.25, 0.15, 0.85}, {-0.5, 0.9}, {0.8, 0.4}, {0.5, 0.5});
  const auto obs = scalar_obs({0.4, 0.1, -0.3});
  const auto bw = backward(m, obs);
  for (int i = 0; i < 2; ++i) REQUIRE(bw[2][static_cast<std::size_t>(i)] == 0.0);

  const auto fr = forward(m, obs);
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    total += m.initial[static_cast<std::size_t>(i)] *
             gmwf::testing::gaussian_pdf(0.4, m.means[static_cast<std::size_t>(i)][0], m.vars[static_cast<std::size_t>(i)][0]) *
             std::exp(bw[0][static_cast<std::size_t>(i)]);
  }
  REQUIRE(std::log(total) == Catch::Approx(fr.log_likelihood).margin(1e-10));
}

TEST_CASE("posterior time slices sum to one and match enumeration") {
  const auto m = scalar_model({0.9, 0.1, 0.2, 0.8}, {0.0, 1.0}, {0.5, 0.5}, {0.6, 0.4});
  const auto obs = scalar_obs({0.1, 0.9, 0.4});
  const auto fr = forward(m, obs);
  const auto gamma = posterior(fr.log_alpha, backward(m, obs));
  const auto oracle = enumerate_hmm(m, obs);
  for (int t = 0; t < 3; ++t) {
    double sum = 0.0;
    for (int i = 0; i < 2; ++i) {
      REQUIRE(gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] ==
              Catch::Approx(oracle.gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]).margin(1e-12));
      sum += gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("posterior degenerate cases") {
  const auto one = scalar_model({1.0}, {0.0}, {1.0}, {1.0});
  const auto obs = scalar_obs({0.5, -0.5, 1.0});
  const auto fr = forward(one, obs);
  const auto gamma = posterior(fr.log_alpha, backward(one, obs));
  for (const auto& slice : gamma) REQUIRE(slice[0] == Catch::Approx(1.0).margin(1e-14));

  // identical emissions and symmetric transitions: everything is 1/2
  const auto sym = scalar_model({0.5, 0.5, 0.5, 0.5}, {0.3, 0.3}, {1.0, 1.0}, {0.5, 0.5});
  const auto g2 = posterior(forward(sym, obs).log_alpha, backward(sym, obs));
  for (const auto& slice : g2) {
    REQUIRE(slice[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(slice[1] == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("small random instances agree with enumeration everywhere") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    const int T = 1 + static_cast<int>(rng.next_u64() % 6);
    const auto m = random_model(n, rng);
    ObservationSequence obs;
    for (int t = 0; t < T; ++t) obs.vectors.push_back({rng.uniform(-3.0, 3.0)});

    const auto fr = forward(m, obs);
    const auto bw = backward(m, obs);
    const auto gamma = posterior(fr.log_alpha, bw);
    const auto oracle = enumerate_hmm(m, obs);

    REQUIRE(std::abs(std::exp(fr.log_likelihood) - oracle.likelihood) <= 1e-10 * std::max(1.0, oracle.likelihood));
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) {
        REQUIRE(std::abs(std::exp(fr.log_alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) -
                         oracle.alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) <= 1e-10);
        REQUIRE(std::abs(std::exp(bw[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) -
                         oracle.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) <=
                1e-10 * std::max(1.0, oracle.beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]));
        REQUIRE(std::abs(gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] -
                         oracle.gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) <= 1e-10);
      }
    }
    REQUIRE(viterbi(m, obs) == oracle.best_path);
  }
}

TEST_CASE("baum_welch with one state recovers the sample statistics") {
  Rng rng(8);
  ObservationSequence obs;
  double mean = 0.0;
  for (int t = 0; t < 500; ++t) {
    const double y = rng.next_gaussian() * 1.7 + 0.4;
    obs.vectors.push_back({y});
    mean += y;
  }
  mean /= 500.0;
  double var = 0.0;
  for (const auto& y : obs.vectors) var += (y[0] - mean) * (y[0] - mean);
  var /= 500.0;

  const auto seed = scalar_model({1.0}, {0.0}, {1.0}, {1.0});
  const auto fit = baum_welch(obs, 1, seed);
  REQUIRE(fit.means[0][0] == Catch::Approx(mean).margin(1e-9));
  REQUIRE(fit.vars[0][0] == Catch::Approx(var).margin(1e-9));
}

TEST_CASE("baum_welch log-likelihood never decreases") {
  Rng rng(77);
  // synthetic data from a 2-state chain
  ObservationSequence obs;
  int state = 0;
  for (int t = 0; t < 400; ++t) {
    if (rng.next_double() < 0.1) state = 1 - state;
    obs.vectors.push_back({state == 0 ? rng.next_gaussian() : 3.0 + rng.next_gaussian()});
  }
  for (int trial = 0; trial < 30; ++trial) {
    auto seed = random_model(2, rng);
    std::vector<double> trace;
    baum_welch(obs, 2, seed, 60, 1e-8, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      REQUIRE(trace[i] >= trace[i - 1] - 1e-8);
    }
  }
}

TEST_CASE("baum_welch recovers well-separated states") {
  Rng rng(99);
  ObservationSequence obs;
  int state = 0;
  for (int t = 0; t < 2000; ++t) {
    const double stay = state == 0 ? 0.95 : 0.9;
    if (rng.next_double() > stay) state = 1 - state;
    obs.vectors.push_back({state == 0 ? rng.next_gaussian() : 6.0 + rng.next_gaussian()});
  }
  const auto seed = scalar_model({0.9, 0.1, 0.1, 0.9}, {1.0, 5.0}, {1.0, 1.0}, {0.5, 0.5});
  const auto fit = baum_welch(obs, 2, seed);
  const double lo = std::min(fit.means[0][0], fit.means[1][0]);
  const double hi = std::max(fit.means[0][0], fit.means[1][0]);
  REQUIRE(std::abs(lo - 0.0) <= 0.3);  // 5% of the 6-sigma span
  REQUIRE(hi == Catch::Approx(6.0).epsilon(0.05));
}

TEST_CASE("baum_welch rejects degenerate input") {
  const auto seed = scalar_model({0.9, 0.1, 0.1, 0.9}, {0.0, 1.0}, {1.0, 1.0}, {0.5, 0.5});
  REQUIRE_THROWS_AS(baum_welch(scalar_obs({0.5}), 2, seed), Error);
}

TEST_CASE("viterbi handles decoupled and single-state cases") {
  // uniform transitions, emissions strongly favoring one state per frame
  const auto m = scalar_model({0.5, 0.5, 0.5, 0.5}, {0.0, 10.0}, {0.1, 0.1}, {0.5, 0.5});
  const auto obs = scalar_obs({0.1, 9.9, 10.2, -0.2, 0.05});
  REQUIRE(viterbi(m, obs) == std::vector<int>{0, 1, 1, 0, 0});

  const auto one = scalar_model({1.0}, {0.0}, {1.0}, {1.0});
  REQUIRE(viterbi(one, scalar_obs({1.0, 2.0, 3.0})) == std::vector<int>{0, 0, 0});
}

TEST_CASE("log-domain recursions survive very long sequences") {
  const int T = 100000;
  const int d = 17;
  HmmModel m;
  m.n = 2;
  m.trans = {0.95, 0.05, 0.05, 0.95};
  m.initial = {0.5, 0.5};
  m.means.assign(2, std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int k = 0; k < d; ++k) m.means[1][static_cast<std::size_t>(k)] = 2.0;
  m.vars.assign(2, std::vector<double>(static_cast<std::size_t>(d), 1.0));

  Rng rng(1);
  ObservationSequence obs;
  obs.vectors.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    std::vector<double> y(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) y[static_cast<std::size_t>(k)] = rng.next_gaussian() + (t % 100 < 50 ? 0.0 : 2.0);
    obs.vectors.push_back(std::move(y));
  }
  const auto fr = forward(m, obs);
  REQUIRE(std::isfinite(fr.log_likelihood));
  const auto bw = backward(m, obs);
  REQUIRE(std::isfinite(bw[0][0]));
  const auto gamma = posterior(fr.log_alpha, bw);
  for (int t = 0; t < T; t += 9973) {
    REQUIRE(gamma[static_cast<std::size_t>(t)][0] + gamma[static_cast<std::size_t>(t)][1] ==
            Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("reduce_restore quantizes to state means") {
  Rng rng(13);

  // single state: everything becomes the sample mean
  ObservationSequence flat;
  for (int t = 0; t < 50; ++t) flat.vectors.push_back({rng.uniform(0.0, 1.0)});
  const auto r1 = reduce_restore(flat, 1);
  double mean = 0.0;
  for (const auto& y : flat.vectors) mean += y[0];
  mean /= 50.0;
  for (const auto& y : r1.restored.vectors) REQUIRE(y[0] == Catch::Approx(mean).margin(1e-9));

  // two well-separated clusters
  ObservationSequence two;
  int state = 0;
  for (int t = 0; t < 600; ++t) {
    if (rng.next_double() < 0.08) state = 1 - state;
    two.vectors.push_back({state == 0 ? rng.next_gaussian() * 0.5 : 8.0 + rng.next_gaussian() * 0.5});
  }
  const auto r2 = reduce_restore(two, 2);
  std::vector<double> levels;
  for (const auto& y : r2.restored.vectors) {
    if (std::find_if(levels.begin(), levels.end(), [&](double v) { return std::abs(v - y[0]) < 1e-12; }) ==
        levels.end()) {
      levels.push_back(y[0]);
    }
  }
  REQUIRE(levels.size() <= 2);
  std::sort(levels.begin(), levels.end());
  REQUIRE(std::abs(levels.front() - 0.0) <= 0.4);  // 5% of the separation
  REQUIRE(levels.back() == Catch::Approx(8.0).epsilon(0.05));

  // decoding the restored sequence with the same model gives the same path
  const auto path2 = viterbi(r2.model, r2.restored);
  REQUIRE(path2 == r2.state_path);

  REQUIRE_THROWS_AS(reduce_restore(flat, 51), Error);
}
