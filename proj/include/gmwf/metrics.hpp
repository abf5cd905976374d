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

#include <cmath>
#include <vector>

#include "gmwf/cont_f0.hpp"
#include "gmwf/spectral.hpp"
#include "gmwf/util.hpp"

namespace gmwf {

struct McdReport {
  double mean_mcd_db = 0.0;
  std::vector<double> per_frame_mcd_db;
  int n_frames = 0;
  int order = 24;
};

// Mel-cepstral distortion per frame,
// (10 / ln 10) sqrt(sum_{m=1}^{M} (c_org(m) - c_synth(m))^2),
// averaged over frames. c(0) is excluded, so a common level shift on either
// side does not change the value.
inline McdReport mcd(const std::vector<MelCepstrum>& org, const std::vector<MelCepstrum>& syn) {
  if (org.size() != syn.size()) throw Error("mcd: frame count mismatch");
  if (org.empty()) throw Error("mcd: no frames");

  McdReport rep;
  rep.n_frames = static_cast<int>(org.size());
  rep.order = org[0].order;
  rep.per_frame_mcd_db.reserve(org.size());
  const double scale = 10.0 / std::log(10.0);
  double acc = 0.0;
  for (std::size_t t = 0; t < org.size(); ++t) {
    if (org[t].order != rep.order || syn[t].order != rep.order) throw Error("mcd: order mismatch");
    double ss = 0.0;
    for (int m = 1; m <= rep.order; ++m) {
      const double d = org[t].coeffs[static_cast<std::size_t>(m)] - syn[t].coeffs[static_cast<std::size_t>(m)];
      ss += d * d;
    }
    const double v = scale * std::sqrt(ss);
    rep.per_frame_mcd_db.push_back(v);
    acc += v;
  }
  rep.mean_mcd_db = acc / static_cast<double>(rep.n_frames);
  return rep;
}

// Root-mean-square F0 difference in Hz.
inline double f0_rmse(const ContF0Track& ref, const ContF0Track& test) {
  if (ref.f0_hz.size() != test.f0_hz.size()) throw Error("f0_rmse: length mismatch");
  if (ref.f0_hz.empty()) throw Error("f0_rmse: empty tracks");
  double acc = 0.0;
  for (std::size_t t = 0; t < ref.f0_hz.size(); ++t) {
    const double d = ref.f0_hz[t] - test.f0_hz[t];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(ref.f0_hz.size()));
}

}  // namespace gmwf
