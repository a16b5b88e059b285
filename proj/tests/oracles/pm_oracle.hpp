// Copyright 2026 The synthcapt Authors
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

// Brute-force CTC hypothesis marginalization for the pronunciation model
// tests, plus the posteriorgram generator they share.

#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "capt/core/rng.hpp"
#include "capt/recognizer.hpp"

namespace capt::oracle {

// Rows dominated by one class; a few frames carry a strong runner-up.
inline PhonemePosteriorgram random_posteriorgram(Rng& rng, const std::vector<PhonemeId>& near) {
  const int classes = PhonemeInventory::standard().size() + 1;
  const int T = 2 * static_cast<int>(near.size()) + 1;
  PhonemePosteriorgram pg{Eigen::MatrixXd::Zero(T, classes)};
  for (int t = 0; t < T; ++t) {
    const int top = t % 2 == 1 ? near[t / 2] : classes - 1;
    for (int k = 0; k < classes; ++k) pg.probs(t, k) = 1e-4 * rng.uniform();
    pg.probs(t, top) = 1.0;
    if (rng.bernoulli(0.5)) pg.probs(t, static_cast<int>(rng.index(classes))) += rng.uniform(0.05, 0.9);
    pg.probs.row(t) /= pg.probs.row(t).sum();
  }
  return pg;
}

// Independent marginalization: every combination of the two best symbols at
// the ambiguous frames, collapsed by hand, weighted by the product of the
// renormalized frame probabilities.
inline std::map<std::vector<PhonemeId>, double> brute_force_hypotheses(const PhonemePosteriorgram& pg,
                                                                double min_second) {
  const int T = pg.frames(), blank = pg.blank();
  std::vector<int> first(T), second(T);
  std::vector<double> q1(T), q2(T);
  std::vector<int> branching;
  for (int t = 0; t < T; ++t) {
    std::vector<int> idx(pg.classes());
    for (int k = 0; k < pg.classes(); ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return pg.probs(t, a) > pg.probs(t, b); });
    first[t] = idx[0];
    second[t] = idx[1];
    const double p1 = pg.probs(t, idx[0]), p2 = pg.probs(t, idx[1]);
    if (p2 >= min_second) {
      branching.push_back(t);
      q1[t] = p1 / (p1 + p2);
      q2[t] = p2 / (p1 + p2);
    }
  }
  std::map<std::vector<PhonemeId>, double> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << branching.size()); ++mask) {
    std::vector<int> frames = first;
    double p = 1.0;
    for (std::size_t i = 0; i < branching.size(); ++i) {
      const int t = branching[i];
      const bool take_second = (mask >> i) & 1U;
      if (take_second) frames[t] = second[t];
      p *= take_second ? q2[t] : q1[t];
    }
    std::vector<PhonemeId> collapsed;
    int prev = -1;
    for (int s : frames) {
      if (s != prev && s != blank) collapsed.push_back(s);
      prev = s;
    }
    out[collapsed] += p;
  }
  return out;
}

}  // namespace capt::oracle
