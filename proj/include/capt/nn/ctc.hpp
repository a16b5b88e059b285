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

// Connectionist temporal classification, computed in the log domain.
//
// Extended label sequence l' = (blank, l1, blank, l2, ..., lL, blank). The
// forward variable alpha_t(s) includes the emission at frame t, the backward
// variable beta_t(s) covers frames t+1..T-1 only, so for every t
//   p(l|x) = sum_s alpha_t(s) * beta_t(s)
// and the per-frame occupancy gamma_t(k) = sum_{s: l'_s = k} alpha*beta / p
// gives d(-log p)/d(logit_tk) = softmax_tk - gamma_t(k).

#pragma once

#include <span>
#include <vector>

#include "capt/nn/tape.hpp"

namespace capt::nn {

/// log p(labels | frames) from per-frame log-probabilities (T x C).
/// Returns -infinity when the labelling does not fit in T frames.
double ctc_log_likelihood(const Matrix& log_probs, std::span<const int> labels, int blank);

/// Negative log-likelihood of `labels` given unnormalized logits (T x C).
/// Throws InvalidInput for an empty labelling or one that cannot fit.
Var ctc_loss(const Var& logits, std::span<const int> labels, int blank);

/// Merges repeats, then removes blanks.
std::vector<int> ctc_collapse(std::span<const int> path, int blank);

/// Minimum frames needed to emit `labels` (one extra per adjacent repeat).
int ctc_min_frames(std::span<const int> labels);

}  // namespace capt::nn
