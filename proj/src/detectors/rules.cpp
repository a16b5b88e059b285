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

#include <algorithm>
#include <cmath>

#include "capt/core/error.hpp"
#include "capt/detectors.hpp"

namespace capt {

WordErrorProbs WordErrorProbs::make(std::vector<double> probs, double threshold) {
  WordErrorProbs out;
  out.threshold = threshold;
  out.decisions.reserve(probs.size());
  for (double p : probs) {
    require(std::isfinite(p), "word error probability is not finite");
    out.decisions.push_back(p > threshold ? 1 : 0);
  }
  out.probs = std::move(probs);
  return out;
}

int WordErrorProbs::flagged() const {
  return static_cast<int>(std::count(decisions.begin(), decisions.end(), 1));
}

WordErrorProbs detect_prnolik(const RecognitionResult& recognizer_out, const PhonemeSeq& r) {
  require(!r.empty(), "detect_prnolik: empty canonical sequence");
  const auto touched = words_touched(align(r.phonemes(), recognizer_out.decoded.phonemes()), r);
  return WordErrorProbs::make(std::vector<double>(touched.begin(), touched.end()), 0.5);
}

std::vector<double> prlik_scores(const RecognitionResult& recognizer_out, const PhonemeSeq& r) {
  require(!r.empty(), "detect_prlik: empty canonical sequence");
  const auto& decoded = recognizer_out.decoded.phonemes();
  const auto& lik = recognizer_out.per_phoneme_likelihood;
  require(lik.size() == decoded.size(), "detect_prlik: likelihoods do not match the decode");
  std::vector<double> best(r.word_count(), 1.0);
  const Alignment al = align(r.phonemes(), decoded);
  int last_a = -1;
  for (const auto& op : al.ops) {
    const int w = op.a_pos >= 0 ? r.word_of(op.a_pos) : (last_a >= 0 ? r.word_of(last_a) : 0);
    const double v = op.op == EditOp::kMatch ? lik[op.b_pos] : 0.0;
    best[w] = std::min(best[w], v);
    if (op.a_pos >= 0) last_a = op.a_pos;
  }
  for (double& b : best) b = 1.0 - b;
  return best;
}

WordErrorProbs detect_prlik(const RecognitionResult& recognizer_out, const PhonemeSeq& r,
                            double threshold) {
  return WordErrorProbs::make(prlik_scores(recognizer_out, r), threshold);
}

WordErrorProbs detect_prpm(const RecognitionResult& recognizer_out, const PMScore& pm_score,
                           const PhonemeSeq& r, double threshold) {
  require(static_cast<int>(pm_score.per_word_pi.size()) == r.word_count(),
          "detect_prpm: pronunciation score lacks a per-word factorization");
  auto scores = prlik_scores(recognizer_out, r);
  for (int w = 0; w < r.word_count(); ++w) {
    const double pi = std::clamp(pm_score.per_word_pi[w], 0.0, 1.0);
    scores[w] = std::sqrt(scores[w] * (1.0 - pi));
  }
  return WordErrorProbs::make(std::move(scores), threshold);
}

}  // namespace capt
