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

// Phoneme-level error injection: perturbs a transcription while the speech it
// belongs to stays untouched, yielding labelled mispronunciation examples.

#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"
#include "capt/phoneme_core.hpp"
#include "capt/utterance.hpp"

namespace capt {

struct PerturbationConfig {
  double p_sub = 0.2;  // per phoneme
  double p_ins = 0.05;  // per position, after the phoneme
  double p_del = 0.05;  // per phoneme; never applied to one-phoneme words
  std::uint64_t seed = 0;

  static PerturbationConfig none(std::uint64_t seed = 0) { return {0.0, 0.0, 0.0, seed}; }
  static PerturbationConfig substitution_only(double p, std::uint64_t seed = 0) {
    return {p, 0.0, 0.0, seed};
  }
  bool is_identity() const { return p_sub == 0.0 && p_ins == 0.0 && p_del == 0.0; }
  void validate() const;
};

/// Raised when deletions empty a word.
class EmptyPerturbation : public Error {
 public:
  using Error::Error;
};

enum class Provenance { kOriginal, kP2P, kT2S, kS2S };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// {labels, speech, canonical} triple. Labels are aligned to `canonical`.
struct TrainingExample {
  ErrorLabels labels;
  std::shared_ptr<const Utterance> speech;
  PhonemeSeq canonical;
  Provenance provenance = Provenance::kOriginal;
};

/// `n` indices drawn uniformly with replacement from [0, corpus_size).
std::vector<std::size_t> sample_utterances(std::size_t corpus_size, int n, std::uint64_t seed);

/// Independently per position: delete with p_del, otherwise substitute with
/// p_sub by a uniformly drawn different phoneme; then insert a uniform random
/// phoneme after it with p_ins. Word spans follow the edits.
PhonemeSeq perturb(const PhonemeSeq& r, const PerturbationConfig& cfg,
                   const PhonemeInventory& inventory, Rng& rng);
PhonemeSeq perturb(const PhonemeSeq& r, const PerturbationConfig& cfg,
                   const PhonemeInventory& inventory);

/// {project_errors(r, r'), u, r'}. Retries up to three times when a
/// perturbation empties a word.
TrainingExample make_p2p_example(std::shared_ptr<const Utterance> u, const PhonemeSeq& r,
                                 const PerturbationConfig& cfg,
                                 const PhonemeInventory& inventory);

/// Perturbation with the bounded retry used by every generator.
PhonemeSeq perturb_with_retry(const PhonemeSeq& r, const PerturbationConfig& cfg,
                              const PhonemeInventory& inventory, Rng& rng);

}  // namespace capt
