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

// Small synthetic corpora for model tests.

#pragma once

#include <memory>
#include <vector>

#include "capt/recognizer.hpp"
#include "capt/speech_sim.hpp"

namespace capt::testing {

inline const Lexicon& toy_lexicon() {
  static const Lexicon lex =
      Lexicon::load_file(asset_dir() + "/lexicon.tsv", PhonemeInventory::standard());
  return lex;
}

/// 1..max_words random lexicon words, any variant.
inline PhonemeSeq random_text(Rng& rng, int max_words) {
  const auto& entries = toy_lexicon().entries();
  std::vector<std::vector<PhonemeId>> ws;
  const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_words)));
  for (int w = 0; w < n; ++w) {
    const auto& e = entries[rng.index(entries.size())];
    ws.push_back(e.variants[rng.index(e.variants.size())]);
  }
  return PhonemeSeq::from_words(ws);
}

inline std::vector<UtterancePtr> toy_corpus(const Synthesizer& synth, int count, int speakers,
                                            std::uint64_t seed, int max_words = 3,
                                            double isolated_phonemes = 0.0) {
  Rng rng(seed);
  std::vector<SpeakerProfile> voices;
  for (int s = 0; s < speakers; ++s)
    voices.push_back(speakers == 1 ? tts_speaker() : random_speaker(s, 0.6, rng));
  std::vector<UtterancePtr> out;
  for (int i = 0; i < count; ++i) {
    const auto text =
        rng.bernoulli(isolated_phonemes)
            ? PhonemeSeq::single_word({static_cast<PhonemeId>(rng.index(24))})
            : random_text(rng, max_words);
    const auto& voice = voices[rng.index(voices.size())];
    out.push_back(std::make_shared<const Utterance>(synth.synthesize(text, voice, rng.next_u64())));
  }
  return out;
}

}  // namespace capt::testing
