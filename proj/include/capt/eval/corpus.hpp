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

// Toy L1/L2 corpora and their on-disk manifests.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "capt/error_injector.hpp"
#include "capt/recognizer.hpp"
#include "capt/speech_sim.hpp"

namespace capt::eval {

enum class Split { kTrainL1, kTrainL2, kTestL2 };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

/// One labelled utterance. `canonical` is the lexicon transcription the
/// detector is given; the speech may realize a variant or an error.
struct CorpusEntry {
  std::string path;  // utterance stem, relative to the manifest directory
  PhonemeSeq canonical;
  ErrorLabels labels;
  std::vector<int> word_distance;  // phoneme distance of each realized word, 0 if correct
  Provenance provenance = Provenance::kOriginal;
  int speaker = 0;
  std::uint64_t seed = 0;
  Split split = Split::kTrainL1;
};

class CorpusManifest {
 public:
  static constexpr int kSchemaVersion = 1;
  static constexpr const char* kFileName = "manifest.json";

  std::vector<CorpusEntry> entries;
  std::vector<UtterancePtr> speech;  // parallel to entries

  void add(CorpusEntry entry, UtterancePtr utterance);
  std::vector<std::size_t> indices(Split split) const;
  /// Throws InvalidInput when a test speaker also occurs in a training split.
  void check_speaker_disjoint() const;

  /// Writes manifest.json plus one .bin/.json pair per distinct path.
  void save(const std::filesystem::path& dir, const PhonemeInventory& inventory) const;
  /// Reads and validates: schema version, resolvable paths, utterance file
  /// count, speaker disjointness.
  static CorpusManifest load(const std::filesystem::path& dir, const PhonemeInventory& inventory);
};

struct ToyCorpusConfig {
  int l1_speakers = 40;
  int l2_train_speakers = 8;
  int l2_test_speakers = 8;
  int l1_utterances = 1200;
  int l2_train_utterances = 200;
  int l2_test_utterances = 600;
  int max_words = 3;
  double l1_timbre = 0.6;
  double l2_timbre = 1.2;
  double variant_rate = 0.5;     // words with variants use a non-canonical one
  double l2_error_rate = 0.3;    // per word
  double systematic_rate = 0.7;  // substitutions following the L2 confusion map
  /// L1 speakers also read pseudo-words outside the lexicon: this many
  /// distinct ones, each word slot drawing from them with `pseudo_word_rate`.
  int pseudo_words = 0;
  double pseudo_word_rate = 0.0;
  /// Relative frequency of 1, 2, 3 and 4 substituted phonemes in an error.
  std::array<double, 4> severity_weights{0.4, 0.3, 0.2, 0.1};
  std::uint64_t seed = 1;

  void validate() const;
};

/// The L2 confusion map: each vowel moves to the next vowel quality with the
/// same stress, each consonant to the next consonant.
PhonemeId l2_confusion(PhonemeId p, const PhonemeInventory& inventory);

/// `count` distinct pronounceable words absent from the lexicon: one to three
/// (C)V(C) syllables with a single primary stress.
std::vector<std::vector<PhonemeId>> pseudo_words(const Lexicon& lexicon, int count,
                                                 std::uint64_t seed);

/// L1 speakers read correctly (possibly a variant); L2 speakers add word
/// errors of 1 to 4 substitutions that never coincide with a variant.
CorpusManifest generate_toy_corpus(const Synthesizer& synth, const Lexicon& lexicon,
                                   const ToyCorpusConfig& cfg);

}  // namespace capt::eval
