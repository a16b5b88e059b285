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

// Lexical stress error detection on isolated words: vowel-anchored
// syllabification, prosodic feature extraction, attention and nucleus-mean
// syllable classifiers, and generation of stress-shifted training words.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "capt/error_injector.hpp"
#include "capt/nn/tape.hpp"
#include "capt/speech_sim.hpp"

namespace capt {

/// Phoneme range [start, end) of one syllable and the index of its vowel.
struct Syllable {
  int start = 0;
  int end = 0;
  int nucleus = 0;
  bool operator==(const Syllable&) const = default;
};

/// One syllable per vowel; consonants join the syllable on their left, and
/// leading consonants join the first syllable. Throws InvalidInput for a
/// word without a vowel.
std::vector<Syllable> syllabify(const std::vector<PhonemeId>& word,
                                const PhonemeInventory& inventory);

/// Stress digit of each syllable nucleus.
std::vector<int> stress_pattern(const std::vector<PhonemeId>& word,
                                const PhonemeInventory& inventory);

/// Same word with the primary stress moved to syllable `to`; the old
/// primary becomes unstressed.
std::vector<PhonemeId> move_stress(const std::vector<PhonemeId>& word, int to,
                                   const PhonemeInventory& inventory);

struct SyllableFeatures {
  std::vector<Syllable> syllables;
  std::vector<int> canonical_stress;  // digit per syllable, exactly one 1
  std::vector<PhonemeId> phonemes;
  std::vector<int> durations;                    // frames per phoneme
  std::vector<std::pair<int, int>> frame_spans;  // per syllable
  std::vector<std::pair<int, int>> nucleus_spans;
  Eigen::VectorXd f0;      // frame track
  Eigen::VectorXd energy;  // frame track
  std::vector<double> mean_f0, mean_energy;  // per syllable
  std::vector<double> nucleus_f0, nucleus_energy;

  int syllable_count() const { return static_cast<int>(syllables.size()); }
};

/// Slices the prosodic tracks of a one-word utterance by syllable. `spans`
/// are per-phoneme frame spans covering the utterance.
SyllableFeatures extract_features(
    const Utterance& u, const PhonemeSeq& r, const std::vector<std::pair<int, int>>& spans,
    const PhonemeInventory& inventory = PhonemeInventory::standard());
/// Spans from the synthesizer's forced alignment.
SyllableFeatures extract_features(const Synthesizer& synth, const Utterance& u,
                                  const PhonemeSeq& r);

/// Isolated word with its realized stress.
struct StressExample {
  SyllableFeatures features;
  std::vector<int> realized_stress;  // digit per syllable
  std::shared_ptr<const Utterance> speech;
  PhonemeSeq canonical;
  Provenance provenance = Provenance::kOriginal;

  /// Syllables whose realized class differs from the canonical one.
  std::vector<std::uint8_t> syllable_errors(bool ternary = false) const;
  bool word_error(bool ternary = false) const;
};

/// Multi-syllable lexicon pronunciations.
std::vector<std::vector<PhonemeId>> multisyllabic_words(const Lexicon& lexicon);

/// `count` sampled words, each synthesized by the TTS voice once with its
/// canonical stress and once with the primary stress moved to a random
/// other syllable: 2 * count examples.
std::vector<StressExample> generate_stress_errors(const Synthesizer& synth, const Lexicon& lexicon,
                                                  int count, std::uint64_t seed);

/// Toy learner recordings: each word is read by one of `speakers` voices
/// with strong prosodic jitter and a stress contrast drawn uniformly from
/// [contrast_min, contrast_max]. A fraction `error_rate` of the words
/// (rounded) have their stress moved.
struct NaturalStressConfig {
  int count = 200;
  int speakers = 6;
  double error_rate = 0.1;
  double timbre_norm = 1.2;
  double contrast_min = 0.0;
  double contrast_max = 1.0;
  SynthConfig synth{0.3, 1.5, 0.12, 0.12, 0.15};
  std::uint64_t seed = 1;
};
std::vector<StressExample> natural_stress_corpus(const Synthesizer& synth, const Lexicon& lexicon,
                                                 const NaturalStressConfig& cfg);

struct StressConfig {
  bool attention = true;
  bool ternary = false;
  int embedding = 6;
  int hidden = 16;
  int attention_width = 8;
  int epochs = 30;
  int batch = 8;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;
};

struct StressModel {
  nn::ParameterSet params;
  StressConfig config;
  std::vector<double> loss_trace;

  static StressModel init(const PhonemeInventory& inventory, const StressConfig& cfg);
  int classes() const { return config.ternary ? 3 : 2; }
  /// Per-syllable class logits (syllables x classes).
  nn::Var logits(nn::Tape& tape, const SyllableFeatures& f);
  /// Cross-entropy against the realized classes.
  nn::Var loss(nn::Tape& tape, const StressExample& ex);
  /// Per-syllable class distributions.
  Eigen::MatrixXd predict(const SyllableFeatures& f) const;

  void save(const std::string& stem, const PhonemeInventory& inventory) const;
  static StressModel load(const std::string& stem, const PhonemeInventory& inventory);
};

/// Throws TrainingFailure when the corpus lacks either error or correct
/// words.
StressModel train_stress_model(const std::vector<StressExample>& corpus,
                               const PhonemeInventory& inventory, const StressConfig& cfg);

double gradient_check(StressModel& model, const std::vector<StressExample>& batch);

struct StressLabels {
  std::vector<int> canonical;   // class per syllable
  std::vector<int> estimated;   // most probable class
  std::vector<double> error_probs;  // 1 - p(canonical class)
  std::vector<std::uint8_t> errors;
  double threshold = 0.5;

  bool word_error() const;
  /// Max error probability over syllables.
  double word_score() const;
};

/// Flags syllable s iff estimated[s] != canonical[s] and error_probs[s] >
/// threshold.
StressLabels apply_stress_rule(std::vector<int> canonical, std::vector<int> estimated,
                               std::vector<double> error_probs, double threshold);
StressLabels detect_stress_errors(const StressModel& model, const SyllableFeatures& features,
                                  double threshold);

/// Binary (primary vs not) or ternary class of a stress digit.
int stress_class(int digit, bool ternary);

}  // namespace capt
