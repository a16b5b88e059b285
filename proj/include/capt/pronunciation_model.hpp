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

// Pronunciation model: an attention encoder-decoder over phonemes giving
// p(r' | r) for one word, and the marginal likelihood
//   pi = sum over r_o of p(r_o | o) * p(r' = r_o | r)
// over recognizer hypotheses r_o.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capt/error_injector.hpp"
#include "capt/nn/tape.hpp"
#include "capt/phoneme_core.hpp"
#include "capt/recognizer.hpp"

namespace capt {

/// Canonical and recognized phonemes of one native utterance.
struct PMPair {
  PhonemeSeq canonical;
  std::vector<PhonemeId> recognized;
};

/// Word-level training pair with its multiplicity.
struct PMWordPair {
  std::vector<PhonemeId> canonical;
  std::vector<PhonemeId> realized;
  double weight = 1.0;
};

struct PMConfig {
  int embedding = 16;
  int hidden = 32;
  int epochs = 100;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;
};

class PMModel {
 public:
  /// Untrained model; its output layer is zero so every step is uniform.
  static PMModel init(const PhonemeInventory& inventory, const PMConfig& cfg);

  int vocabulary() const { return vocabulary_; }  // phonemes + end symbol
  int end_symbol() const { return vocabulary_ - 1; }
  const PMConfig& config() const { return config_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  nn::ParameterSet& params() { return params_; }

  /// Teacher-forced next-symbol logits, (|realized| + 1) x vocabulary.
  nn::Var step_logits(nn::Tape& tape, const std::vector<PhonemeId>& canonical,
                      const std::vector<PhonemeId>& realized);
  /// -log p(realized | canonical), end symbol included.
  nn::Var nll(nn::Tape& tape, const std::vector<PhonemeId>& canonical,
              const std::vector<PhonemeId>& realized);
  /// log p(realized | canonical) for one word.
  double log_prob(const std::vector<PhonemeId>& canonical,
                  const std::vector<PhonemeId>& realized) const;
  /// Next-symbol distributions under teacher forcing.
  Eigen::MatrixXd step_distributions(const std::vector<PhonemeId>& canonical,
                                     const std::vector<PhonemeId>& realized) const;

  void save(const std::string& stem, const PhonemeInventory& inventory) const;
  static PMModel load(const std::string& stem, const PhonemeInventory& inventory);

 private:
  friend PMModel train_pm(const std::vector<PMWordPair>&, const PhonemeInventory&,
                          const PMConfig&);
  nn::ParameterSet params_;
  PMConfig config_;
  int vocabulary_ = 0;
  std::vector<double> loss_trace_;
};

/// Passes native speech through the recognizer. One pair per example; the
/// canonical side is the example's canonical sequence.
std::vector<PMPair> build_pm_corpus(const RecognizerModel& recognizer,
                                    const std::vector<TrainingExample>& native);

/// Splits utterance pairs into per-word pairs (aligned to the canonical
/// words) and merges duplicates.
std::vector<PMWordPair> word_pairs(const std::vector<PMPair>& pairs);

/// Weighted teacher-forced cross-entropy training. Throws TrainingFailure on
/// divergence.
PMModel train_pm(const std::vector<PMWordPair>& pairs, const PhonemeInventory& inventory,
                 const PMConfig& cfg);

/// One recognizer hypothesis with its lattice probability p(r_o | o).
struct Hypothesis {
  std::vector<PhonemeId> phonemes;
  double prob = 0.0;
};

/// Frames whose runner-up phoneme reaches `min_second` branch between their
/// two best symbols (the `max_branching` most ambiguous ones); all other
/// frames keep their best symbol. Probabilities are renormalized per frame.
struct LatticeOptions {
  double min_second = 1e-3;
  int max_branching = 12;
};

class HypothesisLattice {
 public:
  HypothesisLattice(const PhonemePosteriorgram& pg, const LatticeOptions& options = {});

  int branching_frames() const { return static_cast<int>(branch_frames_.size()); }
  /// Number of frame paths (2^branching).
  std::uint64_t path_count() const { return std::uint64_t{1} << branch_frames_.size(); }
  /// Up to `k` distinct collapsed hypotheses in best-path-first order, each
  /// weighted by the total lattice probability of all paths that produce it.
  std::vector<Hypothesis> top_k(int k) const;
  /// Every distinct hypothesis of the lattice.
  std::vector<Hypothesis> all() const;
  /// Total lattice probability of the paths collapsing to `labels`.
  double probability(const std::vector<PhonemeId>& labels) const;
  /// The frame path selecting the runner-up at the given branching frames.
  std::vector<int> path(std::uint64_t mask) const;
  /// Probability of a single frame path.
  double path_probability(std::uint64_t mask) const;

  const Eigen::MatrixXd& masked() const { return masked_; }
  int blank() const { return blank_; }

 private:
  Eigen::MatrixXd masked_;  // renormalized lattice distribution, T x C
  std::vector<int> best_, second_;
  std::vector<int> branch_frames_;
  int blank_ = 0;
};

struct PMScore {
  double pi = 0.0;
  double log_pi = 0.0;
  std::vector<double> per_word_pi;
  int hypotheses = 0;
};

struct ScoreOptions {
  int top_k = 8;
  bool exact = false;  // sum over every lattice hypothesis (at most 2^12 paths)
  LatticeOptions lattice;
};

/// Probability of `realized` under the model, factorized over the words of
/// `r` (the realization is split by aligning it to r).
double sequence_prob(const PMModel& pm, const PhonemeSeq& r,
                     const std::vector<PhonemeId>& realized, std::vector<double>* per_word);

/// pi restricted to the top-K lattice hypotheses, or summed over all of them
/// in exact mode. per_word_pi[w] marginalizes the word-w factor alone.
PMScore score(const PMModel& pm, const RecognitionResult& recognizer_out, const PhonemeSeq& r,
              const ScoreOptions& options = {});

}  // namespace capt
