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

// Word-level pronunciation error detectors: recognizer-based rules (with and
// without likelihoods or a pronunciation model), the jointly trained
// attention detector, and exact Bayesian enumeration under the toy
// synthesizer.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capt/error_injector.hpp"
#include "capt/pronunciation_model.hpp"
#include "capt/recognizer.hpp"
#include "capt/speech_sim.hpp"

namespace capt {

/// Per-word error probabilities with their thresholded decisions.
struct WordErrorProbs {
  std::vector<double> probs;
  double threshold = 0.5;
  std::vector<std::uint8_t> decisions;  // probs[w] > threshold

  static WordErrorProbs make(std::vector<double> probs, double threshold);
  int flagged() const;
};

/// Flags every word touched by an edit between the decode and r.
WordErrorProbs detect_prnolik(const RecognitionResult& recognizer_out, const PhonemeSeq& r);

/// Per-word score 1 - min over the word's phonemes of the likelihood of the
/// matching recognized phoneme (0 for an unmatched phoneme or an insertion).
std::vector<double> prlik_scores(const RecognitionResult& recognizer_out, const PhonemeSeq& r);
WordErrorProbs detect_prlik(const RecognitionResult& recognizer_out, const PhonemeSeq& r,
                            double threshold);

/// Threshold at which PR-LIK decisions coincide with PR-NOLIK: every matched
/// likelihood is a frame-run mean of an argmax posterior, hence above
/// 1 / classes.
inline constexpr double kPrlikNolikThreshold = 1.0 - 1e-9;

/// sqrt(prlik_w * (1 - per_word_pi_w)).
WordErrorProbs detect_prpm(const RecognitionResult& recognizer_out, const PMScore& pm_score,
                           const PhonemeSeq& r, double threshold);

// ---- jointly trained detector ----------------------------------------------

struct WeaklySConfig {
  EncoderConfig encoder;
  int embedding = 16;
  int hidden = 32;      // phoneme-side width
  int attention = 32;   // key/query width
  double location_width = 0.5;  // attention prior width, in phoneme durations
  double lambda = 0.5;  // weight of the recognition loss
  int epochs = 12;            // combined L1 and L2 training
  int finetune_epochs = 8;    // L2 adaptation
  int batch = 8;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;
  // Ablation switches.
  bool synthetic_errors = true;  // keep generated examples in the L1 set
  bool l2_adapt = true;          // run the L2 adaptation phase
  bool l1l2_train = true;        // run the combined phase
};

/// Training data: transcribed L1 speech (including generated examples) and
/// word-labelled L2 speech.
struct WeaklySCorpus {
  std::vector<TrainingExample> l1;
  std::vector<TrainingExample> l2;
};

struct MDNModel {
  nn::ParameterSet params;
  WeaklySConfig config;
  int classes = 0;  // recognizer classes including blank
  std::vector<double> durations;   // nominal frames per phoneme (attention prior)
  std::vector<double> loss_trace;  // mean loss per epoch, initial first

  static MDNModel init(const PhonemeInventory& inventory, const WeaklySConfig& cfg);

  /// Per-word error logits (W x 1) for speech and canonical phonemes.
  nn::Var word_logits(nn::Tape& tape, const FrameMatrix& frames, const PhonemeSeq& r);
  /// Recognition-head logits (T x classes).
  nn::Var recognizer_logits(nn::Tape& tape, const FrameMatrix& frames);
  /// Word cross-entropy plus lambda times CTC against `transcript` (skipped
  /// when the transcript is empty or lambda is 0).
  nn::Var loss(nn::Tape& tape, const TrainingExample& ex,
               const std::vector<PhonemeId>& transcript, double lambda);

  void save(const std::string& stem, const PhonemeInventory& inventory) const;
  static MDNModel load(const std::string& stem, const PhonemeInventory& inventory);
};

/// Combined phase on L1 (with the recognition loss) plus L2, then L2
/// adaptation with the word loss alone. Throws TrainingFailure when the
/// word labels hold a single class or the loss diverges.
MDNModel train_weakly_s(const WeaklySCorpus& corpus, const PhonemeInventory& inventory,
                        const WeaklySConfig& cfg);

WordErrorProbs detect_weakly_s(const MDNModel& model, const Utterance& u, const PhonemeSeq& r,
                               double threshold = 0.5);

/// Max relative error between the joint-loss gradients and central
/// differences (step 1e-4) over the given examples. The recognition
/// posteriors feeding the detection head are held fixed, as in training.
double gradient_check(MDNModel& model, const std::vector<TrainingExample>& batch, double lambda);

// ---- Bayesian enumeration --------------------------------------------------

struct BayesPrior {
  double rho = 0.1;  // per-word prior error probability
};

/// Generative assumptions: erroneous words are substitution-only
/// perturbations conditioned on differing from the canonical word; frames
/// are the speaker-shifted prototypes plus isotropic Gaussian band noise
/// over fixed phoneme spans.
struct BayesConfig {
  double p_sub = 0.2;
  double sigma = 0.1;
  int max_exact_words = 3;
  int mc_samples = 4000;
  std::uint64_t seed = 1;
};

struct BayesPosterior {
  WordErrorProbs marginals;
  /// Exact mode: posterior of every error pattern, indexed by the bit mask
  /// with word w at bit w. Empty in Monte-Carlo mode.
  std::vector<double> joint;
  /// Monte-Carlo standard errors of the marginals (zeros when exact).
  std::vector<double> std_error;
  bool exact = true;
};

/// Per-word log p(s_w | e_w = 0) and log p(s_w | e_w = 1), up to a shared
/// constant.
struct WordEvidence {
  std::vector<double> log_correct;
  std::vector<double> log_error;
};
WordEvidence bayes_word_evidence(const Synthesizer& synth, const Utterance& u,
                                 const PhonemeSeq& r, const BayesConfig& cfg);

/// Exact posterior for up to cfg.max_exact_words words, importance sampling
/// from the prior beyond that.
BayesPosterior bayes_enumerate(const Synthesizer& synth, const Utterance& u, const PhonemeSeq& r,
                               const BayesPrior& prior, const BayesConfig& cfg = {});

}  // namespace capt
