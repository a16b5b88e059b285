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

// CTC phoneme recognizer: a context-window frame encoder with a softmax over
// phonemes plus blank, greedy best-path decoding.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "capt/nn/tape.hpp"
#include "capt/phoneme_core.hpp"
#include "capt/utterance.hpp"

namespace capt {

using UtterancePtr = std::shared_ptr<const Utterance>;

struct EncoderConfig {
  int context = 4;  // frames on each side
  int hidden = 48;
  int layers = 2;
};

/// Adds "<prefix>.w<k>" / "<prefix>.b<k>" parameters.
void add_encoder_params(nn::ParameterSet& params, const std::string& prefix,
                        const EncoderConfig& cfg, Rng& rng);
/// T x hidden tanh encoding of the frames.
nn::Var encode_frames(nn::Tape& tape, nn::ParameterSet& params, const std::string& prefix,
                      const EncoderConfig& cfg, const FrameMatrix& frames);

/// T x (inventory + 1) row-stochastic matrix; the last column is the blank.
struct PhonemePosteriorgram {
  Eigen::MatrixXd probs;
  int frames() const { return static_cast<int>(probs.rows()); }
  int classes() const { return static_cast<int>(probs.cols()); }
  int blank() const { return classes() - 1; }
};

struct RecognitionResult {
  PhonemeSeq decoded;  // single word, no blanks
  std::vector<double> per_phoneme_likelihood;
  PhonemePosteriorgram posteriorgram;
};

struct RecognizerConfig {
  EncoderConfig encoder;
  int epochs = 20;
  int batch = 4;
  double learning_rate = 5e-3;
  std::uint64_t seed = 1;
};

struct RecognizerModel {
  nn::ParameterSet params;
  RecognizerConfig config;
  int classes = 0;  // inventory size + blank
  std::vector<double> loss_trace;  // mean CTC loss per epoch, initial first

  /// Untrained model with a zero output layer (uniform posteriors).
  static RecognizerModel init(const PhonemeInventory& inventory, const RecognizerConfig& cfg);
  nn::Var logits(nn::Tape& tape, const FrameMatrix& frames);
  PhonemePosteriorgram posteriorgram(const FrameMatrix& frames) const;
  std::size_t parameter_count() const { return params.scalar_count(); }

  void save(const std::string& stem, const PhonemeInventory& inventory) const;
  static RecognizerModel load(const std::string& stem, const PhonemeInventory& inventory);
};

/// Minimizes CTC loss against each utterance's canonical transcription.
/// Throws TrainingFailure on a non-finite loss.
RecognizerModel train_recognizer(const std::vector<UtterancePtr>& corpus,
                                 const PhonemeInventory& inventory, const RecognizerConfig& cfg);
/// Continues training an existing model.
void fit_recognizer(RecognizerModel& model, const std::vector<UtterancePtr>& corpus, int epochs);

/// Greedy decode; each emitted phoneme's likelihood is the mean posterior of
/// that phoneme over the frames of its run.
RecognitionResult recognize(const RecognizerModel& model, const Utterance& u);
RecognitionResult decode_posteriorgram(PhonemePosteriorgram pg);

/// log p(labels | u) under the model.
double ctc_score(const RecognizerModel& model, const Utterance& u,
                 const std::vector<PhonemeId>& labels);

/// Max relative error between CTC gradients and central differences over a
/// batch of utterances.
double gradient_check(RecognizerModel& model, const std::vector<UtterancePtr>& batch);

/// Fraction of edits needed to turn each decode into its transcription,
/// summed over the corpus.
double phoneme_error_rate(const RecognizerModel& model, const std::vector<UtterancePtr>& corpus);

}  // namespace capt
