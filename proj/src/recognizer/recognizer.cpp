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

#include "capt/recognizer.hpp"

#include <cmath>
#include <numeric>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"
#include "capt/nn/checkpoint.hpp"
#include "capt/nn/ctc.hpp"
#include "capt/nn/optim.hpp"

namespace capt {

using nn::Var;

void add_encoder_params(nn::ParameterSet& params, const std::string& prefix,
                        const EncoderConfig& cfg, Rng& rng) {
  require(cfg.context >= 0 && cfg.hidden >= 1 && cfg.layers >= 1, "bad encoder configuration");
  int in = (2 * cfg.context + 1) * kFeatureDim;
  for (int k = 0; k < cfg.layers; ++k) {
    params.add(prefix + ".w" + std::to_string(k), nn::glorot(in, cfg.hidden, rng));
    params.add(prefix + ".b" + std::to_string(k), nn::Matrix::Zero(1, cfg.hidden));
    in = cfg.hidden;
  }
}

Var encode_frames(nn::Tape& tape, nn::ParameterSet& params, const std::string& prefix,
                  const EncoderConfig& cfg, const FrameMatrix& frames) {
  Var h = nn::context_window(tape.constant(frames), cfg.context);
  for (int k = 0; k < cfg.layers; ++k) {
    const Var w = tape.param(params.get(prefix + ".w" + std::to_string(k)));
    const Var b = tape.param(params.get(prefix + ".b" + std::to_string(k)));
    h = nn::tanh(nn::add_row(nn::matmul(h, w), b));
  }
  return h;
}

RecognizerModel RecognizerModel::init(const PhonemeInventory& inventory,
                                      const RecognizerConfig& cfg) {
  RecognizerModel m;
  m.config = cfg;
  m.classes = inventory.size() + 1;
  Rng rng(derive_seed(cfg.seed, 0x707263));
  add_encoder_params(m.params, "enc", cfg.encoder, rng);
  m.params.add("prn.w", nn::Matrix::Zero(cfg.encoder.hidden, m.classes));
  m.params.add("prn.b", nn::Matrix::Zero(1, m.classes));
  return m;
}

Var RecognizerModel::logits(nn::Tape& tape, const FrameMatrix& frames) {
  const Var h = encode_frames(tape, params, "enc", config.encoder, frames);
  return nn::add_row(nn::matmul(h, tape.param(params.get("prn.w"))),
                     tape.param(params.get("prn.b")));
}

PhonemePosteriorgram RecognizerModel::posteriorgram(const FrameMatrix& frames) const {
  require(frames.rows() >= 1, "posteriorgram: utterance has no frames");
  nn::Tape tape;
  // Forward only: no backward pass ever touches the parameters here.
  auto& self = const_cast<RecognizerModel&>(*this);
  return {nn::softmax_rows(self.logits(tape, frames)).value()};
}

namespace {

double utterance_loss_and_grad(RecognizerModel& m, const Utterance& u, int blank) {
  nn::Tape tape;
  const Var loss = nn::ctc_loss(m.logits(tape, u.speech), u.canonical.phonemes(), blank);
  tape.backward(loss);
  return loss.scalar();
}

double mean_loss(RecognizerModel& m, const std::vector<UtterancePtr>& corpus, int blank) {
  double total = 0.0;
  for (const auto& u : corpus) {
    nn::Tape tape;
    total += nn::ctc_loss(m.logits(tape, u->speech), u->canonical.phonemes(), blank).scalar();
  }
  return total / static_cast<double>(corpus.size());
}

}  // namespace

void fit_recognizer(RecognizerModel& model, const std::vector<UtterancePtr>& corpus, int epochs) {
  require(!corpus.empty(), "train_recognizer: empty corpus");
  const int blank = model.classes - 1;
  if (model.loss_trace.empty()) model.loss_trace.push_back(mean_loss(model, corpus, blank));
  nn::Adam opt(model.params, nn::AdamConfig{model.config.learning_rate});
  Rng rng(derive_seed(model.config.seed, 0x6f7264 + model.loss_trace.size()));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double total = 0.0;
    int in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double loss = utterance_loss_and_grad(model, *corpus[order[k]], blank);
      if (!std::isfinite(loss)) {
        model.loss_trace.push_back(loss);
        throw TrainingFailure("recognizer training diverged", model.loss_trace);
      }
      total += loss;
      if (++in_batch == model.config.batch || k + 1 == order.size()) {
        opt.step(in_batch);
        in_batch = 0;
      }
    }
    model.loss_trace.push_back(total / static_cast<double>(corpus.size()));
  }
}

RecognizerModel train_recognizer(const std::vector<UtterancePtr>& corpus,
                                 const PhonemeInventory& inventory, const RecognizerConfig& cfg) {
  require(cfg.epochs >= 0 && cfg.batch >= 1, "bad recognizer training configuration");
  RecognizerModel m = RecognizerModel::init(inventory, cfg);
  if (cfg.epochs > 0) fit_recognizer(m, corpus, cfg.epochs);
  return m;
}

RecognitionResult decode_posteriorgram(PhonemePosteriorgram pg) {
  RecognitionResult out;
  const int blank = pg.blank();
  std::vector<PhonemeId> symbols;
  int prev = -1;
  double run_sum = 0.0;
  int run_len = 0;
  auto close_run = [&] {
    if (prev >= 0 && prev != blank) {
      symbols.push_back(prev);
      out.per_phoneme_likelihood.push_back(run_sum / run_len);
    }
  };
  for (int t = 0; t < pg.frames(); ++t) {
    Eigen::Index best = 0;
    pg.probs.row(t).maxCoeff(&best);
    const int k = static_cast<int>(best);
    if (k != prev) {
      close_run();
      prev = k;
      run_sum = 0.0;
      run_len = 0;
    }
    run_sum += pg.probs(t, k);
    ++run_len;
  }
  close_run();
  if (!symbols.empty()) out.decoded = PhonemeSeq::single_word(std::move(symbols));
  out.posteriorgram = std::move(pg);
  return out;
}

RecognitionResult recognize(const RecognizerModel& model, const Utterance& u) {
  require(u.frames() >= 1, "recognize: utterance has no frames");
  return decode_posteriorgram(model.posteriorgram(u.speech));
}

double ctc_score(const RecognizerModel& model, const Utterance& u,
                 const std::vector<PhonemeId>& labels) {
  const auto pg = model.posteriorgram(u.speech);
  return nn::ctc_log_likelihood(pg.probs.array().log().matrix(), labels, pg.blank());
}

double gradient_check(RecognizerModel& model, const std::vector<UtterancePtr>& batch) {
  require(!batch.empty(), "gradient_check: empty batch");
  const int blank = model.classes - 1;
  return nn::gradient_check(model.params, [&](nn::Tape& tape) {
    Var total = tape.constant(nn::Matrix::Zero(1, 1));
    for (const auto& u : batch)
      total = nn::add(total, nn::ctc_loss(model.logits(tape, u->speech),
                                          u->canonical.phonemes(), blank));
    return total;
  });
}

double phoneme_error_rate(const RecognizerModel& model, const std::vector<UtterancePtr>& corpus) {
  double edits = 0.0, total = 0.0;
  for (const auto& u : corpus) {
    const auto res = recognize(model, *u);
    edits += phoneme_distance(res.decoded.phonemes(), u->canonical.phonemes());
    total += u->canonical.size();
  }
  return total > 0 ? edits / total : 0.0;
}

void RecognizerModel::save(const std::string& stem, const PhonemeInventory& inventory) const {
  const auto& e = config.encoder;
  nn::save_checkpoint(stem, params,
                      {{"kind", "recognizer"},
                       {"inventory_hash", hex64(inventory.fingerprint())},
                       {"classes", classes},
                       {"encoder", {{"context", e.context}, {"hidden", e.hidden}, {"layers", e.layers}}},
                       {"epochs", config.epochs},
                       {"batch", config.batch},
                       {"learning_rate", config.learning_rate},
                       {"seed", config.seed},
                       {"loss_trace", loss_trace}});
}

RecognizerModel RecognizerModel::load(const std::string& stem, const PhonemeInventory& inventory) {
  auto [params, meta] = nn::load_checkpoint(stem, "recognizer");
  require(meta.at("inventory_hash").get<std::string>() == hex64(inventory.fingerprint()),
          "checkpoint '" + stem + "' was trained on another inventory");
  RecognizerModel m;
  m.params = std::move(params);
  m.classes = meta.at("classes").get<int>();
  const auto& e = meta.at("encoder");
  m.config.encoder = {e.at("context").get<int>(), e.at("hidden").get<int>(),
                      e.at("layers").get<int>()};
  m.config.epochs = meta.at("epochs").get<int>();
  m.config.batch = meta.at("batch").get<int>();
  m.config.learning_rate = meta.at("learning_rate").get<double>();
  m.config.seed = meta.at("seed").get<std::uint64_t>();
  m.loss_trace = meta.at("loss_trace").get<std::vector<double>>();
  return m;
}

}  // namespace capt
