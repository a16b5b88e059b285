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

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"
#include "capt/detectors.hpp"
#include "capt/nn/checkpoint.hpp"
#include "capt/nn/ctc.hpp"
#include "capt/nn/optim.hpp"

namespace capt {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EncoderConfig, context, hidden, layers)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WeaklySConfig, encoder, embedding, hidden, attention,
                                   location_width, lambda, epochs, finetune_epochs, batch,
                                   learning_rate, seed, synthetic_errors, l2_adapt, l1l2_train)

namespace {

using nn::Var;

struct Heads {
  Var words;       // W x 1 logits
  Var recognizer;  // T x classes logits
};

// Gaussian preference for frames near the phoneme's expected position, with
// positions and widths taken from nominal durations. `width` is measured in
// durations of the phoneme itself.
nn::Matrix location_prior(const std::vector<double>& durations, const PhonemeSeq& r, int frames,
                          double width) {
  const int n = r.size();
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = durations[static_cast<std::size_t>(r[i])];
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  nn::Matrix m(n, frames);
  double start = 0.0;
  for (int i = 0; i < n; ++i) {
    const double di = d[static_cast<std::size_t>(i)];
    const double center = (start + 0.5 * di) / total;
    const double sd = width * di / total;
    for (int t = 0; t < frames; ++t) {
      const double x = center - (t + 0.5) / frames;
      m(i, t) = -x * x / (2.0 * sd * sd);
    }
    start += di;
  }
  return m;
}

// `frozen` replaces the recognition posteriors fed to the detection head.
Heads forward(MDNModel& m, nn::Tape& tape, const FrameMatrix& frames, const PhonemeSeq& r,
              const nn::Matrix* frozen = nullptr) {
  require(r.word_count() >= 1, "weakly-s: canonical sequence has no words");
  require(frames.rows() >= 1, "weakly-s: utterance has no frames");
  for (PhonemeId p : r.phonemes())
    require(p >= 0 && p < m.classes - 1, "weakly-s: phoneme outside the inventory");
  const auto& cfg = m.config;
  auto P = [&](const char* name) { return tape.param(m.params.get(name)); };

  const Var h = encode_frames(tape, m.params, "enc", cfg.encoder, frames);
  const Var prn = nn::add_row(nn::matmul(h, P("prn.w")), P("prn.b"));
  const Var post =
      frozen != nullptr ? tape.constant(*frozen) : nn::softmax_rows(nn::detach(prn));
  const Var frame_parts[] = {h, post};
  const Var feats = nn::concat_cols(frame_parts);
  const Var keys = nn::matmul(feats, P("att.k"));

  const Var emb = nn::gather_rows(P("emb"), r.phonemes());
  const Var ph = nn::tanh(nn::add_row(nn::matmul(nn::context_window(emb, 1), P("ph.w")), P("ph.b")));
  const Var query = nn::matmul(ph, P("att.q"));
  const Var scores = nn::add(
      nn::scale(nn::matmul(query, nn::transpose(keys)), 1.0 / std::sqrt(cfg.attention)),
      tape.constant(location_prior(m.durations, r, static_cast<int>(frames.rows()), cfg.location_width)));
  const Var alpha = nn::softmax_rows(scores);
  const Var context = nn::matmul(alpha, feats);
  const Var match = nn::pick(nn::matmul(alpha, post), r.phonemes());

  const Var parts[] = {ph, context, match};
  const Var z = nn::tanh(nn::add_row(nn::matmul(nn::concat_cols(parts), P("mdn.w")), P("mdn.b")));
  const Var phone_logits = nn::add_row(nn::matmul(z, P("mdn.o")), P("mdn.ob"));
  std::vector<std::pair<int, int>> spans;
  for (const auto& s : r.spans()) spans.emplace_back(s.start, s.end);
  return {nn::segment_max(phone_logits, spans), prn};
}

nn::Matrix posteriors(MDNModel& m, const FrameMatrix& frames) {
  nn::Tape tape;
  return nn::softmax_rows(m.recognizer_logits(tape, frames)).value();
}

Var joint_loss(MDNModel& m, nn::Tape& tape, const TrainingExample& ex,
               const std::vector<PhonemeId>& transcript, double lambda,
               const nn::Matrix* frozen);

std::vector<double> word_targets(const TrainingExample& ex) {
  require(ex.labels.word_errors.size() == static_cast<std::size_t>(ex.canonical.word_count()),
          "weakly-s: labels do not match the canonical words");
  return {ex.labels.word_errors.begin(), ex.labels.word_errors.end()};
}

struct Item {
  const TrainingExample* ex;
  std::vector<PhonemeId> transcript;  // empty for untranscribed speech
};

double run_epoch(MDNModel& m, nn::Adam* opt, std::vector<Item>& items, double lambda, Rng* rng) {
  if (rng != nullptr)
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng->index(i)]);
  double total = 0.0;
  int in_batch = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    nn::Tape tape;
    const Var loss = m.loss(tape, *items[k].ex, items[k].transcript, lambda);
    const double v = loss.scalar();
    if (!std::isfinite(v)) {
      m.loss_trace.push_back(v);
      throw TrainingFailure("weakly-s training diverged", m.loss_trace);
    }
    total += v;
    if (opt == nullptr) continue;
    tape.backward(loss);
    if (++in_batch == m.config.batch || k + 1 == items.size()) {
      opt->step(in_batch);
      in_batch = 0;
    }
  }
  return total / static_cast<double>(items.size());
}

std::vector<double> nominal_durations(const PhonemeInventory& inventory) {
  std::vector<double> d;
  for (PhonemeId p = 0; p < inventory.size(); ++p)
    d.push_back(prosody_targets(inventory, p).duration);
  return d;
}

}  // namespace

MDNModel MDNModel::init(const PhonemeInventory& inventory, const WeaklySConfig& cfg) {
  require(cfg.embedding >= 1 && cfg.hidden >= 1 && cfg.attention >= 1 && cfg.batch >= 1 &&
              cfg.location_width > 0.0 && cfg.lambda >= 0.0,
          "bad weakly-s configuration");
  MDNModel m;
  m.config = cfg;
  m.classes = inventory.size() + 1;
  m.durations = nominal_durations(inventory);
  Rng rng(derive_seed(cfg.seed, 0x6d646e));
  add_encoder_params(m.params, "enc", cfg.encoder, rng);
  const int feat = cfg.encoder.hidden + m.classes;
  m.params.add("prn.w", nn::Matrix::Zero(cfg.encoder.hidden, m.classes));
  m.params.add("prn.b", nn::Matrix::Zero(1, m.classes));
  m.params.add("att.k", nn::glorot(feat, cfg.attention, rng));
  m.params.add("emb", nn::gaussian(inventory.size(), cfg.embedding, 0.5, rng));
  m.params.add("ph.w", nn::glorot(3 * cfg.embedding, cfg.hidden, rng));
  m.params.add("ph.b", nn::Matrix::Zero(1, cfg.hidden));
  m.params.add("att.q", nn::glorot(cfg.hidden, cfg.attention, rng));
  m.params.add("mdn.w", nn::glorot(cfg.hidden + feat + 1, cfg.hidden, rng));
  m.params.add("mdn.b", nn::Matrix::Zero(1, cfg.hidden));
  m.params.add("mdn.o", nn::Matrix::Zero(cfg.hidden, 1));
  m.params.add("mdn.ob", nn::Matrix::Zero(1, 1));
  return m;
}

Var MDNModel::word_logits(nn::Tape& tape, const FrameMatrix& frames, const PhonemeSeq& r) {
  return forward(*this, tape, frames, r).words;
}

Var MDNModel::recognizer_logits(nn::Tape& tape, const FrameMatrix& frames) {
  const Var h = encode_frames(tape, params, "enc", config.encoder, frames);
  return nn::add_row(nn::matmul(h, tape.param(params.get("prn.w"))),
                     tape.param(params.get("prn.b")));
}

namespace {

Var joint_loss(MDNModel& m, nn::Tape& tape, const TrainingExample& ex,
               const std::vector<PhonemeId>& transcript, double lambda,
               const nn::Matrix* frozen) {
  require(ex.speech != nullptr, "weakly-s: example without speech");
  const Heads heads = forward(m, tape, ex.speech->speech, ex.canonical, frozen);
  Var total = nn::bce_with_logits(heads.words, word_targets(ex));
  if (lambda > 0.0 && !transcript.empty())
    total = nn::add(total,
                    nn::scale(nn::ctc_loss(heads.recognizer, transcript, m.classes - 1), lambda));
  return total;
}

}  // namespace

Var MDNModel::loss(nn::Tape& tape, const TrainingExample& ex,
                   const std::vector<PhonemeId>& transcript, double lambda) {
  return joint_loss(*this, tape, ex, transcript, lambda, nullptr);
}

MDNModel train_weakly_s(const WeaklySCorpus& corpus, const PhonemeInventory& inventory,
                        const WeaklySConfig& cfg) {
  require(cfg.epochs >= 0 && cfg.finetune_epochs >= 0, "weakly-s: negative epoch count");
  require(cfg.l1l2_train || cfg.l2_adapt, "weakly-s: every training phase is switched off");
  MDNModel m = MDNModel::init(inventory, cfg);

  std::vector<Item> combined, adapt;
  if (cfg.l1l2_train) {
    for (const auto& ex : corpus.l1) {
      if (!cfg.synthetic_errors && ex.provenance != Provenance::kOriginal) continue;
      require(ex.speech != nullptr, "weakly-s: example without speech");
      combined.push_back({&ex, ex.speech->canonical.phonemes()});
    }
    for (const auto& ex : corpus.l2) combined.push_back({&ex, {}});
  }
  if (cfg.l2_adapt)
    for (const auto& ex : corpus.l2) adapt.push_back({&ex, {}});
  require(!combined.empty() || !adapt.empty(), "weakly-s: empty training corpus");

  int positives = 0, negatives = 0;
  for (const auto* set : {&combined, &adapt})
    for (const auto& it : *set)
      for (auto l : word_targets(*it.ex)) (l > 0.5 ? positives : negatives) += 1;
  if (positives == 0 || negatives == 0)
    throw TrainingFailure("weakly-s: word labels hold a single class");

  auto& first = combined.empty() ? adapt : combined;
  m.loss_trace.push_back(run_epoch(m, nullptr, first, combined.empty() ? 0.0 : cfg.lambda, nullptr));
  Rng rng(derive_seed(cfg.seed, 0x6f7264));
  if (!combined.empty()) {
    nn::Adam opt(m.params, nn::AdamConfig{cfg.learning_rate});
    for (int e = 0; e < cfg.epochs; ++e)
      m.loss_trace.push_back(run_epoch(m, &opt, combined, cfg.lambda, &rng));
  }
  if (!adapt.empty()) {
    nn::Adam opt(m.params, nn::AdamConfig{cfg.learning_rate});
    for (int e = 0; e < cfg.finetune_epochs; ++e)
      m.loss_trace.push_back(run_epoch(m, &opt, adapt, 0.0, &rng));
  }
  return m;
}

WordErrorProbs detect_weakly_s(const MDNModel& model, const Utterance& u, const PhonemeSeq& r,
                               double threshold) {
  nn::Tape tape;
  // Forward only.
  const auto logits = const_cast<MDNModel&>(model).word_logits(tape, u.speech, r).value();
  std::vector<double> probs(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index w = 0; w < logits.rows(); ++w) probs[w] = 1.0 / (1.0 + std::exp(-logits(w, 0)));
  return WordErrorProbs::make(std::move(probs), threshold);
}

double gradient_check(MDNModel& model, const std::vector<TrainingExample>& batch, double lambda) {
  require(!batch.empty(), "gradient_check: empty batch");
  // The detection head sees the recognition posteriors as data, so they are
  // held at their current values while parameters are perturbed.
  std::vector<nn::Matrix> frozen;
  for (const auto& ex : batch) {
    require(ex.speech != nullptr, "gradient_check: example without speech");
    frozen.push_back(posteriors(model, ex.speech->speech));
  }
  return nn::gradient_check(model.params, [&](nn::Tape& tape) {
    Var total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Var l = joint_loss(model, tape, batch[i], batch[i].speech->canonical.phonemes(),
                               lambda, &frozen[i]);
      total = i == 0 ? l : nn::add(total, l);
    }
    return total;
  }, 1e-4, 1e-5);
}

void MDNModel::save(const std::string& stem, const PhonemeInventory& inventory) const {
  nn::save_checkpoint(stem, params,
                      {{"kind", "weakly_s"},
                       {"inventory_hash", hex64(inventory.fingerprint())},
                       {"classes", classes},
                       {"config", config},
                       {"loss_trace", loss_trace}});
}

MDNModel MDNModel::load(const std::string& stem, const PhonemeInventory& inventory) {
  auto [params, meta] = nn::load_checkpoint(stem, "weakly_s");
  require(meta.at("inventory_hash").get<std::string>() == hex64(inventory.fingerprint()),
          "checkpoint '" + stem + "' was trained on another inventory");
  MDNModel m;
  m.params = std::move(params);
  m.classes = meta.at("classes").get<int>();
  m.durations = nominal_durations(inventory);
  m.config = meta.at("config").get<WeaklySConfig>();
  m.loss_trace = meta.at("loss_trace").get<std::vector<double>>();
  return m;
}

}  // namespace capt
