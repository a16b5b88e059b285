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

#include "capt/lexical_stress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"
#include "capt/nn/checkpoint.hpp"
#include "capt/nn/optim.hpp"

namespace capt {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StressConfig, attention, ternary, embedding, hidden,
                                   attention_width, epochs, batch, learning_rate, seed)

using nn::Var;

// ---- syllables --------------------------------------------------------------

std::vector<Syllable> syllabify(const std::vector<PhonemeId>& word,
                                const PhonemeInventory& inventory) {
  std::vector<Syllable> out;
  for (int i = 0; i < static_cast<int>(word.size()); ++i) {
    require(inventory.contains(word[i]), "syllabify: phoneme outside the inventory");
    if (inventory.is_vowel(word[i])) {
      if (!out.empty()) out.back().end = i;
      out.push_back({out.empty() ? 0 : i, static_cast<int>(word.size()), i});
    }
  }
  require(!out.empty(), "syllabify: word has no vowel");
  return out;
}

std::vector<int> stress_pattern(const std::vector<PhonemeId>& word,
                                const PhonemeInventory& inventory) {
  std::vector<int> out;
  for (const auto& s : syllabify(word, inventory)) out.push_back(inventory.stress(word[s.nucleus]));
  return out;
}

std::vector<PhonemeId> move_stress(const std::vector<PhonemeId>& word, int to,
                                   const PhonemeInventory& inventory) {
  const auto syl = syllabify(word, inventory);
  require(to >= 0 && to < static_cast<int>(syl.size()), "move_stress: no such syllable");
  auto out = word;
  for (const auto& s : syl)
    if (inventory.stress(out[s.nucleus]) == 1) out[s.nucleus] = inventory.with_stress(out[s.nucleus], 0);
  out[syl[to].nucleus] = inventory.with_stress(out[syl[to].nucleus], 1);
  return out;
}

int stress_class(int digit, bool ternary) {
  require(digit >= 0 && digit <= 2, "stress digit must be 0, 1 or 2");
  return ternary ? digit : (digit == 1 ? 1 : 0);
}

// ---- features ----------------------------------------------------------------

SyllableFeatures extract_features(const Utterance& u, const PhonemeSeq& r,
                                  const std::vector<std::pair<int, int>>& spans,
                                  const PhonemeInventory& inventory) {
  require(r.word_count() == 1, "stress features need a single word");
  require(static_cast<int>(spans.size()) == r.size(), "stress features: one span per phoneme");
  int expect = 0;
  for (const auto& [b, e] : spans) {
    require(b == expect && e > b, "stress features: spans must tile the utterance");
    expect = e;
  }
  require(expect == u.frames(), "stress features: spans must cover the utterance");

  SyllableFeatures f;
  f.phonemes = r.phonemes();
  f.syllables = syllabify(f.phonemes, inventory);
  f.canonical_stress = stress_pattern(f.phonemes, inventory);
  require(std::count(f.canonical_stress.begin(), f.canonical_stress.end(), 1) == 1,
          "canonical stress pattern needs exactly one primary stress");
  for (const auto& [b, e] : spans) f.durations.push_back(e - b);
  f.f0 = u.speech.col(kF0Column);
  f.energy = u.speech.col(kEnergyColumn);
  auto mean = [](const Eigen::VectorXd& x, std::pair<int, int> s) {
    return x.segment(s.first, s.second - s.first).mean();
  };
  for (const auto& s : f.syllables) {
    const std::pair<int, int> frames{spans[s.start].first, spans[s.end - 1].second};
    f.frame_spans.push_back(frames);
    f.nucleus_spans.push_back(spans[s.nucleus]);
    f.mean_f0.push_back(mean(f.f0, frames));
    f.mean_energy.push_back(mean(f.energy, frames));
    f.nucleus_f0.push_back(mean(f.f0, spans[s.nucleus]));
    f.nucleus_energy.push_back(mean(f.energy, spans[s.nucleus]));
  }
  return f;
}

SyllableFeatures extract_features(const Synthesizer& synth, const Utterance& u,
                                  const PhonemeSeq& r) {
  return extract_features(u, r, synth.forced_align(u, r), synth.inventory());
}

// ---- corpora -------------------------------------------------------------------

std::vector<std::uint8_t> StressExample::syllable_errors(bool ternary) const {
  require(realized_stress.size() == features.canonical_stress.size(),
          "stress example: realized pattern does not match the syllables");
  std::vector<std::uint8_t> out;
  for (std::size_t s = 0; s < realized_stress.size(); ++s)
    out.push_back(stress_class(realized_stress[s], ternary) !=
                  stress_class(features.canonical_stress[s], ternary));
  return out;
}

bool StressExample::word_error(bool ternary) const {
  const auto e = syllable_errors(ternary);
  return std::find(e.begin(), e.end(), 1) != e.end();
}

std::vector<std::vector<PhonemeId>> multisyllabic_words(const Lexicon& lexicon) {
  std::vector<std::vector<PhonemeId>> out;
  for (const auto& e : lexicon.entries())
    for (const auto& v : e.variants)
      if (syllabify(v, lexicon.inventory()).size() >= 2) out.push_back(v);
  return out;
}

namespace {

std::vector<PhonemeId> shifted(const std::vector<PhonemeId>& word, const PhonemeInventory& inv,
                               Rng& rng) {
  const auto pattern = stress_pattern(word, inv);
  const int primary =
      static_cast<int>(std::find(pattern.begin(), pattern.end(), 1) - pattern.begin());
  int to = static_cast<int>(rng.index(pattern.size() - 1));
  if (to >= primary) ++to;
  return move_stress(word, to, inv);
}

StressExample make_example(const Synthesizer& synth, Utterance u, const std::vector<PhonemeId>& word,
                           Provenance provenance) {
  StressExample ex;
  ex.canonical = PhonemeSeq::single_word(word);
  ex.realized_stress = stress_pattern(u.canonical.phonemes(), synth.inventory());
  ex.speech = std::make_shared<const Utterance>(std::move(u));
  ex.features = extract_features(synth, *ex.speech, ex.canonical);
  ex.provenance = provenance;
  return ex;
}

}  // namespace

std::vector<StressExample> generate_stress_errors(const Synthesizer& synth, const Lexicon& lexicon,
                                                  int count, std::uint64_t seed) {
  require(count >= 1, "generate_stress_errors: count must be positive");
  const auto words = multisyllabic_words(lexicon);
  require(!words.empty(), "generate_stress_errors: lexicon has no multi-syllable word");
  Rng rng(seed);
  std::vector<StressExample> out;
  for (int i = 0; i < count; ++i) {
    const auto& word = words[rng.index(words.size())];
    const auto wrong = shifted(word, synth.inventory(), rng);
    out.push_back(make_example(synth, synth.synthesize_neutral(PhonemeSeq::single_word(word),
                                                               rng.next_u64()),
                               word, Provenance::kT2S));
    out.push_back(make_example(synth, synth.synthesize_neutral(PhonemeSeq::single_word(wrong),
                                                               rng.next_u64()),
                               word, Provenance::kT2S));
  }
  return out;
}

std::vector<StressExample> natural_stress_corpus(const Synthesizer& synth, const Lexicon& lexicon,
                                                 const NaturalStressConfig& cfg) {
  require(cfg.count >= 1 && cfg.speakers >= 1, "natural stress corpus: empty configuration");
  require(cfg.error_rate >= 0.0 && cfg.error_rate <= 1.0,
          "natural stress corpus: error rate must lie in [0, 1]");
  require(cfg.contrast_min >= 0.0 && cfg.contrast_min <= cfg.contrast_max,
          "natural stress corpus: bad contrast range");
  const auto words = multisyllabic_words(lexicon);
  require(!words.empty(), "natural stress corpus: lexicon has no multi-syllable word");
  Rng rng(cfg.seed);
  std::vector<SpeakerProfile> speakers;
  for (int s = 0; s < cfg.speakers; ++s)
    speakers.push_back(random_speaker(s, cfg.timbre_norm, rng));
  // Exactly round(error_rate * count) words carry a stress error.
  std::vector<std::uint8_t> wrong(cfg.count, 0);
  const auto n_wrong = static_cast<int>(std::lround(cfg.error_rate * cfg.count));
  std::fill(wrong.begin(), wrong.begin() + n_wrong, 1);
  for (std::size_t i = wrong.size(); i > 1; --i) std::swap(wrong[i - 1], wrong[rng.index(i)]);
  std::vector<StressExample> out;
  for (int i = 0; i < cfg.count; ++i) {
    const auto& word = words[rng.index(words.size())];
    const auto spoken = wrong[i] ? shifted(word, synth.inventory(), rng) : word;
    const auto& spk = speakers[rng.index(speakers.size())];
    SynthConfig sc = cfg.synth;
    sc.stress_contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);
    const Synthesizer voice = synth.with_config(sc);
    out.push_back(make_example(voice,
                               voice.synthesize(PhonemeSeq::single_word(spoken), spk, rng.next_u64()),
                               word, Provenance::kOriginal));
  }
  return out;
}

// ---- model ---------------------------------------------------------------------

namespace {

constexpr int kFrameFeatures = 3;
constexpr int kSyllableFeatures = 3;

struct Inputs {
  nn::Matrix frames;    // T x kFrameFeatures
  nn::Matrix mask;      // S x T, 0 inside the syllable, large negative outside
  nn::Matrix nucleus;   // S x kFrameFeatures
  nn::Matrix syllable;  // S x kSyllableFeatures
  nn::Matrix canonical; // S x classes one-hot
  std::vector<int> vowels;
};

Inputs inputs(const SyllableFeatures& f, int classes, bool ternary) {
  const int S = f.syllable_count();
  const int T = static_cast<int>(f.f0.size());
  require(S >= 1 && T >= 1, "stress model: empty features");
  require(static_cast<int>(f.canonical_stress.size()) == S, "stress model: malformed features");
  const double f0_mean = f.f0.mean(), e_mean = f.energy.mean();
  Inputs in;
  in.frames.resize(T, kFrameFeatures);
  for (int t = 0; t < T; ++t) in.frames.row(t) << f.f0(t) - f0_mean, f.energy(t) - e_mean, 0.0;
  for (const auto& [b, e] : f.nucleus_spans)
    for (int t = b; t < e; ++t) in.frames(t, 2) = 1.0;
  in.mask = nn::Matrix::Constant(S, T, -1e9);
  in.nucleus.resize(S, kFrameFeatures);
  in.syllable.resize(S, kSyllableFeatures);
  in.canonical = nn::Matrix::Zero(S, classes);
  const double mean_phone =
      std::accumulate(f.durations.begin(), f.durations.end(), 0.0) / f.durations.size();
  double mean_syllable = 0.0;
  for (const auto& [b, e] : f.frame_spans) mean_syllable += e - b;
  mean_syllable /= S;
  for (int s = 0; s < S; ++s) {
    const auto [b, e] = f.frame_spans[s];
    in.mask.block(s, b, 1, e - b).setZero();
    in.nucleus.row(s) << f.nucleus_f0[s] - f0_mean, f.nucleus_energy[s] - e_mean, 1.0;
    in.syllable.row(s) << std::log(f.durations[f.syllables[s].nucleus] / mean_phone),
        std::log((e - b) / mean_syllable), (s + 0.5) / S;
    in.canonical(s, stress_class(f.canonical_stress[s], ternary)) = 1.0;
    in.vowels.push_back(f.phonemes[f.syllables[s].nucleus]);
  }
  return in;
}

}  // namespace

StressModel StressModel::init(const PhonemeInventory& inventory, const StressConfig& cfg) {
  require(cfg.embedding >= 1 && cfg.hidden >= 1 && cfg.attention_width >= 1 && cfg.batch >= 1,
          "bad stress model configuration");
  StressModel m;
  m.config = cfg;
  const int K = m.classes();
  Rng rng(derive_seed(cfg.seed, 0x737472));
  m.params.add("emb", nn::gaussian(inventory.size(), cfg.embedding, 0.5, rng));
  if (cfg.attention) {
    m.params.add("att.q", nn::glorot(K + cfg.embedding, cfg.attention_width, rng));
    m.params.add("att.k", nn::glorot(kFrameFeatures, cfg.attention_width, rng));
    m.params.add("att.kb", nn::Matrix::Zero(1, cfg.attention_width));
  }
  m.params.add("cls.w", nn::glorot(kFrameFeatures + kSyllableFeatures + K + cfg.embedding,
                                   cfg.hidden, rng));
  m.params.add("cls.b", nn::Matrix::Zero(1, cfg.hidden));
  m.params.add("out.w", nn::Matrix::Zero(cfg.hidden, K));
  m.params.add("out.b", nn::Matrix::Zero(1, K));
  return m;
}

Var StressModel::logits(nn::Tape& tape, const SyllableFeatures& f) {
  const Inputs in = inputs(f, classes(), config.ternary);
  auto P = [&](const char* name) { return tape.param(params.get(name)); };
  const Var emb = nn::gather_rows(P("emb"), in.vowels);
  const Var query_parts[] = {tape.constant(in.canonical), emb};
  const Var query_in = nn::concat_cols(query_parts);
  Var acoustic;
  if (config.attention) {
    const Var frames = tape.constant(in.frames);
    const Var keys = nn::tanh(nn::add_row(nn::matmul(frames, P("att.k")), P("att.kb")));
    const Var scores = nn::add(nn::matmul(nn::matmul(query_in, P("att.q")), nn::transpose(keys)),
                               tape.constant(in.mask));
    acoustic = nn::matmul(nn::softmax_rows(scores), frames);
  } else {
    acoustic = tape.constant(in.nucleus);
  }
  const Var parts[] = {acoustic, tape.constant(in.syllable), query_in};
  const Var h = nn::tanh(nn::add_row(nn::matmul(nn::concat_cols(parts), P("cls.w")), P("cls.b")));
  return nn::add_row(nn::matmul(h, P("out.w")), P("out.b"));
}

Var StressModel::loss(nn::Tape& tape, const StressExample& ex) {
  std::vector<int> targets;
  for (int d : ex.realized_stress) targets.push_back(stress_class(d, config.ternary));
  require(static_cast<int>(targets.size()) == ex.features.syllable_count(),
          "stress example: realized pattern does not match the syllables");
  return nn::softmax_cross_entropy(logits(tape, ex.features), targets);
}

Eigen::MatrixXd StressModel::predict(const SyllableFeatures& f) const {
  nn::Tape tape;
  // Forward only.
  return nn::softmax_rows(const_cast<StressModel&>(*this).logits(tape, f)).value();
}

StressModel train_stress_model(const std::vector<StressExample>& corpus,
                               const PhonemeInventory& inventory, const StressConfig& cfg) {
  require(!corpus.empty(), "train_stress_model: empty corpus");
  require(cfg.epochs >= 0, "train_stress_model: negative epoch count");
  int errors = 0;
  for (const auto& ex : corpus) errors += ex.word_error(cfg.ternary);
  if (errors == 0 || errors == static_cast<int>(corpus.size()))
    throw TrainingFailure("stress corpus holds a single class");

  StressModel m = StressModel::init(inventory, cfg);
  auto mean_loss = [&] {
    double total = 0.0;
    for (const auto& ex : corpus) {
      nn::Tape tape;
      total += m.loss(tape, ex).scalar();
    }
    return total / static_cast<double>(corpus.size());
  };
  m.loss_trace.push_back(mean_loss());
  nn::Adam opt(m.params, nn::AdamConfig{cfg.learning_rate});
  Rng rng(derive_seed(cfg.seed, 0x6f7264));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double total = 0.0;
    int in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      nn::Tape tape;
      const Var loss = m.loss(tape, corpus[order[k]]);
      total += loss.scalar();
      tape.backward(loss);
      if (++in_batch == cfg.batch || k + 1 == order.size()) {
        opt.step(in_batch);
        in_batch = 0;
      }
    }
    m.loss_trace.push_back(total / static_cast<double>(corpus.size()));
    if (!std::isfinite(m.loss_trace.back()))
      throw TrainingFailure("stress model training diverged", m.loss_trace);
  }
  return m;
}

double gradient_check(StressModel& model, const std::vector<StressExample>& batch) {
  require(!batch.empty(), "gradient_check: empty batch");
  return nn::gradient_check(model.params, [&](nn::Tape& tape) {
    Var total = model.loss(tape, batch[0]);
    for (std::size_t i = 1; i < batch.size(); ++i) total = nn::add(total, model.loss(tape, batch[i]));
    return total;
  });
}

void StressModel::save(const std::string& stem, const PhonemeInventory& inventory) const {
  nn::save_checkpoint(stem, params,
                      {{"kind", "stress"},
                       {"inventory_hash", hex64(inventory.fingerprint())},
                       {"config", config},
                       {"loss_trace", loss_trace}});
}

StressModel StressModel::load(const std::string& stem, const PhonemeInventory& inventory) {
  auto [params, meta] = nn::load_checkpoint(stem, "stress");
  require(meta.at("inventory_hash").get<std::string>() == hex64(inventory.fingerprint()),
          "checkpoint '" + stem + "' was trained on another inventory");
  StressModel m;
  m.params = std::move(params);
  m.config = meta.at("config").get<StressConfig>();
  m.loss_trace = meta.at("loss_trace").get<std::vector<double>>();
  return m;
}

// ---- detection -------------------------------------------------------------------

bool StressLabels::word_error() const {
  return std::find(errors.begin(), errors.end(), 1) != errors.end();
}

double StressLabels::word_score() const {
  return error_probs.empty() ? 0.0 : *std::max_element(error_probs.begin(), error_probs.end());
}

StressLabels apply_stress_rule(std::vector<int> canonical, std::vector<int> estimated,
                               std::vector<double> error_probs, double threshold) {
  require(canonical.size() == estimated.size() && canonical.size() == error_probs.size(),
          "stress detection: syllable counts differ");
  StressLabels out;
  for (std::size_t s = 0; s < canonical.size(); ++s)
    out.errors.push_back(canonical[s] != estimated[s] && error_probs[s] > threshold);
  out.canonical = std::move(canonical);
  out.estimated = std::move(estimated);
  out.error_probs = std::move(error_probs);
  out.threshold = threshold;
  return out;
}

StressLabels detect_stress_errors(const StressModel& model, const SyllableFeatures& features,
                                  double threshold) {
  require(static_cast<int>(features.canonical_stress.size()) == features.syllable_count(),
          "stress detection: features and canonical pattern disagree on syllables");
  const Eigen::MatrixXd p = model.predict(features);
  std::vector<int> canonical, estimated;
  std::vector<double> error_probs;
  for (int s = 0; s < features.syllable_count(); ++s) {
    const int c = stress_class(features.canonical_stress[s], model.config.ternary);
    Eigen::Index best = 0;
    p.row(s).maxCoeff(&best);
    canonical.push_back(c);
    estimated.push_back(static_cast<int>(best));
    error_probs.push_back(1.0 - p(s, c));
  }
  return apply_stress_rule(std::move(canonical), std::move(estimated), std::move(error_probs),
                           threshold);
}

}  // namespace capt
