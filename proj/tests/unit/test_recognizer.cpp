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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "capt/core/error.hpp"
#include "toy_corpus.hpp"

using namespace capt;
using capt::testing::toy_corpus;

namespace {

const PhonemeInventory& inv() { return PhonemeInventory::standard(); }

struct Trained {
  std::vector<UtterancePtr> train, test;
  RecognizerModel model;
};

// 200 noise-free single-speaker utterances (a quarter are isolated phonemes),
// 30 epochs.
const Trained& clean_model() {
  static const Trained t = [] {
    const auto quiet = Synthesizer::standard().with_config(SynthConfig{0.0});
    Trained out;
    out.train = toy_corpus(quiet, 200, 1, 1, 3, 0.25);
    out.test = toy_corpus(quiet, 100, 1, 2);
    RecognizerConfig cfg;
    cfg.epochs = 30;
    out.model = train_recognizer(out.train, inv(), cfg);
    return out;
  }();
  return t;
}

}  // namespace

TEST_CASE("untrained recognizer is uniform") {
  const auto corpus = toy_corpus(Synthesizer::standard(), 5, 3, 4);
  RecognizerConfig cfg;
  cfg.epochs = 0;
  const auto model = train_recognizer(corpus, inv(), cfg);
  CHECK(model.parameter_count() <= 50000);
  for (const auto& u : corpus) {
    const auto pg = model.posteriorgram(u->speech);
    CHECK(pg.classes() == inv().size() + 1);
    for (int t = 0; t < pg.frames(); ++t) {
      const double h = -(pg.probs.row(t).array() * pg.probs.row(t).array().log()).sum();
      CHECK(h >= 0.9 * std::log(pg.classes()));
    }
  }
}

TEST_CASE("trained recognizer meets the clean-speech bar") {
  const auto& t = clean_model();
  CHECK(t.model.loss_trace.back() < t.model.loss_trace.front());
  CHECK(phoneme_error_rate(t.model, t.test) <= 0.05);
  int exact = 0;
  for (const auto& u : t.test) exact += recognize(t.model, *u).decoded.phonemes() == u->canonical.phonemes();
  CHECK(exact >= 80);
}

TEST_CASE("single phoneme decodes to one symbol") {
  const auto& t = clean_model();
  const auto quiet = Synthesizer::standard().with_config(SynthConfig{0.0});
  for (const char* sym : {"m", "aa1", "s", "iy1"}) {
    const auto u = quiet.synthesize(PhonemeSeq::single_word({inv().id(sym)}), tts_speaker(), 3);
    const auto res = recognize(t.model, u);
    CHECK(res.decoded.size() == 1);
    CHECK(res.per_phoneme_likelihood.size() == 1);
  }
}

TEST_CASE("recognition results are well formed") {
  const auto& t = clean_model();
  Rng rng(5);
  const auto noisy = toy_corpus(Synthesizer::standard(), 200, 4, 6);
  for (const auto& u : noisy) {
    const auto res = recognize(t.model, *u);
    const auto& p = res.posteriorgram.probs;
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-6);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
    const auto& d = res.decoded.phonemes();
    for (std::size_t j = 0; j < d.size(); ++j) {
      CHECK(d[j] != inv().blank_id());
      CHECK(res.per_phoneme_likelihood[j] >= 0.0);
      CHECK(res.per_phoneme_likelihood[j] <= 1.0);
    }
    CHECK(res.per_phoneme_likelihood.size() == d.size());
    const auto again = recognize(t.model, *u);
    CHECK(again.decoded == res.decoded);
  }
}

TEST_CASE("ground truth outscores random alternatives after training") {
  const auto& t = clean_model();
  Rng rng(8);
  int wins = 0;
  for (const auto& u : t.test) {
    auto alt = u->canonical.phonemes();
    const auto j = rng.index(alt.size());
    alt[j] = (alt[j] + 1 + static_cast<int>(rng.index(23))) % 24;
    wins += ctc_score(t.model, *u, u->canonical.phonemes()) >= ctc_score(t.model, *u, alt);
  }
  CHECK(wins >= 95);
}

TEST_CASE("recognizer gradient check") {
  const auto batch = toy_corpus(Synthesizer::standard(), 2, 2, 9, 1);
  RecognizerConfig cfg;
  cfg.encoder = {1, 6, 1};
  cfg.epochs = 0;
  auto model = RecognizerModel::init(inv(), cfg);
  Rng rng(3);
  model.params.get("prn.w").value = nn::gaussian(6, 25, 0.5, rng);
  CHECK(model.parameter_count() <= 500);
  const double err = gradient_check(model, batch);
  CHECK(err < 1e-4);
  CHECK(gradient_check(model, batch) == err);

  auto empty = std::make_shared<Utterance>(*batch[0]);
  empty->canonical = PhonemeSeq();
  CHECK_THROWS_AS(gradient_check(model, {empty}), InvalidInput);
}

TEST_CASE("training failure carries the trace") {
  auto bad = std::make_shared<Utterance>(*toy_corpus(Synthesizer::standard(), 1, 1, 2)[0]);
  bad->speech(0, 0) = std::nan("");
  RecognizerConfig cfg;
  cfg.epochs = 2;
  try {
    train_recognizer({bad}, inv(), cfg);
    FAIL("expected a training failure");
  } catch (const TrainingFailure& e) {
    CHECK_FALSE(e.loss_trace().empty());
  }
  CHECK_THROWS_AS(train_recognizer({}, inv(), cfg), InvalidInput);
  Utterance none;
  none.speech = FrameMatrix(0, kFeatureDim);
  CHECK_THROWS_AS(recognize(clean_model().model, none), InvalidInput);
}

TEST_CASE("recognizer checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "capt_rec_test";
  std::filesystem::create_directories(dir);
  const auto& t = clean_model();
  const std::string stem = (dir / "prn").string();
  t.model.save(stem, inv());
  const auto back = RecognizerModel::load(stem, inv());
  CHECK(back.posteriorgram(t.test[0]->speech).probs == t.model.posteriorgram(t.test[0]->speech).probs);
  CHECK(back.loss_trace == t.model.loss_trace);
  std::filesystem::remove_all(dir);
}
