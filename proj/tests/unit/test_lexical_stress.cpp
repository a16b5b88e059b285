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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "capt/core/error.hpp"
#include "capt/lexical_stress.hpp"
#include "toy_corpus.hpp"

using namespace capt;
using capt::testing::toy_lexicon;

namespace {

const PhonemeInventory& inv() { return PhonemeInventory::standard(); }

std::vector<PhonemeId> word(const char* text) { return inv().parse(text); }

const Synthesizer& quiet() {
  static const Synthesizer s = Synthesizer::standard().with_config(SynthConfig{0.0, 1.5, 0.0, 0.0, 0.0});
  return s;
}

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

}  // namespace

TEST_CASE("vowel-anchored syllabification") {
  const auto s = syllabify(word("r iy1 m ay0 n d"), inv());
  REQUIRE(s.size() == 2);
  CHECK(s[0] == Syllable{0, 3, 1});
  CHECK(s[1] == Syllable{3, 6, 3});
  CHECK(stress_pattern(word("r iy1 m ay0 n d"), inv()) == std::vector<int>{1, 0});
  CHECK(syllabify(word("s aa1"), inv()).size() == 1);
  CHECK_THROWS_AS(syllabify(word("s m d"), inv()), InvalidInput);
  CHECK(move_stress(word("r iy1 m ay0 n d"), 1, inv()) == word("r iy0 m ay1 n d"));
  CHECK(move_stress(word("s aa0 m ah2 r ay1"), 0, inv()) == word("s aa1 m ah2 r ay0"));
}

TEST_CASE("stressed syllable has the higher pitch") {
  const auto r = PhonemeSeq::single_word(word("r iy1 m ay0 n d"));
  const auto u = quiet().synthesize(r, tts_speaker(), 3);
  const auto f = extract_features(quiet(), u, r);
  REQUIRE(f.syllable_count() == 2);
  CHECK(f.mean_f0[0] > f.mean_f0[1]);
  CHECK(f.nucleus_energy[0] > f.nucleus_energy[1]);
  CHECK(f.durations == u.prosody.durations);
  CHECK(f.frame_spans.front().first == 0);
  CHECK(f.frame_spans.back().second == u.frames());
}

TEST_CASE("single syllable covers the word") {
  const auto r = PhonemeSeq::single_word(word("s aa1 d"));
  const auto u = Synthesizer::standard().synthesize(r, tts_speaker(), 4);
  const auto f = extract_features(Synthesizer::standard(), u, r);
  REQUIRE(f.syllable_count() == 1);
  CHECK(f.frame_spans[0] == std::pair<int, int>{0, u.frames()});
}

TEST_CASE("feature extraction rejects malformed input") {
  const auto r = PhonemeSeq::single_word(word("r iy1 m ay0 n d"));
  const auto u = quiet().synthesize(r, tts_speaker(), 3);
  auto spans = u.prosody.spans();
  spans.pop_back();
  CHECK_THROWS_AS(extract_features(u, r, spans), InvalidInput);
  const auto two = PhonemeSeq::from_words({word("s aa1"), word("m iy1")});
  CHECK_THROWS_AS(extract_features(quiet(), quiet().synthesize(two, tts_speaker(), 1), two),
                  InvalidInput);
  const auto flat = PhonemeSeq::single_word(word("r iy0 m ay0 n d"));
  CHECK_THROWS_AS(extract_features(quiet(), quiet().synthesize(flat, tts_speaker(), 1), flat),
                  InvalidInput);
}

TEST_CASE("durations match the oracle prosody") {
  Rng rng(2);
  const auto words = multisyllabic_words(toy_lexicon());
  for (int i = 0; i < 200; ++i) {
    const auto r = PhonemeSeq::single_word(words[rng.index(words.size())]);
    const auto u = Synthesizer::standard().synthesize(r, random_speaker(0, 1.0, rng), rng.next_u64());
    CHECK(extract_features(Synthesizer::standard(), u, r).durations == u.prosody.durations);
  }
}

TEST_CASE("shifting f0 shifts syllable means") {
  Rng rng(3);
  const auto words = multisyllabic_words(toy_lexicon());
  for (int i = 0; i < 200; ++i) {
    const auto r = PhonemeSeq::single_word(words[rng.index(words.size())]);
    const auto u = Synthesizer::standard().synthesize(r, random_speaker(0, 1.0, rng), rng.next_u64());
    Utterance v = u;
    const double c = rng.uniform(-2.0, 2.0);
    v.speech.col(kF0Column).array() += c;
    const auto a = extract_features(u, r, u.prosody.spans());
    const auto b = extract_features(v, r, u.prosody.spans());
    for (int s = 0; s < a.syllable_count(); ++s) {
      CHECK(b.mean_f0[s] == doctest::Approx(a.mean_f0[s] + c).epsilon(1e-12));
      CHECK(b.nucleus_f0[s] == doctest::Approx(a.nucleus_f0[s] + c).epsilon(1e-12));
      CHECK(b.mean_energy[s] == a.mean_energy[s]);
    }
  }
}

TEST_CASE("generated stress errors") {
  const auto corpus = generate_stress_errors(Synthesizer::standard(), toy_lexicon(), 100, 5);
  CHECK(corpus.size() == 200);
  int errors = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    CHECK(ex.provenance == Provenance::kT2S);
    CHECK(ex.word_error() == (i % 2 == 1));
    errors += ex.word_error();
    CHECK(std::count(ex.realized_stress.begin(), ex.realized_stress.end(), 1) == 1);
  }
  CHECK(errors == 100);

  Lexicon two(inv());
  two.add("remind", word("r iy1 m ay0 n d"));
  const auto swapped = generate_stress_errors(quiet(), two, 1, 1);
  CHECK(swapped[1].features.canonical_stress == std::vector<int>{1, 0});
  CHECK(swapped[1].realized_stress == std::vector<int>{0, 1});
  CHECK(swapped[1].syllable_errors() == std::vector<std::uint8_t>{1, 1});

  // The stressed realization of a vowel lasts longer than its unstressed one.
  const auto& right = swapped[0].speech->prosody.durations;
  const auto& wrong = swapped[1].speech->prosody.durations;
  CHECK(right[1] > wrong[1]);
  CHECK(wrong[3] > right[3]);

  Lexicon mono(inv());
  mono.add("sod", word("s aa1 d"));
  CHECK_THROWS_AS(generate_stress_errors(Synthesizer::standard(), mono, 3, 1), InvalidInput);
}

TEST_CASE("natural corpus error count is exact") {
  NaturalStressConfig cfg;
  cfg.count = 40;
  cfg.error_rate = 0.25;
  const auto corpus = natural_stress_corpus(Synthesizer::standard(), toy_lexicon(), cfg);
  CHECK(corpus.size() == 40);
  int errors = 0;
  for (const auto& ex : corpus) errors += ex.word_error();
  CHECK(errors == 10);
}

TEST_CASE("detection rule is the two-condition conjunction") {
  auto a = apply_stress_rule({1, 0}, {1, 0}, {0.99, 0.99}, 0.5);
  CHECK(a.errors == std::vector<std::uint8_t>{0, 0});
  auto b = apply_stress_rule({1, 0}, {0, 1}, {0.9, 0.9}, 0.5);
  CHECK(b.errors == std::vector<std::uint8_t>{1, 1});
  auto c = apply_stress_rule({1, 0}, {0, 1}, {0.4, 0.4}, 0.5);
  CHECK(c.errors == std::vector<std::uint8_t>{0, 0});
  CHECK_THROWS_AS(apply_stress_rule({1, 0}, {1}, {0.1, 0.2}, 0.5), InvalidInput);

  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    const int S = 1 + static_cast<int>(rng.index(5));
    std::vector<int> can(S), est(S);
    std::vector<double> p(S);
    for (int s = 0; s < S; ++s) {
      can[s] = static_cast<int>(rng.index(3));
      est[s] = static_cast<int>(rng.index(3));
      p[s] = rng.uniform();
    }
    const double t = rng.uniform();
    const auto out = apply_stress_rule(can, est, p, t);
    for (int s = 0; s < S; ++s) CHECK(out.errors[s] == (can[s] != est[s] && p[s] > t));
    CHECK(out.word_error() == (std::count(out.errors.begin(), out.errors.end(), 1) > 0));
  }
}

TEST_CASE("stress classifier gradients match finite differences") {
  const auto batch = generate_stress_errors(Synthesizer::standard(), toy_lexicon(), 2, 8);
  for (bool attention : {true, false}) {
    StressConfig cfg;
    cfg.attention = attention;
    cfg.embedding = 3;
    cfg.hidden = 4;
    cfg.attention_width = 3;
    auto model = StressModel::init(inv(), cfg);
    Rng rng(4);
    for (auto& p : model.params.all())
      if (p.value.isZero()) p.value = nn::gaussian(p.value.rows(), p.value.cols(), 0.5, rng);
    CHECK(gradient_check(model, batch) < 1e-4);
  }
}

TEST_CASE("stress model training") {
  const auto& synth = Synthesizer::standard();
  const auto train = generate_stress_errors(synth, toy_lexicon(), 60, 11);
  NaturalStressConfig tc;
  tc.count = 150;
  tc.error_rate = 0.5;
  tc.seed = 12;
  const auto test = natural_stress_corpus(synth, toy_lexicon(), tc);

  auto score = [&](const StressModel& m) {
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& ex : test) {
      const auto d = detect_stress_errors(m, ex.features, 0.5);
      s.push_back(d.word_score());
      y.push_back(ex.word_error());
    }
    return pairwise_auc(s, y);
  };

  StressConfig cfg;
  const auto untrained = StressModel::init(inv(), cfg);
  CHECK(score(untrained) == doctest::Approx(0.5).epsilon(0.05));

  for (bool attention : {true, false}) {
    cfg.attention = attention;
    const auto m = train_stress_model(train, inv(), cfg);
    CHECK(m.loss_trace.back() < m.loss_trace.front());
    CHECK(score(m) > 0.6);
    CHECK(train_stress_model(train, inv(), cfg).loss_trace == m.loss_trace);
  }

  std::vector<StressExample> clean;
  for (const auto& ex : train)
    if (!ex.word_error()) clean.push_back(ex);
  CHECK_THROWS_AS(train_stress_model(clean, inv(), cfg), TrainingFailure);

  cfg.ternary = true;
  const auto ternary = train_stress_model(train, inv(), cfg);
  CHECK(ternary.predict(test[0].features).cols() == 3);

  const auto dir = std::filesystem::temp_directory_path() / "capt_stress_ckpt";
  std::filesystem::create_directories(dir);
  ternary.save((dir / "m").string(), inv());
  const auto back = StressModel::load((dir / "m").string(), inv());
  CHECK(back.config.ternary);
  CHECK(back.predict(test[0].features) == ternary.predict(test[0].features));
  std::filesystem::remove_all(dir);
}
