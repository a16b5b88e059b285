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
#include <map>

#include "capt/core/error.hpp"
#include "capt/nn/ctc.hpp"
#include "../oracles/pm_oracle.hpp"
#include "capt/pronunciation_model.hpp"
#include "toy_corpus.hpp"

using namespace capt;
using capt::testing::toy_lexicon;
using capt::oracle::brute_force_hypotheses;
using capt::oracle::random_posteriorgram;

namespace {

const PhonemeInventory& inv() { return PhonemeInventory::standard(); }

std::vector<PMWordPair> identity_pairs() {
  std::vector<PMWordPair> out;
  for (const auto& e : toy_lexicon().entries())
    for (const auto& v : e.variants) out.push_back({v, v, 1.0});
  return out;
}

const PMModel& identity_pm() {
  static const PMModel pm = train_pm(identity_pairs(), inv(), PMConfig{});
  return pm;
}

// Identity pairs plus "enough" realized with either first vowel.
const PMModel& variant_pm() {
  static const PMModel pm = [] {
    auto pairs = identity_pairs();
    const auto& enough = toy_lexicon().at("enough").variants;
    pairs.push_back({enough[0], enough[0], 4.0});
    pairs.push_back({enough[0], enough[1], 4.0});
    return train_pm(pairs, inv(), PMConfig{});
  }();
  return pm;
}

PhonemePosteriorgram one_hot(const std::vector<PhonemeId>& labels) {
  const int classes = inv().size() + 1;
  const int T = 2 * static_cast<int>(labels.size()) + 1;
  PhonemePosteriorgram pg{Eigen::MatrixXd::Zero(T, classes)};
  for (int t = 0; t < T; ++t) pg.probs(t, t % 2 == 1 ? labels[t / 2] : classes - 1) = 1.0;
  return pg;
}

RecognitionResult result_of(PhonemePosteriorgram pg) { return decode_posteriorgram(std::move(pg)); }

PhonemeSeq random_short_text(Rng& rng) {
  for (;;) {
    auto r = capt::testing::random_text(rng, 2);
    if (r.size() <= 6) return r;
  }
}

}  // namespace

TEST_CASE("untrained model is uniform and row-stochastic") {
  PMConfig cfg;
  const auto pm = PMModel::init(inv(), cfg);
  CHECK(pm.vocabulary() == inv().size() + 1);
  const std::vector<PhonemeId> r{0, 18, 4}, rr{0, 19};
  const auto d = pm.step_distributions(r, rr);
  CHECK(d.rows() == 3);
  CHECK(d.cols() == pm.vocabulary());
  for (int i = 0; i < d.rows(); ++i) {
    CHECK(d.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.row(i).maxCoeff() == doctest::Approx(1.0 / pm.vocabulary()).epsilon(1e-12));
  }
}

TEST_CASE("identity-trained model reproduces its input") {
  const auto& pm = identity_pm();
  CHECK(pm.loss_trace().back() < pm.loss_trace().front());
  for (const auto& e : toy_lexicon().entries())
    for (const auto& v : e.variants) {
      CAPTURE(inv().format(v));
      CHECK(std::exp(pm.log_prob(v, v)) >= 0.9);
    }
  const auto d = pm.step_distributions({0, 18}, {0, 18, 4});
  for (int i = 0; i < d.rows(); ++i) CHECK(d.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training is deterministic given the seed") {
  PMConfig cfg;
  cfg.epochs = 3;
  const auto a = train_pm(identity_pairs(), inv(), cfg);
  const auto b = train_pm(identity_pairs(), inv(), cfg);
  CHECK(a.loss_trace() == b.loss_trace());
  CHECK(a.log_prob({0, 18}, {1, 18}) == b.log_prob({0, 18}, {1, 18}));
}

TEST_CASE("empty inputs are rejected") {
  CHECK_THROWS_AS(train_pm({}, inv(), PMConfig{}), InvalidInput);
  CHECK_THROWS_AS(identity_pm().log_prob({}, {0}), InvalidInput);
  RecognizerConfig rc;
  const auto rec = RecognizerModel::init(inv(), rc);
  CHECK_THROWS_AS(build_pm_corpus(rec, {}), InvalidInput);
}

TEST_CASE("word pairs are merged with multiplicities") {
  const auto r = PhonemeSeq::from_words({{0, 18}, {3, 19, 20}});
  const std::vector<PMPair> pairs{{r, {0, 18, 3, 19, 20}}, {r, {0, 18, 6, 19, 20}}};
  const auto wp = word_pairs(pairs);
  REQUIRE(wp.size() == 3);
  double total = 0.0;
  for (const auto& p : wp) {
    total += p.weight;
    if (p.canonical == std::vector<PhonemeId>{0, 18}) {
      CHECK(p.realized == p.canonical);
      CHECK(p.weight == 2.0);
    }
  }
  CHECK(total == 4.0);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "capt_pm_ckpt";
  std::filesystem::create_directories(dir);
  const auto stem = (dir / "pm").string();
  identity_pm().save(stem, inv());
  const auto back = PMModel::load(stem, inv());
  CHECK(back.loss_trace() == identity_pm().loss_trace());
  CHECK(back.log_prob({0, 18, 4}, {0, 19, 4}) == identity_pm().log_prob({0, 18, 4}, {0, 19, 4}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("deterministic posteriorgram gives the sequence probability") {
  const auto& pm = identity_pm();
  const auto r = PhonemeSeq::from_words({{6, 20, 3}, {18, 9}});
  const std::vector<PhonemeId> heard{6, 20, 4, 18, 9};
  const auto s = score(pm, result_of(one_hot(heard)), r);
  CHECK(s.hypotheses == 1);
  const double expected =
      std::exp(pm.log_prob({6, 20, 3}, {6, 20, 4}) + pm.log_prob({18, 9}, {18, 9}));
  CHECK(s.pi == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.per_word_pi[1] == doctest::Approx(std::exp(pm.log_prob({18, 9}, {18, 9}))));
  CHECK(std::isfinite(s.log_pi));
}

TEST_CASE("K below one is rejected") {
  ScoreOptions opt;
  opt.top_k = 0;
  CHECK_THROWS_AS(score(identity_pm(), result_of(one_hot({0})), PhonemeSeq::single_word({0}), opt),
                  InvalidInput);
}

TEST_CASE("full enumeration matches brute-force marginalization") {
  const auto& pm = variant_pm();
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_short_text(rng);
    const auto pg = random_posteriorgram(rng, r.phonemes());
    ScoreOptions opt;
    opt.lattice.max_branching = 20;
    const HypothesisLattice lattice(pg, opt.lattice);
    const auto oracle = brute_force_hypotheses(pg, opt.lattice.min_second);

    double oracle_pi = 0.0, mass = 0.0;
    std::vector<double> oracle_words(r.word_count(), 0.0);
    for (const auto& [h, p] : oracle) {
      mass += p;
      const auto segs = segment_by_words(align(r.phonemes(), h), r, h);
      double prod = 1.0;
      for (int w = 0; w < r.word_count(); ++w) {
        const double pw = std::exp(pm.log_prob(r.word(w), segs[w]));
        prod *= pw;
        oracle_words[w] += p * pw;
      }
      oracle_pi += p * prod;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    const auto all = lattice.all();
    REQUIRE(all.size() == oracle.size());
    for (const auto& h : all) CHECK(std::abs(h.prob - oracle.at(h.phonemes)) <= 1e-12);

    opt.exact = true;
    const auto exact = score(pm, result_of(pg), r, opt);
    CHECK(std::abs(exact.pi - oracle_pi) <= 1e-9);
    for (int w = 0; w < r.word_count(); ++w)
      CHECK(std::abs(exact.per_word_pi[w] - oracle_words[w]) <= 1e-9);

    opt.exact = false;
    opt.top_k = static_cast<int>(oracle.size());
    CHECK(std::abs(score(pm, result_of(pg), r, opt).pi - oracle_pi) <= 1e-9);
  }
}

TEST_CASE("score is non-decreasing in K") {
  const auto& pm = variant_pm();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = random_short_text(rng);
    const auto rec = result_of(random_posteriorgram(rng, r.phonemes()));
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
      ScoreOptions opt;
      opt.top_k = k;
      const double pi = score(pm, rec, r, opt).pi;
      CHECK(pi >= prev - 1e-15);
      CHECK(pi <= 1.0 + 1e-12);
      prev = pi;
    }
  }
}

TEST_CASE("top-K lists the best path first") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pg = random_posteriorgram(rng, {0, 18, 4});
    const HypothesisLattice lattice(pg);
    const auto top = lattice.top_k(3);
    REQUIRE(!top.empty());
    CHECK(top.front().phonemes == nn::ctc_collapse(lattice.path(0), lattice.blank()));
    for (std::size_t i = 0; i < top.size(); ++i)
      for (std::size_t j = i + 1; j < top.size(); ++j) CHECK(top[i].phonemes != top[j].phonemes);
  }
}

TEST_CASE("canonical outscores single substitutions") {
  const auto& pm = identity_pm();
  Rng rng(31);
  int wins = 0;
  const int cases = 300;
  for (int i = 0; i < cases; ++i) {
    const auto r = capt::testing::random_text(rng, 3);
    auto sub = r.phonemes();
    const auto pos = rng.index(sub.size());
    sub[pos] = (sub[pos] + 1 + static_cast<int>(rng.index(inv().size() - 1))) % inv().size();
    const double canon = score(pm, result_of(one_hot(r.phonemes())), r).pi;
    const double other = score(pm, result_of(one_hot(sub)), r).pi;
    wins += canon > other;
  }
  CHECK(wins >= 0.95 * cases);
}

TEST_CASE("lexicon variant is far more plausible than a random substitution") {
  const auto& pm = variant_pm();
  const auto& enough = toy_lexicon().at("enough").variants;
  const auto r = PhonemeSeq::single_word(enough[0]);
  const double variant = score(pm, result_of(one_hot(enough[1])), r).pi;
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto sub = enough[0];
    const auto pos = rng.index(sub.size());
    sub[pos] = (sub[pos] + 1 + static_cast<int>(rng.index(inv().size() - 1))) % inv().size();
    if (sub == enough[1]) continue;
    worst = std::max(worst, score(pm, result_of(one_hot(sub)), r).pi);
  }
  CHECK(variant > 0.2);
  CHECK(variant > 10.0 * worst);
}

TEST_CASE("native corpus pairs through the recognizer") {
  const auto quiet = Synthesizer::standard().with_config(SynthConfig{0.0});
  const auto train = capt::testing::toy_corpus(quiet, 150, 1, 1, 3, 0.25);
  RecognizerConfig rc;
  rc.epochs = 25;
  const auto rec = train_recognizer(train, inv(), rc);

  // Native speakers saying either variant of "enough", transcribed canonically.
  const auto& enough = toy_lexicon().at("enough").variants;
  std::vector<TrainingExample> native;
  const auto canonical = PhonemeSeq::single_word(enough[0]);
  for (int i = 0; i < 20; ++i) {
    const auto spoken = PhonemeSeq::single_word(enough[i % 2]);
    auto u = std::make_shared<const Utterance>(quiet.synthesize(spoken, tts_speaker(), 100 + i));
    native.push_back({ErrorLabels::no_error(canonical), u, canonical, Provenance::kOriginal});
  }
  const auto pairs = build_pm_corpus(rec, native);
  CHECK(pairs.size() == native.size());
  int variant_a = 0, variant_b = 0;
  for (const auto& p : pairs) {
    CHECK(p.canonical == canonical);
    variant_a += p.recognized == enough[0];
    variant_b += p.recognized == enough[1];
  }
  CHECK(variant_a >= 8);
  CHECK(variant_b >= 8);
}
