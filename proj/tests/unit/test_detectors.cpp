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
#include <set>

#include "capt/core/error.hpp"
#include "capt/detectors.hpp"
#include "toy_corpus.hpp"

using namespace capt;
using capt::testing::toy_corpus;
using capt::testing::toy_lexicon;

namespace {

const PhonemeInventory& inv() { return PhonemeInventory::standard(); }

RecognitionResult result(const std::vector<PhonemeId>& decoded, std::vector<double> lik = {}) {
  if (lik.empty()) lik.assign(decoded.size(), 1.0);
  return {PhonemeSeq::single_word(decoded), std::move(lik), {}};
}

PMScore pm_score(std::vector<double> per_word) {
  PMScore s;
  s.per_word_pi = std::move(per_word);
  s.pi = 1.0;
  for (double p : s.per_word_pi) s.pi *= p;
  s.log_pi = std::log(s.pi);
  return s;
}

// Random decode near r with likelihoods a greedy decode could produce.
RecognitionResult random_result(Rng& rng, const PhonemeSeq& r) {
  PerturbationConfig cfg{0.15, 0.05, 0.05};
  const auto d = perturb_with_retry(r, cfg, inv(), rng);
  std::vector<double> lik(d.size());
  for (auto& l : lik) l = rng.uniform(1.0 / (inv().size() + 1), 1.0);
  return result(d.phonemes(), std::move(lik));
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

std::vector<TrainingExample> labelled_examples(int count, int speakers, std::uint64_t seed) {
  const auto corpus = toy_corpus(Synthesizer::standard(), count, speakers, seed, 2);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& u = corpus[i];
    out.push_back({ErrorLabels::no_error(u->canonical), u, u->canonical, Provenance::kOriginal});
    out.push_back(make_p2p_example(u, u->canonical, {0.3, 0.0, 0.0, seed * 1000 + i}, inv()));
  }
  return out;
}

WeaklySConfig small_config() {
  WeaklySConfig cfg;
  cfg.encoder = {2, 24, 1};
  cfg.hidden = 16;
  cfg.attention = 16;
  cfg.epochs = 8;
  cfg.finetune_epochs = 0;
  cfg.l2_adapt = false;
  return cfg;
}

std::pair<std::vector<double>, std::vector<int>> word_scores(const MDNModel& m,
                                                             const std::vector<TrainingExample>& xs) {
  std::vector<double> s;
  std::vector<int> y;
  for (const auto& ex : xs) {
    const auto p = detect_weakly_s(m, *ex.speech, ex.canonical);
    for (std::size_t w = 0; w < p.probs.size(); ++w) {
      s.push_back(p.probs[w]);
      y.push_back(ex.labels.word_errors[w]);
    }
  }
  return {s, y};
}

}  // namespace

TEST_CASE("decisions follow the threshold") {
  const auto p = WordErrorProbs::make({0.2, 0.5, 0.7}, 0.5);
  CHECK(p.decisions == std::vector<std::uint8_t>{0, 0, 1});
  CHECK(p.flagged() == 1);
  CHECK_THROWS_AS(WordErrorProbs::make({std::nan("")}, 0.5), InvalidInput);
}

TEST_CASE("PR-NOLIK flags edited words") {
  const auto r = PhonemeSeq::from_words({{6, 20, 3}, {18, 9}});
  CHECK(detect_prnolik(result(r.phonemes()), r).probs == std::vector<double>{0, 0});
  CHECK(detect_prnolik(result({6, 21, 3, 18, 9}), r).probs == std::vector<double>{1, 0});

  const auto& enough = toy_lexicon().at("enough").variants;
  const auto r2 = PhonemeSeq::from_words({{18, 9}, enough[0]});
  std::vector<PhonemeId> heard{18, 9};
  heard.insert(heard.end(), enough[1].begin(), enough[1].end());
  CHECK(detect_prnolik(result(heard), r2).probs == std::vector<double>{0, 1});
}

TEST_CASE("PR-LIK scores") {
  const auto r = PhonemeSeq::from_words({{6, 20, 3}, {18, 9}});
  CHECK(detect_prlik(result(r.phonemes()), r, 0.5).probs == std::vector<double>{0, 0});
  const auto s = detect_prlik(result({6, 21, 3, 18, 9}, {1.0, 0.9, 0.8, 0.7, 0.95}), r, 0.5);
  CHECK(s.probs[0] == 1.0);
  CHECK(s.probs[1] == doctest::Approx(0.3));
}

TEST_CASE("PR-LIK sweeps while PR-NOLIK has one operating point") {
  Rng rng(4);
  std::vector<double> lik_scores, nolik_scores;
  for (int i = 0; i < 200; ++i) {
    const auto r = capt::testing::random_text(rng, 3);
    const auto rec = random_result(rng, r);
    for (double v : prlik_scores(rec, r)) lik_scores.push_back(v);
    for (double v : detect_prnolik(rec, r).probs) nolik_scores.push_back(v);
  }
  std::set<std::pair<int, int>> lik_points, nolik_points;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    int a = 0, b = 0;
    for (double v : lik_scores) a += v > t;
    for (double v : nolik_scores) b += v > t;
    lik_points.insert({a, 0});
    nolik_points.insert({b, 0});
  }
  CHECK(lik_points.size() >= 2);
  CHECK(nolik_points.size() == 1);
}

TEST_CASE("PR-NOLIK is the threshold limit of PR-LIK") {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const auto r = capt::testing::random_text(rng, 3);
    const auto rec = random_result(rng, r);
    CHECK(detect_prlik(rec, r, kPrlikNolikThreshold).decisions == detect_prnolik(rec, r).decisions);
  }
}

TEST_CASE("PR-PM combination") {
  const auto r = PhonemeSeq::from_words({{6, 20, 3}, {18, 9}});
  const auto same = result(r.phonemes(), {0.99, 0.99, 0.99, 0.99, 0.99});
  CHECK(detect_prpm(result(r.phonemes()), pm_score({1.0, 1.0}), r, 0.5).probs ==
        std::vector<double>{0, 0});

  const auto changed = result({6, 21, 3, 18, 9});
  const auto lik = detect_prlik(changed, r, 0.5).probs;
  const auto pm = detect_prpm(changed, pm_score({0.7, 0.9}), r, 0.5).probs;
  CHECK(lik[0] == 1.0);
  CHECK(pm[0] < lik[0]);
  CHECK(pm[0] == doctest::Approx(std::sqrt(0.3)));

  // Vanishing pi leaves the recognizer evidence in charge.
  CHECK(detect_prpm(changed, pm_score({1e-12, 1.0}), r, 0.5).probs[0] ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(detect_prpm(same, pm_score({1e-12, 1.0}), r, 0.5).probs[0] ==
        doctest::Approx(std::sqrt(0.01)).epsilon(1e-6));

  CHECK_THROWS_AS(detect_prpm(changed, pm_score({1.0}), r, 0.5), InvalidInput);
}

TEST_CASE("PR-PM never exceeds PR-LIK at pi = 1") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const auto r = capt::testing::random_text(rng, 3);
    const auto rec = random_result(rng, r);
    const auto lik = prlik_scores(rec, r);
    const auto pm = detect_prpm(rec, pm_score(std::vector<double>(r.word_count(), 1.0)), r, 0.5);
    for (int w = 0; w < r.word_count(); ++w) {
      CHECK(pm.probs[w] <= lik[w]);
      CHECK((pm.probs[w] == lik[w]) == (lik[w] == 0.0));
    }
  }
}

TEST_CASE("raising the threshold never flags more words") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto r = capt::testing::random_text(rng, 3);
    const auto rec = random_result(rng, r);
    std::vector<double> pis(r.word_count());
    for (auto& p : pis) p = rng.uniform();
    const double lo = rng.uniform(), hi = rng.uniform(lo, 1.0);
    CHECK(detect_prlik(rec, r, hi).flagged() <= detect_prlik(rec, r, lo).flagged());
    CHECK(detect_prpm(rec, pm_score(pis), r, hi).flagged() <=
          detect_prpm(rec, pm_score(pis), r, lo).flagged());
    const auto probs = detect_prnolik(rec, r).probs;
    CHECK(WordErrorProbs::make(probs, hi).flagged() <= WordErrorProbs::make(probs, lo).flagged());
  }
}

TEST_CASE("weakly-s gradients match finite differences") {
  auto batch = labelled_examples(2, 2, 3);
  batch.resize(3);
  WeaklySConfig cfg;
  cfg.encoder = {1, 6, 1};
  cfg.embedding = 3;
  cfg.hidden = 4;
  cfg.attention = 3;
  auto model = MDNModel::init(inv(), cfg);
  Rng rng(5);
  // Zero-initialized heads and biases get random values.
  for (auto& p : model.params.all())
    if (p.value.isZero()) p.value = nn::gaussian(p.value.rows(), p.value.cols(), 0.5, rng);
  CHECK(gradient_check(model, batch, 0.5) < 1e-4);
  CHECK(gradient_check(model, batch, 0.0) < 1e-4);
}

TEST_CASE("weakly-s output shape, range and failures") {
  const auto xs = labelled_examples(6, 2, 5);
  const auto model = MDNModel::init(inv(), small_config());
  for (const auto& ex : xs) {
    const auto p = detect_weakly_s(model, *ex.speech, ex.canonical);
    CHECK(static_cast<int>(p.probs.size()) == ex.canonical.word_count());
    for (double v : p.probs) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK_THROWS_AS(detect_weakly_s(model, *xs[0].speech, PhonemeSeq()), InvalidInput);

  std::vector<TrainingExample> clean;
  for (const auto& ex : xs)
    if (ex.provenance == Provenance::kOriginal) clean.push_back(ex);
  CHECK_THROWS_AS(train_weakly_s({clean, {}}, inv(), small_config()), TrainingFailure);
  auto off = small_config();
  off.l1l2_train = false;
  CHECK_THROWS_AS(train_weakly_s({xs, {}}, inv(), off), InvalidInput);
}

TEST_CASE("recognition head is untouched when lambda is zero") {
  const auto xs = labelled_examples(10, 2, 6);
  auto cfg = small_config();
  cfg.lambda = 0.0;
  cfg.epochs = 2;
  const auto before = MDNModel::init(inv(), cfg);
  const auto after = train_weakly_s({xs, {}}, inv(), cfg);
  CHECK(after.params.get("prn.w").value == before.params.get("prn.w").value);
  CHECK(after.params.get("prn.b").value == before.params.get("prn.b").value);
  CHECK(after.params.get("mdn.w").value != before.params.get("mdn.w").value);

  cfg.lambda = 0.5;
  const auto joint = train_weakly_s({xs, {}}, inv(), cfg);
  CHECK(joint.params.get("prn.w").value != before.params.get("prn.w").value);
}

TEST_CASE("trained weakly-s beats the untrained model on held-out speakers") {
  const auto train = labelled_examples(80, 6, 7);
  const auto test = labelled_examples(40, 3, 70);
  auto cfg = small_config();
  const auto untrained = MDNModel::init(inv(), cfg);
  const auto [s0, y0] = word_scores(untrained, test);
  CHECK(pairwise_auc(s0, y0) == doctest::Approx(0.5).epsilon(0.05));

  for (std::uint64_t seed : {1, 2}) {
    cfg.seed = seed;
    const auto model = train_weakly_s({train, {}}, inv(), cfg);
    CHECK(model.loss_trace.back() < model.loss_trace.front());
    const auto [s, y] = word_scores(model, test);
    CHECK(pairwise_auc(s, y) > pairwise_auc(s0, y0));
  }

  const auto again = train_weakly_s({train, {}}, inv(), cfg);
  const auto twice = train_weakly_s({train, {}}, inv(), cfg);
  CHECK(again.loss_trace == twice.loss_trace);

  const auto dir = std::filesystem::temp_directory_path() / "capt_mdn_ckpt";
  std::filesystem::create_directories(dir);
  again.save((dir / "mdn").string(), inv());
  const auto back = MDNModel::load((dir / "mdn").string(), inv());
  CHECK(back.config.encoder.hidden == cfg.encoder.hidden);
  CHECK(detect_weakly_s(back, *test[1].speech, test[1].canonical).probs ==
        detect_weakly_s(again, *test[1].speech, test[1].canonical).probs);
  std::filesystem::remove_all(dir);
}
