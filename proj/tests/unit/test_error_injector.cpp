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
#include <map>

#include "capt/error_injector.hpp"
#include "test_util.hpp"

using namespace capt;
using capt::testing::random_seq;

namespace {

const PhonemeInventory& inv() { return PhonemeInventory::standard(); }

std::shared_ptr<const Utterance> fake_utterance(const PhonemeSeq& r) {
  auto u = std::make_shared<Utterance>();
  u->canonical = r;
  u->speech = FrameMatrix::Random(3 * r.size(), kFeatureDim);
  return u;
}

}  // namespace

TEST_CASE("perturbation config validation") {
  CHECK_NOTHROW(PerturbationConfig{}.validate());
  CHECK_THROWS_AS((PerturbationConfig{0.7, 0.0, 0.5, 0}.validate()), InvalidInput);
  CHECK_THROWS_AS((PerturbationConfig{-0.1, 0.0, 0.0, 0}.validate()), InvalidInput);
  CHECK_THROWS_AS((PerturbationConfig{0.1, 1.5, 0.0, 0}.validate()), InvalidInput);
  CHECK(provenance_from_string(to_string(Provenance::kS2S)) == Provenance::kS2S);
  CHECK_THROWS_AS(provenance_from_string("tts"), InvalidInput);
}

TEST_CASE("sample_utterances") {
  const auto one = sample_utterances(1, 5, 3);
  CHECK(one == std::vector<std::size_t>(5, 0));
  CHECK_THROWS_AS(sample_utterances(10, 0, 3), InvalidInput);
  CHECK_THROWS_AS(sample_utterances(0, 3, 3), InvalidInput);
  CHECK(sample_utterances(10, 50, 9) == sample_utterances(10, 50, 9));

  const auto many = sample_utterances(10, 10000, 42);
  std::map<std::size_t, int> counts;
  for (auto i : many) counts[i]++;
  CHECK(counts.size() == 10);
  for (const auto& [i, c] : counts) CHECK(std::abs(c / 10000.0 - 0.1) <= 0.01);
}

TEST_CASE("perturb examples") {
  Rng rng(1);
  const auto r = random_seq(rng, 3, 5, 24);
  CHECK(perturb(r, PerturbationConfig::none(4), inv()) == r);

  const auto forced = perturb(r, PerturbationConfig::substitution_only(1.0, 4), inv());
  REQUIRE(forced.size() == r.size());
  CHECK(forced.spans() == r.spans());
  for (int j = 0; j < r.size(); ++j) CHECK(forced[j] != r[j]);

  std::vector<std::vector<PhonemeId>> big(1000, std::vector<PhonemeId>(10, 5));
  const auto long_seq = PhonemeSeq::from_words(big);
  const auto out = perturb(long_seq, PerturbationConfig::substitution_only(0.2, 77), inv());
  int changed = 0;
  for (int j = 0; j < out.size(); ++j) changed += out[j] != 5;
  CHECK(std::abs(changed / 10000.0 - 0.2) <= 0.01);
}

TEST_CASE("perturb is deterministic and keeps spans consistent") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = random_seq(rng, 1 + static_cast<int>(rng.index(4)), 6, 24);
    PerturbationConfig cfg{0.3, 0.2, 0.2, static_cast<std::uint64_t>(trial)};
    try {
      const auto a = perturb(r, cfg, inv());
      CHECK(a == perturb(r, cfg, inv()));
      CHECK(a.word_count() == r.word_count());
      a.check(inv());
    } catch (const EmptyPerturbation&) {
      // legal outcome; exercised through the retry below
    }
    Rng local(cfg.seed);
    const auto b = perturb_with_retry(r, cfg, inv(), local);
    CHECK(b.word_count() == r.word_count());
  }
}

TEST_CASE("single-phoneme words are never deleted") {
  const auto r = PhonemeSeq::from_words({{3}, {4}, {5}});
  for (std::uint64_t s = 0; s < 200; ++s)
    CHECK(perturb(r, PerturbationConfig{0.0, 0.0, 1.0, s}, inv()) == r);
}

TEST_CASE("empty word triggers bounded retry failure") {
  const auto r = PhonemeSeq::from_words({{3, 4}});
  CHECK_THROWS_AS(perturb(r, PerturbationConfig{0.0, 0.0, 1.0, 1}, inv()), EmptyPerturbation);
  CHECK_THROWS_AS(make_p2p_example(fake_utterance(r), r, PerturbationConfig{0.0, 0.0, 1.0, 1},
                                   inv()),
                  Error);
}

TEST_CASE("make_p2p_example") {
  const auto r = PhonemeSeq::from_words({{1, 19, 4}, {22, 10}, {5}});
  const auto u = fake_utterance(r);
  const FrameMatrix before = u->speech;

  const auto none = make_p2p_example(u, r, PerturbationConfig::none(3), inv());
  CHECK(none.labels.error_word_count() == 0);
  CHECK(none.canonical == r);
  CHECK(none.provenance == Provenance::kP2P);

  const auto all = make_p2p_example(u, r, PerturbationConfig::substitution_only(1.0, 3), inv());
  CHECK(all.labels.word_errors == std::vector<std::uint8_t>{1, 1, 1});
  CHECK(all.speech.get() == u.get());
  CHECK((all.speech->speech.array() == before.array()).all());

  const auto single = PhonemeSeq::single_word({7, 20});
  PerturbationConfig first_only{0.0, 0.0, 0.0, 0};
  // Forced substitution at position 0 built by hand and checked through projection.
  const auto forced = PhonemeSeq::single_word({8, 20});
  CHECK(project_errors(single, forced).word_errors == std::vector<std::uint8_t>{1});
  CHECK(make_p2p_example(fake_utterance(single), single, first_only, inv()).canonical == single);
}

TEST_CASE("substitution-only perturbation: distance equals substitutions") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = random_seq(rng, 3, 6, 24);
    const auto rp =
        perturb(r, PerturbationConfig::substitution_only(0.3, static_cast<std::uint64_t>(trial)),
                inv());
    int substituted = 0;
    for (int j = 0; j < r.size(); ++j) substituted += rp[j] != r[j];
    CHECK(phoneme_distance(r, rp, inv()) == substituted);
  }
}

TEST_CASE("fraction of mispronounced words follows 1 - (1 - p)^len") {
  const double p = 0.15;
  for (int len = 1; len <= 5; ++len) {
    std::vector<std::vector<PhonemeId>> ws(4000, std::vector<PhonemeId>(len, 2));
    const auto r = PhonemeSeq::from_words(ws);
    const auto rp = perturb(r, PerturbationConfig::substitution_only(p, 100 + len), inv());
    const auto labels = project_errors(r, rp);
    const double frac = labels.error_word_count() / 4000.0;
    const double expected = 1.0 - std::pow(1.0 - p, len);
    const double se = std::sqrt(expected * (1 - expected) / 4000.0);
    CHECK(std::abs(frac - expected) <= 4 * se);
  }
}
