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

#include "capt/eval/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"
#include "capt/core/rng.hpp"

namespace capt::eval {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrainL1: return "train_L1";
    case Split::kTrainL2: return "train_L2";
    case Split::kTestL2: return "test_L2";
  }
  return "train_L1";
}

Split split_from_string(std::string_view s) {
  if (s == "train_L1") return Split::kTrainL1;
  if (s == "train_L2") return Split::kTrainL2;
  if (s == "test_L2") return Split::kTestL2;
  throw InvalidInput("unknown split '" + std::string(s) + "'");
}

void CorpusManifest::add(CorpusEntry entry, UtterancePtr utterance) {
  require(utterance != nullptr, "manifest entry without speech");
  require(entry.labels.word_errors.size() ==
              static_cast<std::size_t>(entry.canonical.word_count()),
          "manifest entry labels do not match its words");
  if (entry.word_distance.empty()) entry.word_distance.assign(entry.labels.word_errors.size(), 0);
  require(entry.word_distance.size() == entry.labels.word_errors.size(),
          "manifest entry distances do not match its words");
  entries.push_back(std::move(entry));
  speech.push_back(std::move(utterance));
}

std::vector<std::size_t> CorpusManifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == split) out.push_back(i);
  return out;
}

void CorpusManifest::check_speaker_disjoint() const {
  std::set<int> train;
  for (const auto& e : entries)
    if (e.split != Split::kTestL2) train.insert(e.speaker);
  for (const auto& e : entries)
    if (e.split == Split::kTestL2 && train.count(e.speaker))
      throw InvalidInput("speaker " + std::to_string(e.speaker) +
                         " occurs in both the test split and a training split");
}

namespace {

json seq_json(const PhonemeSeq& seq, const PhonemeInventory& inv) {
  json words = json::array();
  for (const auto& w : seq.words()) words.push_back(inv.format(w));
  return words;
}

PhonemeSeq seq_from_json(const json& j, const PhonemeInventory& inv) {
  std::vector<std::vector<PhonemeId>> words;
  for (const auto& w : j) words.push_back(inv.parse(w.get<std::string>()));
  return PhonemeSeq::from_words(words);
}

}  // namespace

void CorpusManifest::save(const fs::path& dir, const PhonemeInventory& inventory) const {
  check_speaker_disjoint();
  fs::create_directories(dir);
  std::set<std::string> written;
  json list = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (written.insert(e.path).second) {
      fs::create_directories((dir / e.path).parent_path());
      save_utterance(*speech[i], (dir / e.path).string(), inventory);
    }
    list.push_back({{"path", e.path},
                    {"canonical", seq_json(e.canonical, inventory)},
                    {"phoneme_errors", e.labels.phoneme_errors},
                    {"word_errors", e.labels.word_errors},
                    {"word_distance", e.word_distance},
                    {"provenance", to_string(e.provenance)},
                    {"speaker", e.speaker},
                    {"seed", e.seed},
                    {"split", to_string(e.split)}});
  }
  const json j = {{"schema_version", kSchemaVersion},
                  {"inventory", hex64(inventory.fingerprint())},
                  {"entry_count", entries.size()},
                  {"utterance_files", written.size()},
                  {"entries", std::move(list)}};
  std::ofstream out(dir / kFileName);
  if (!out) throw Error("cannot write manifest in '" + dir.string() + "'");
  out << j.dump(1) << '\n';
}

CorpusManifest CorpusManifest::load(const fs::path& dir, const PhonemeInventory& inventory) {
  std::ifstream in(dir / kFileName);
  if (!in) throw InvalidInput("no manifest in '" + dir.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
  try {
    require(j.at("schema_version").get<int>() == kSchemaVersion,
            "unsupported manifest schema version");
    require(j.at("inventory").get<std::string>() == hex64(inventory.fingerprint()),
            "manifest was written for another phoneme inventory");
    CorpusManifest m;
    std::map<std::string, UtterancePtr> loaded;
    for (const auto& e : j.at("entries")) {
      CorpusEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.canonical = seq_from_json(e.at("canonical"), inventory);
      entry.labels.phoneme_errors = e.at("phoneme_errors").get<std::vector<std::uint8_t>>();
      entry.labels.word_errors = e.at("word_errors").get<std::vector<std::uint8_t>>();
      entry.word_distance = e.at("word_distance").get<std::vector<int>>();
      entry.provenance = provenance_from_string(e.at("provenance").get<std::string>());
      entry.speaker = e.at("speaker").get<int>();
      entry.seed = e.at("seed").get<std::uint64_t>();
      entry.split = split_from_string(e.at("split").get<std::string>());
      auto& u = loaded[entry.path];
      if (!u) {
        const auto stem = dir / entry.path;
        require(fs::exists(stem.string() + ".bin") && fs::exists(stem.string() + ".json"),
                "manifest path '" + entry.path + "' does not resolve");
        u = std::make_shared<const Utterance>(load_utterance(stem.string(), inventory));
      }
      m.add(std::move(entry), u);
    }
    require(m.entries.size() == j.at("entry_count").get<std::size_t>(),
            "manifest entry count does not match its header");
    require(loaded.size() == j.at("utterance_files").get<std::size_t>(),
            "manifest utterance count does not match the files on disk");
    m.check_speaker_disjoint();
    return m;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
}

void ToyCorpusConfig::validate() const {
  require(l1_speakers >= 1 && l2_train_speakers >= 1 && l2_test_speakers >= 1,
          "every split needs at least one speaker");
  require(l1_utterances >= 1 && l2_train_utterances >= 1 && l2_test_utterances >= 1,
          "every split needs at least one utterance");
  require(max_words >= 1, "max_words must be at least 1");
  for (double p : {variant_rate, l2_error_rate, systematic_rate, pseudo_word_rate})
    require(p >= 0.0 && p <= 1.0, "corpus rates must lie in [0, 1]");
  require(pseudo_words >= 0, "pseudo_words must be non-negative");
  require(pseudo_word_rate == 0.0 || pseudo_words > 0,
          "pseudo_word_rate needs a positive pseudo_words count");
  require(l1_timbre >= 0.0 && l2_timbre >= 0.0, "timbre norms must be non-negative");
  const double total = std::accumulate(severity_weights.begin(), severity_weights.end(), 0.0);
  require(total > 0.0 && std::all_of(severity_weights.begin(), severity_weights.end(),
                                     [](double w) { return w >= 0.0; }),
          "severity weights must be non-negative with a positive sum");
}

PhonemeId l2_confusion(PhonemeId p, const PhonemeInventory& inventory) {
  require(inventory.contains(p), "l2_confusion: phoneme outside the inventory");
  std::vector<PhonemeId> group;
  if (inventory.is_vowel(p)) {
    for (auto v : inventory.vowels())
      if (inventory.stress(v) == inventory.stress(p)) group.push_back(v);
  } else {
    group = inventory.consonants();
  }
  std::sort(group.begin(), group.end());
  const auto it = std::find(group.begin(), group.end(), p);
  return std::next(it) == group.end() ? group.front() : *std::next(it);
}

namespace {

constexpr int kErrorAttempts = 50;

int draw_severity(const std::array<double, 4>& w, Rng& rng) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double u = rng.uniform() * total;
  for (int d = 0; d < 4; ++d) {
    if (u < w[static_cast<std::size_t>(d)]) return d + 1;
    u -= w[static_cast<std::size_t>(d)];
  }
  return 4;
}

PhonemeId random_other(PhonemeId p, const PhonemeInventory& inv, Rng& rng) {
  const auto k = static_cast<PhonemeId>(rng.index(static_cast<std::size_t>(inv.size() - 1)));
  return k >= p ? k + 1 : k;
}

// Realized word with `severity` substituted positions, distinct from every
// lexicon variant.
std::vector<PhonemeId> erroneous_word(const Lexicon::Entry& entry, int severity,
                                      const ToyCorpusConfig& cfg, const PhonemeInventory& inv,
                                      Rng& rng) {
  const auto& canon = entry.variants.front();
  const int n = static_cast<int>(canon.size());
  const int d = std::min(severity, n);
  for (int attempt = 0; attempt < kErrorAttempts; ++attempt) {
    std::vector<int> pos(static_cast<std::size_t>(n));
    std::iota(pos.begin(), pos.end(), 0);
    for (int i = 0; i < d; ++i)
      std::swap(pos[static_cast<std::size_t>(i)],
                pos[static_cast<std::size_t>(i) + rng.index(static_cast<std::size_t>(n - i))]);
    auto word = canon;
    for (int i = 0; i < d; ++i) {
      auto& p = word[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])];
      p = rng.bernoulli(cfg.systematic_rate) ? l2_confusion(p, inv) : random_other(p, inv, rng);
    }
    if (std::find(entry.variants.begin(), entry.variants.end(), word) == entry.variants.end())
      return word;
  }
  throw Error("could not build an erroneous realization of '" + entry.word + "'");
}

constexpr int kPseudoAttempts = 1000;

std::string utterance_path(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utterances/u%06d", index);
  return buf;
}

}  // namespace

std::vector<std::vector<PhonemeId>> pseudo_words(const Lexicon& lexicon, int count,
                                                 std::uint64_t seed) {
  require(count >= 0, "pseudo_words: negative count");
  const auto& inv = lexicon.inventory();
  std::set<std::vector<PhonemeId>> seen;
  for (const auto& e : lexicon.entries()) seen.insert(e.variants.begin(), e.variants.end());
  const auto& consonants = inv.consonants();
  std::vector<PhonemeId> bases;
  for (auto v : inv.vowels())
    if (inv.stress(v) == 0) bases.push_back(v);
  Rng rng(seed);
  std::vector<std::vector<PhonemeId>> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt == kPseudoAttempts * std::max(count, 1))
      throw InvalidInput("pseudo_words: cannot find enough distinct words");
    const int syllables = 1 + static_cast<int>(rng.index(3));
    const int stressed = static_cast<int>(rng.index(static_cast<std::size_t>(syllables)));
    std::vector<PhonemeId> w;
    for (int s = 0; s < syllables; ++s) {
      if (s == 0 ? rng.bernoulli(0.7) : true) w.push_back(consonants[rng.index(consonants.size())]);
      const auto base = bases[rng.index(bases.size())];
      w.push_back(inv.with_stress(base, s == stressed ? 1 : 0));
      if (s + 1 == syllables && rng.bernoulli(0.6))
        w.push_back(consonants[rng.index(consonants.size())]);
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

CorpusManifest generate_toy_corpus(const Synthesizer& synth, const Lexicon& lexicon,
                                   const ToyCorpusConfig& cfg) {
  cfg.validate();
  require(lexicon.size() > 0, "generate_toy_corpus: empty lexicon");
  const auto& inv = synth.inventory();
  Rng rng(cfg.seed);
  CorpusManifest m;
  int speaker_id = 0;
  const auto pseudo = pseudo_words(lexicon, cfg.pseudo_words, derive_seed(cfg.seed, 0x9e3779b9));

  auto make_split = [&](Split split, int speakers, int utterances, double timbre, bool l2) {
    std::vector<SpeakerProfile> voices;
    for (int s = 0; s < speakers; ++s) voices.push_back(random_speaker(speaker_id++, timbre, rng));
    for (int i = 0; i < utterances; ++i) {
      const auto& voice = voices[static_cast<std::size_t>(i % speakers)];
      const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.max_words)));
      std::vector<std::vector<PhonemeId>> canonical, realized;
      std::vector<std::uint8_t> word_errors, phoneme_errors;
      std::vector<int> distance;
      for (int w = 0; w < n; ++w) {
        if (!l2 && !pseudo.empty() && rng.bernoulli(cfg.pseudo_word_rate)) {
          const auto& word = pseudo[rng.index(pseudo.size())];
          word_errors.push_back(0);
          distance.push_back(0);
          phoneme_errors.insert(phoneme_errors.end(), word.size(), 0);
          canonical.push_back(word);
          realized.push_back(word);
          continue;
        }
        const auto& entry = lexicon.entries()[rng.index(lexicon.size())];
        const auto& canon = entry.variants.front();
        auto spoken = canon;
        if (l2 && rng.bernoulli(cfg.l2_error_rate)) {
          spoken = erroneous_word(entry, draw_severity(cfg.severity_weights, rng), cfg, inv, rng);
        } else if (entry.variants.size() > 1 && rng.bernoulli(cfg.variant_rate)) {
          spoken = entry.variants[1 + rng.index(entry.variants.size() - 1)];
        }
        const bool error =
            std::find(entry.variants.begin(), entry.variants.end(), spoken) == entry.variants.end();
        word_errors.push_back(error ? 1 : 0);
        distance.push_back(error ? phoneme_distance(canon, spoken) : 0);
        for (std::size_t k = 0; k < canon.size(); ++k)
          phoneme_errors.push_back(error && spoken[k] != canon[k] ? 1 : 0);
        canonical.push_back(canon);
        realized.push_back(std::move(spoken));
      }
      const std::uint64_t seed = rng.next_u64();
      auto u = std::make_shared<const Utterance>(
          synth.synthesize(PhonemeSeq::from_words(realized), voice, seed));
      CorpusEntry e;
      e.path = utterance_path(static_cast<int>(m.entries.size()));
      e.canonical = PhonemeSeq::from_words(canonical);
      e.labels = ErrorLabels{std::move(phoneme_errors), std::move(word_errors)};
      e.word_distance = std::move(distance);
      e.speaker = voice.speaker_id;
      e.seed = seed;
      e.split = split;
      m.add(std::move(e), std::move(u));
    }
  };

  make_split(Split::kTrainL1, cfg.l1_speakers, cfg.l1_utterances, cfg.l1_timbre, false);
  make_split(Split::kTrainL2, cfg.l2_train_speakers, cfg.l2_train_utterances, cfg.l2_timbre, true);
  make_split(Split::kTestL2, cfg.l2_test_speakers, cfg.l2_test_utterances, cfg.l2_timbre, true);
  return m;
}

}  // namespace capt::eval
