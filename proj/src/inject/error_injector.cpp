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

#include "capt/error_injector.hpp"

#include <cmath>
#include <string>

namespace capt {

namespace {

constexpr int kMaxAttempts = 3;

PhonemeId random_other(PhonemeId original, const PhonemeInventory& inventory, Rng& rng) {
  const auto k = static_cast<PhonemeId>(rng.index(static_cast<std::size_t>(inventory.size() - 1)));
  return k >= original ? k + 1 : k;
}

bool in_unit(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void PerturbationConfig::validate() const {
  require(in_unit(p_sub) && in_unit(p_ins) && in_unit(p_del),
          "perturbation probabilities must lie in [0, 1]");
  require(p_sub + p_del <= 1.0, "p_sub + p_del must not exceed 1");
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kOriginal: return "original";
    case Provenance::kP2P: return "p2p";
    case Provenance::kT2S: return "t2s";
    case Provenance::kS2S: return "s2s";
  }
  return "original";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "original") return Provenance::kOriginal;
  if (s == "p2p") return Provenance::kP2P;
  if (s == "t2s") return Provenance::kT2S;
  if (s == "s2s") return Provenance::kS2S;
  throw InvalidInput("unknown provenance '" + std::string(s) + "'");
}

std::vector<std::size_t> sample_utterances(std::size_t corpus_size, int n, std::uint64_t seed) {
  require(corpus_size > 0, "sample_utterances: empty corpus");
  require(n >= 1, "sample_utterances: n must be at least 1");
  Rng rng(seed);
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  for (auto& i : out) i = rng.index(corpus_size);
  return out;
}

PhonemeSeq perturb(const PhonemeSeq& r, const PerturbationConfig& cfg,
                   const PhonemeInventory& inventory, Rng& rng) {
  cfg.validate();
  r.check(inventory);
  std::vector<std::vector<PhonemeId>> words;
  for (const auto& span : r.spans()) {
    std::vector<PhonemeId> out;
    const bool can_delete = span.length() > 1;
    for (int j = span.start; j < span.end; ++j) {
      const double u = rng.uniform();
      if (u < cfg.p_del && can_delete) {
        // deleted
      } else if (u >= cfg.p_del && u < cfg.p_del + cfg.p_sub) {
        out.push_back(random_other(r[j], inventory, rng));
      } else {
        out.push_back(r[j]);
      }
      if (cfg.p_ins > 0.0 && rng.bernoulli(cfg.p_ins))
        out.push_back(static_cast<PhonemeId>(rng.index(static_cast<std::size_t>(inventory.size()))));
    }
    if (out.empty())
      throw EmptyPerturbation("perturbation deleted every phoneme of word " +
                              std::to_string(span.word));
    words.push_back(std::move(out));
  }
  return PhonemeSeq::from_words(words);
}

PhonemeSeq perturb(const PhonemeSeq& r, const PerturbationConfig& cfg,
                   const PhonemeInventory& inventory) {
  Rng rng(cfg.seed);
  return perturb(r, cfg, inventory, rng);
}

PhonemeSeq perturb_with_retry(const PhonemeSeq& r, const PerturbationConfig& cfg,
                              const PhonemeInventory& inventory, Rng& rng) {
  for (int attempt = 1;; ++attempt) {
    try {
      return perturb(r, cfg, inventory, rng);
    } catch (const EmptyPerturbation&) {
      if (attempt == kMaxAttempts)
        throw Error("perturbation kept emptying a word after " + std::to_string(kMaxAttempts) +
                    " attempts");
    }
  }
}

TrainingExample make_p2p_example(std::shared_ptr<const Utterance> u, const PhonemeSeq& r,
                                 const PerturbationConfig& cfg,
                                 const PhonemeInventory& inventory) {
  require(u != nullptr, "make_p2p_example: no utterance");
  Rng rng(cfg.seed);
  PhonemeSeq r_prime = perturb_with_retry(r, cfg, inventory, rng);
  ErrorLabels labels = project_errors(r, r_prime);
  return TrainingExample{std::move(labels), std::move(u), std::move(r_prime), Provenance::kP2P};
}

}  // namespace capt
