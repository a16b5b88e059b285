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

#include "capt/eval/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"
#include "capt/speech_sim.hpp"

namespace capt::eval {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kNone: return "none";
    case Method::kP2P: return "p2p";
    case Method::kT2S: return "t2s";
    case Method::kS2S: return "s2s";
  }
  return "none";
}

std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::kPrNolik: return "prnolik";
    case Detector::kPrLik: return "prlik";
    case Detector::kPrPm: return "prpm";
    case Detector::kWeaklyS: return "weakly_s";
  }
  return "weakly_s";
}

Method method_from_string(std::string_view s) {
  for (auto m : {Method::kNone, Method::kP2P, Method::kT2S, Method::kS2S})
    if (s == to_string(m)) return m;
  throw InvalidInput("unknown generation method '" + std::string(s) + "'");
}

Detector detector_from_string(std::string_view s) {
  for (auto d : {Detector::kPrNolik, Detector::kPrLik, Detector::kPrPm, Detector::kWeaklyS})
    if (s == to_string(d)) return d;
  throw InvalidInput("unknown detector '" + std::string(s) + "'");
}

ExperimentConfig::ExperimentConfig() {
  weakly_s.encoder = {4, 32, 1};
  weakly_s.finetune_epochs = 6;
  set_seed(seed);
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  corpus.seed = derive_seed(s, 1);
  weakly_s.seed = derive_seed(s, 2);
  recognizer.seed = derive_seed(s, 3);
  pm.seed = derive_seed(s, 4);
  perturbation.seed = derive_seed(s, 5);
  stress.model.seed = derive_seed(s, 6);
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw InvalidInput("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw InvalidInput("config key '" + key + "': expected a boolean, got '" + text + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class F>
Setter integer(F field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_number<int>(k, v);
  };
}
template <class F>
Setter real(F field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_number<double>(k, v);
  };
}
template <class F>
Setter boolean(F field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_bool(k, v);
  };
}

#define CAPT_FIELD(expr) [](ExperimentConfig& c) -> auto& { return c.expr; }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment.name",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; }},
      {"experiment.seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_number<std::uint64_t>(k, v);
       }},
      {"experiment.method",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.method = method_from_string(v);
       }},
      {"experiment.detector",
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.detector = detector_from_string(v);
       }},
      {"experiment.manifest",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.manifest = v; }},
      {"experiment.lexicon",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.lexicon = v; }},

      {"corpus.l1_speakers", integer(CAPT_FIELD(corpus.l1_speakers))},
      {"corpus.l2_train_speakers", integer(CAPT_FIELD(corpus.l2_train_speakers))},
      {"corpus.l2_test_speakers", integer(CAPT_FIELD(corpus.l2_test_speakers))},
      {"corpus.l1_utterances", integer(CAPT_FIELD(corpus.l1_utterances))},
      {"corpus.l2_train_utterances", integer(CAPT_FIELD(corpus.l2_train_utterances))},
      {"corpus.l2_test_utterances", integer(CAPT_FIELD(corpus.l2_test_utterances))},
      {"corpus.max_words", integer(CAPT_FIELD(corpus.max_words))},
      {"corpus.l1_timbre", real(CAPT_FIELD(corpus.l1_timbre))},
      {"corpus.l2_timbre", real(CAPT_FIELD(corpus.l2_timbre))},
      {"corpus.variant_rate", real(CAPT_FIELD(corpus.variant_rate))},
      {"corpus.l2_error_rate", real(CAPT_FIELD(corpus.l2_error_rate))},
      {"corpus.systematic_rate", real(CAPT_FIELD(corpus.systematic_rate))},
      {"corpus.pseudo_words", integer(CAPT_FIELD(corpus.pseudo_words))},
      {"corpus.pseudo_word_rate", real(CAPT_FIELD(corpus.pseudo_word_rate))},

      {"perturbation.p_sub", real(CAPT_FIELD(perturbation.p_sub))},
      {"perturbation.p_ins", real(CAPT_FIELD(perturbation.p_ins))},
      {"perturbation.p_del", real(CAPT_FIELD(perturbation.p_del))},

      {"weakly_s.epochs", integer(CAPT_FIELD(weakly_s.epochs))},
      {"weakly_s.finetune_epochs", integer(CAPT_FIELD(weakly_s.finetune_epochs))},
      {"weakly_s.batch", integer(CAPT_FIELD(weakly_s.batch))},
      {"weakly_s.learning_rate", real(CAPT_FIELD(weakly_s.learning_rate))},
      {"weakly_s.lambda", real(CAPT_FIELD(weakly_s.lambda))},
      {"weakly_s.embedding", integer(CAPT_FIELD(weakly_s.embedding))},
      {"weakly_s.hidden", integer(CAPT_FIELD(weakly_s.hidden))},
      {"weakly_s.attention", integer(CAPT_FIELD(weakly_s.attention))},
      {"weakly_s.location_width", real(CAPT_FIELD(weakly_s.location_width))},
      {"weakly_s.encoder_context", integer(CAPT_FIELD(weakly_s.encoder.context))},
      {"weakly_s.encoder_hidden", integer(CAPT_FIELD(weakly_s.encoder.hidden))},
      {"weakly_s.encoder_layers", integer(CAPT_FIELD(weakly_s.encoder.layers))},
      {"weakly_s.synthetic_errors", boolean(CAPT_FIELD(weakly_s.synthetic_errors))},
      {"weakly_s.l2_adapt", boolean(CAPT_FIELD(weakly_s.l2_adapt))},
      {"weakly_s.l1l2_train", boolean(CAPT_FIELD(weakly_s.l1l2_train))},

      {"recognizer.epochs", integer(CAPT_FIELD(recognizer.epochs))},
      {"recognizer.batch", integer(CAPT_FIELD(recognizer.batch))},
      {"recognizer.learning_rate", real(CAPT_FIELD(recognizer.learning_rate))},
      {"recognizer.context", integer(CAPT_FIELD(recognizer.encoder.context))},
      {"recognizer.hidden", integer(CAPT_FIELD(recognizer.encoder.hidden))},
      {"recognizer.layers", integer(CAPT_FIELD(recognizer.encoder.layers))},

      {"pm.epochs", integer(CAPT_FIELD(pm.epochs))},
      {"pm.embedding", integer(CAPT_FIELD(pm.embedding))},
      {"pm.hidden", integer(CAPT_FIELD(pm.hidden))},
      {"pm.learning_rate", real(CAPT_FIELD(pm.learning_rate))},
      {"pm.top_k", integer(CAPT_FIELD(pm_score.top_k))},
      {"pm.exact", boolean(CAPT_FIELD(pm_score.exact))},

      {"metrics.target_recall", real(CAPT_FIELD(metrics.target_recall))},
      {"metrics.threshold", real(CAPT_FIELD(metrics.threshold))},
      {"metrics.bootstrap", integer(CAPT_FIELD(metrics.bootstrap))},
      {"metrics.confidence", real(CAPT_FIELD(metrics.confidence))},

      {"stress.natural_train", integer(CAPT_FIELD(stress.natural_train))},
      {"stress.natural_error_rate", real(CAPT_FIELD(stress.natural_error_rate))},
      {"stress.test", integer(CAPT_FIELD(stress.test))},
      {"stress.test_error_rate", real(CAPT_FIELD(stress.test_error_rate))},
      {"stress.generated_words", integer(CAPT_FIELD(stress.generated_words))},
      {"stress.attention", boolean(CAPT_FIELD(stress.model.attention))},
      {"stress.ternary", boolean(CAPT_FIELD(stress.model.ternary))},
      {"stress.epochs", integer(CAPT_FIELD(stress.model.epochs))},
      {"stress.hidden", integer(CAPT_FIELD(stress.model.hidden))},
      {"stress.learning_rate", real(CAPT_FIELD(stress.model.learning_rate))},
  };
  return table;
}

#undef CAPT_FIELD

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig c;
  bool has_seed = false;
  for (const auto& [section, keys] : tree) {
    if (keys.empty())
      throw InvalidInput("config key '" + section + "' must belong to a section");
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw InvalidInput("unknown config key '" + full + "'");
      it->second(c, full, value.data());
      has_seed = has_seed || full == "experiment.seed";
    }
  }
  if (!has_seed) throw InvalidInput("config must set [experiment] seed explicitly");
  if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = base_dir / c.manifest;
  if (!c.lexicon.empty() && c.lexicon.is_relative()) c.lexicon = base_dir / c.lexicon;
  c.set_seed(c.seed);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path.string() + "'");
  return parse(in, path.parent_path());
}

fs::path ExperimentConfig::lexicon_path() const {
  return lexicon.empty() ? fs::path(asset_dir()) / "lexicon.tsv" : lexicon;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  perturbation.validate();
  require(metrics.target_recall > 0.0 && metrics.target_recall <= 1.0,
          "metrics.target_recall must lie in (0, 1]");
  require(metrics.threshold >= 0.0 && metrics.threshold <= 1.0,
          "metrics.threshold must lie in [0, 1]");
  require(metrics.bootstrap >= 0, "metrics.bootstrap must be non-negative");
  require(metrics.confidence > 0.0 && metrics.confidence < 1.0,
          "metrics.confidence must lie in (0, 1)");
  require(weakly_s.epochs >= 0 && weakly_s.finetune_epochs >= 0 && recognizer.epochs >= 1 &&
              pm.epochs >= 1 && stress.model.epochs >= 1,
          "epoch counts out of range");
  require(pm_score.top_k >= 1, "pm.top_k must be at least 1");
  require(stress.natural_train >= 1 && stress.test >= 1 && stress.generated_words >= 1,
          "stress corpus sizes must be positive");
  for (double p : {stress.natural_error_rate, stress.test_error_rate})
    require(p >= 0.0 && p <= 1.0, "stress error rates must lie in [0, 1]");
  require(fs::exists(lexicon_path()), "lexicon '" + lexicon_path().string() + "' not found");
  require(fs::exists(fs::path(asset_dir()) / PrototypeTable::kFileName),
          "prototype table missing from '" + asset_dir() + "'");
  if (!manifest.empty())
    require(fs::exists(manifest / CorpusManifest::kFileName),
            "no corpus manifest in '" + manifest.string() + "'");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"name", name},
      {"seed", seed},
      {"method", to_string(method)},
      {"detector", to_string(detector)},
      {"corpus",
       {{"source", manifest.empty() ? "generated" : "manifest"},
        {"l1_speakers", corpus.l1_speakers},
        {"l2_train_speakers", corpus.l2_train_speakers},
        {"l2_test_speakers", corpus.l2_test_speakers},
        {"l1_utterances", corpus.l1_utterances},
        {"l2_train_utterances", corpus.l2_train_utterances},
        {"l2_test_utterances", corpus.l2_test_utterances},
        {"l2_error_rate", corpus.l2_error_rate},
        {"variant_rate", corpus.variant_rate}}},
      {"perturbation",
       {{"p_sub", perturbation.p_sub}, {"p_ins", perturbation.p_ins}, {"p_del", perturbation.p_del}}},
      {"weakly_s",
       {{"epochs", weakly_s.epochs},
        {"finetune_epochs", weakly_s.finetune_epochs},
        {"batch", weakly_s.batch},
        {"learning_rate", weakly_s.learning_rate},
        {"lambda", weakly_s.lambda},
        {"location_width", weakly_s.location_width},
        {"encoder", {weakly_s.encoder.context, weakly_s.encoder.hidden, weakly_s.encoder.layers}},
        {"synthetic_errors", weakly_s.synthetic_errors},
        {"l2_adapt", weakly_s.l2_adapt},
        {"l1l2_train", weakly_s.l1l2_train}}},
      {"metrics",
       {{"target_recall", metrics.target_recall},
        {"threshold", metrics.threshold},
        {"bootstrap", metrics.bootstrap},
        {"confidence", metrics.confidence}}},
  };
}

}  // namespace capt::eval
