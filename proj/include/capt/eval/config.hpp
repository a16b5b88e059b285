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

// Experiment configuration: a sectioned key = value text file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "capt/detectors.hpp"
#include "capt/eval/corpus.hpp"
#include "capt/lexical_stress.hpp"
#include "capt/pronunciation_model.hpp"

namespace capt::eval {

/// How synthetic mispronunciations are added to the L1 training data.
enum class Method { kNone, kP2P, kT2S, kS2S };
enum class Detector { kPrNolik, kPrLik, kPrPm, kWeaklyS };

std::string_view to_string(Method m);
std::string_view to_string(Detector d);
Method method_from_string(std::string_view s);
Detector detector_from_string(std::string_view s);

struct MetricSettings {
  double target_recall = 0.4;
  double threshold = 0.5;
  int bootstrap = 1000;
  double confidence = 0.95;
};

/// Natural and generated data for the lexical stress experiment.
struct StressExperimentConfig {
  int natural_train = 60;
  double natural_error_rate = 0.05;
  int test = 300;
  double test_error_rate = 0.3;
  int generated_words = 100;  // each yields a correct and a shifted rendition
  StressConfig model;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  Method method = Method::kP2P;
  Detector detector = Detector::kWeaklyS;
  /// Existing corpus directory; a fresh corpus is generated when empty.
  std::filesystem::path manifest;
  std::filesystem::path lexicon;  // defaults to the asset lexicon
  ToyCorpusConfig corpus;
  PerturbationConfig perturbation{0.2, 0.0, 0.0, 0};
  WeaklySConfig weakly_s;
  RecognizerConfig recognizer;
  PMConfig pm;
  ScoreOptions pm_score;
  MetricSettings metrics;
  StressExperimentConfig stress;

  ExperimentConfig();

  /// Parses the text format. Unknown sections or keys, malformed values and
  /// a missing [experiment] seed throw InvalidInput. Relative paths resolve
  /// against `base_dir`.
  static ExperimentConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
  /// Throws InvalidInput when the file does not exist.
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Replaces the master seed; every component seed derives from it.
  void set_seed(std::uint64_t s);
  /// Throws InvalidInput for out-of-range settings or missing assets.
  void validate() const;
  std::filesystem::path lexicon_path() const;
  nlohmann::json to_json() const;
};

}  // namespace capt::eval
