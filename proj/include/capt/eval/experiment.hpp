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

// Experiment orchestration: corpus preparation, synthetic-error
// augmentation, detector training, scoring of the held-out L2 split, and the
// reports and files each run leaves on disk.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capt/detectors.hpp"
#include "capt/eval/config.hpp"
#include "capt/eval/corpus.hpp"
#include "capt/eval/metrics.hpp"

namespace capt::eval {

struct TrainingData {
  std::vector<TrainingExample> l1;  // originals, then generated examples
  std::vector<TrainingExample> l2;
};

/// A trained detector of any kind. Recognizer-based rules keep the
/// recognizer (and, for PR-PM, the pronunciation model).
struct TrainedDetector {
  Detector kind = Detector::kWeaklyS;
  std::optional<MDNModel> weakly_s;
  std::optional<RecognizerModel> recognizer;
  std::optional<PMModel> pm;

  void save(const std::filesystem::path& dir, const PhonemeInventory& inventory) const;
  static TrainedDetector load(const std::filesystem::path& dir, Detector kind,
                              const PhonemeInventory& inventory);
};

/// Detector output for one test utterance.
struct UtteranceScores {
  std::size_t entry = 0;  // manifest index
  WordErrorProbs words;
};

struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  std::string name;
  Method method = Method::kNone;
  Detector detector = Detector::kWeaklyS;
  std::uint64_t seed = 0;
  int utterances = 0;
  int words = 0;
  int positives = 0;
  double auc = 0.0;
  std::optional<PrecisionAtRecall> at_recall;  // absent when unreachable
  double max_recall = 0.0;
  ThresholdMetrics at_threshold;
  std::vector<PRPoint> curve;
  SeverityReport severity;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// Original utterances of the configured manifest, or a fresh toy corpus.
CorpusManifest prepare_corpus(const ExperimentConfig& cfg, const Synthesizer& synth,
                              const Lexicon& lexicon);

/// L1 originals plus the configured synthetic errors (one P2P example per
/// utterance, or quadruple members two to four for T2S and S2S), and the
/// L2 training split. Generated examples are appended to the manifest.
TrainingData build_training_data(const ExperimentConfig& cfg, const Synthesizer& synth,
                                 CorpusManifest& manifest);

TrainedDetector train_detector(const ExperimentConfig& cfg, const TrainingData& data,
                               const PhonemeInventory& inventory);

std::vector<UtteranceScores> score_test_split(const ExperimentConfig& cfg,
                                              const TrainedDetector& detector,
                                              const CorpusManifest& manifest);

MetricsReport make_report(const ExperimentConfig& cfg, const CorpusManifest& manifest,
                          const std::vector<UtteranceScores>& scores);

/// Output layout of one run.
struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path metrics() const { return root / "metrics.json"; }
  std::filesystem::path scores() const { return root / "scores.jsonl"; }
  std::filesystem::path curve_csv() const { return root / "pr_curve.csv"; }
  std::filesystem::path curve_svg() const { return root / "pr_curve.svg"; }
};

/// Corpus, augmentation and training; writes the manifest and checkpoints.
/// Stage failures throw StageError; files already written stay in place.
TrainedDetector train_stage(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// Scores the test split of the manifest under `out` with its checkpoints
/// and writes metrics.json, scores.jsonl, pr_curve.csv and pr_curve.svg.
MetricsReport evaluate_stage(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// Both stages. The metrics file is a pure function of the configuration.
MetricsReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// CSV header: threshold,precision,recall,true_positives,false_positives.
void write_curve_csv(const std::filesystem::path& path, const std::vector<PRPoint>& curve);
/// Precision against recall as a standalone SVG file.
void write_curve_svg(const std::filesystem::path& path, const std::vector<PRPoint>& curve,
                     const std::string& title);

/// One row per run of a comparison table.
struct TableRow {
  std::string label;
  MetricsReport report;
};
/// CSV header: label,method,detector,auc,precision,recall,precision_ci_low,
/// precision_ci_high (empty precision fields when the target is unreachable).
void write_table_csv(const std::filesystem::path& path, const std::vector<TableRow>& rows);

/// WEAKLY-S trained with P2P, T2S and S2S errors, one subdirectory each,
/// plus methods.csv.
std::vector<TableRow> compare_methods(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out);
/// WEAKLY-S with each training switch turned off and the recognizer-based
/// rules, plus ablation.csv.
std::vector<TableRow> ablate(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Collects every metrics.json below `dir` (sorted by path) into report.csv.
std::vector<TableRow> collect_reports(const std::filesystem::path& dir);

struct StressRow {
  bool attention = true;
  bool augmented = true;
  double word_auc = 0.0;
  double syllable_auc = 0.0;
};

struct StressReport {
  static constexpr int kSchemaVersion = 1;
  std::vector<StressRow> rows;
  const StressRow& row(bool attention, bool augmented) const;
  nlohmann::json to_json() const;
};

/// Stress models with and without attention, each trained on natural data
/// alone and with generated stress errors added; AUC on a natural test set.
/// Writes stress.json and stress.csv under `out` when it is not empty.
StressReport run_stress_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace capt::eval
