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

// Detection metrics: ROC AUC, raw precision/recall operating points,
// precision at a target recall with utterance-level bootstrap intervals, and
// AUC stratified by error severity.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace capt::eval {

/// Trapezoidal ROC AUC over all distinct thresholds. Throws UndefinedMetric
/// unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Operating point flagging every score >= threshold.
struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int true_positives = 0;
  int false_positives = 0;
};

/// One point per distinct score, thresholds descending (recall ascending).
/// Raw points, no interpolation.
std::vector<PRPoint> pr_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct BootstrapOptions {
  int resamples = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
};

struct PrecisionAtRecall {
  double target = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
  double recall = 0.0;  // achieved
  Interval precision_ci;
  Interval recall_ci;
  int resamples = 0;  // bootstrap replicates that reached the target
};

/// Highest threshold whose recall reaches `target` in (0, 1]. Throws
/// UnreachableRecall (carrying the best recall) when no threshold does. The
/// intervals collapse to the point estimate.
PrecisionAtRecall precision_at_recall(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels, double target);

/// As above, with percentile bootstrap intervals from resampling the groups
/// (utterance ids, one per score) with replacement. Replicates that lack a
/// class or cannot reach the target are skipped. Intervals are widened to
/// contain the point estimate.
PrecisionAtRecall precision_at_recall(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels, double target,
                                      std::span<const int> groups, const BootstrapOptions& options);

/// Decisions score > threshold. Precision is absent when nothing is flagged;
/// bootstrap replicates follow the same rule as above.
struct ThresholdMetrics {
  double threshold = 0.5;
  std::optional<double> precision;
  double recall = 0.0;
  std::optional<Interval> precision_ci;
  Interval recall_ci;
};
ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, double threshold,
                                   std::span<const int> groups, const BootstrapOptions& options);

/// Precision at exactly `target` recall when the tied group crossing the
/// target is flagged in random order: counts inside that group are
/// interpolated linearly.
double precision_at_matched_recall(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, double target);

/// Severity buckets: phoneme distance 1, 2, 3 and >= 4.
inline constexpr int kSeverityBuckets = 4;

struct SeverityReport {
  std::array<std::optional<double>, kSeverityBuckets> auc;  // nullopt when empty
  std::array<int, kSeverityBuckets> positives{};
  int negatives = 0;
};

/// AUC of each bucket's positives against all negatives. `distances` holds
/// the phoneme distance of every positive (ignored for negatives, which must
/// not be the only class). Throws InvalidInput for a positive below 1.
SeverityReport severity_report(std::span<const double> scores,
                               std::span<const std::uint8_t> labels,
                               std::span<const int> distances);

int severity_bucket(int distance);

}  // namespace capt::eval
