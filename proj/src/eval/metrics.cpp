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

#include "capt/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"

namespace capt::eval {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), "scores and labels differ in length");
  for (double s : scores) require(std::isfinite(s), "scores must be finite");
  const auto pos = std::count_if(labels.begin(), labels.end(), [](auto y) { return y != 0; });
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
    throw UndefinedMetric("metric needs both positive and negative labels");
}

struct TieGroup {
  double score;
  int pos;
  int neg;
};

// Distinct scores in descending order with their class counts.
std::vector<TieGroup> tie_groups(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<TieGroup> groups;
  for (auto i : order) {
    if (groups.empty() || groups.back().score != scores[i]) groups.push_back({scores[i], 0, 0});
    (labels[i] ? groups.back().pos : groups.back().neg) += 1;
  }
  return groups;
}

PrecisionAtRecall point_estimate(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels, double target) {
  require(target > 0.0 && target <= 1.0, "target recall must lie in (0, 1]");
  const auto curve = pr_curve(scores, labels);
  for (const auto& p : curve) {
    if (p.recall >= target) {
      PrecisionAtRecall r;
      r.target = target;
      r.precision = p.precision;
      r.threshold = p.threshold;
      r.recall = p.recall;
      r.precision_ci = {p.precision, p.precision};
      r.recall_ci = {p.recall, p.recall};
      return r;
    }
  }
  const double best = curve.empty() ? 0.0 : curve.back().recall;
  throw UnreachableRecall("target recall " + std::to_string(target) +
                              " unreachable; max achievable recall is " + std::to_string(best),
                          best);
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval percentile_interval(const std::vector<double>& v, double level, double point) {
  if (v.empty()) return {point, point};
  const double a = (1.0 - level) / 2.0;
  return {std::min(percentile(v, a), point), std::max(percentile(v, 1.0 - a), point)};
}

// Calls `fn(scores, labels)` on each replicate built by drawing whole groups
// with replacement.
template <class Fn>
void bootstrap(std::span<const double> scores, std::span<const std::uint8_t> labels,
               std::span<const int> groups, const BootstrapOptions& options, Fn&& fn) {
  require(groups.size() == scores.size(), "one group id per score is required");
  require(options.resamples >= 0, "bootstrap resamples must be non-negative");
  require(options.level > 0.0 && options.level < 1.0, "confidence level must lie in (0, 1)");
  std::vector<int> ids(groups.begin(), groups.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::vector<std::size_t>> members(ids.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto g = std::lower_bound(ids.begin(), ids.end(), groups[i]) - ids.begin();
    members[static_cast<std::size_t>(g)].push_back(i);
  }
  Rng rng(options.seed);
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (int b = 0; b < options.resamples; ++b) {
    s.clear();
    y.clear();
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (auto i : members[rng.index(members.size())]) {
        s.push_back(scores[i]);
        y.push_back(labels[i]);
      }
    }
    fn(std::as_const(s), std::as_const(y));
  }
}

struct Counts {
  int tp = 0, fp = 0, positives = 0;
};

Counts count_flags(std::span<const double> scores, std::span<const std::uint8_t> labels,
                   double threshold) {
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    c.positives += labels[i] ? 1 : 0;
    if (scores[i] > threshold) (labels[i] ? c.tp : c.fp) += 1;
  }
  return c;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  double tp = 0.0, fp = 0.0, area = 0.0;
  for (const auto& g : tie_groups(scores, labels)) {
    area += g.neg * (tp + 0.5 * g.pos);
    tp += g.pos;
    fp += g.neg;
  }
  return area / (tp * fp);
}

std::vector<PRPoint> pr_curve(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  const auto groups = tie_groups(scores, labels);
  int positives = 0;
  for (const auto& g : groups) positives += g.pos;
  std::vector<PRPoint> out;
  int tp = 0, fp = 0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    out.push_back({g.score, static_cast<double>(tp) / (tp + fp),
                   static_cast<double>(tp) / positives, tp, fp});
  }
  return out;
}

PrecisionAtRecall precision_at_recall(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels, double target) {
  return point_estimate(scores, labels, target);
}

PrecisionAtRecall precision_at_recall(std::span<const double> scores,
                                      std::span<const std::uint8_t> labels, double target,
                                      std::span<const int> groups,
                                      const BootstrapOptions& options) {
  auto result = point_estimate(scores, labels, target);
  std::vector<double> precisions, recalls;
  bootstrap(scores, labels, groups, options, [&](const auto& s, const auto& y) {
    try {
      const auto p = point_estimate(s, y, target);
      precisions.push_back(p.precision);
      recalls.push_back(p.recall);
    } catch (const UndefinedMetric&) {
    }
  });
  result.resamples = static_cast<int>(precisions.size());
  result.precision_ci = percentile_interval(precisions, options.level, result.precision);
  result.recall_ci = percentile_interval(recalls, options.level, result.recall);
  return result;
}

ThresholdMetrics threshold_metrics(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, double threshold,
                                   std::span<const int> groups, const BootstrapOptions& options) {
  check_inputs(scores, labels);
  ThresholdMetrics m;
  m.threshold = threshold;
  const auto c = count_flags(scores, labels, threshold);
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  m.recall = static_cast<double>(c.tp) / c.positives;
  std::vector<double> precisions, recalls;
  bootstrap(scores, labels, groups, options, [&](const auto& s, const auto& y) {
    const auto b = count_flags(s, y, threshold);
    if (b.positives == 0) return;
    recalls.push_back(static_cast<double>(b.tp) / b.positives);
    if (b.tp + b.fp > 0) precisions.push_back(static_cast<double>(b.tp) / (b.tp + b.fp));
  });
  m.recall_ci = percentile_interval(recalls, options.level, m.recall);
  if (m.precision) m.precision_ci = percentile_interval(precisions, options.level, *m.precision);
  return m;
}

double precision_at_matched_recall(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, double target) {
  require(target > 0.0 && target <= 1.0, "target recall must lie in (0, 1]");
  check_inputs(scores, labels);
  const auto groups = tie_groups(scores, labels);
  double positives = 0.0;
  for (const auto& g : groups) positives += g.pos;
  const double needed = target * positives;
  double tp = 0.0, fp = 0.0;
  for (const auto& g : groups) {
    if (g.pos > 0 && tp + g.pos >= needed) {
      const double f = (needed - tp) / g.pos;
      const double t = tp + f * g.pos;
      const double n = fp + f * g.neg;
      return t / (t + n);
    }
    tp += g.pos;
    fp += g.neg;
  }
  throw UnreachableRecall("target recall unreachable", tp / positives);
}

int severity_bucket(int distance) {
  require(distance >= 1, "severity needs a phoneme distance of at least 1");
  return std::min(distance, kSeverityBuckets) - 1;
}

SeverityReport severity_report(std::span<const double> scores,
                               std::span<const std::uint8_t> labels,
                               std::span<const int> distances) {
  require(scores.size() == labels.size() && scores.size() == distances.size(),
          "scores, labels and distances differ in length");
  SeverityReport report;
  std::vector<double> neg;
  std::array<std::vector<double>, kSeverityBuckets> pos;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i])
      pos[static_cast<std::size_t>(severity_bucket(distances[i]))].push_back(scores[i]);
    else
      neg.push_back(scores[i]);
  }
  if (neg.empty()) throw UndefinedMetric("severity report needs negative examples");
  report.negatives = static_cast<int>(neg.size());
  for (int b = 0; b < kSeverityBuckets; ++b) {
    const auto& p = pos[static_cast<std::size_t>(b)];
    report.positives[static_cast<std::size_t>(b)] = static_cast<int>(p.size());
    if (p.empty()) continue;
    std::vector<double> s(p);
    s.insert(s.end(), neg.begin(), neg.end());
    std::vector<std::uint8_t> y(p.size(), 1);
    y.resize(s.size(), 0);
    report.auc[static_cast<std::size_t>(b)] = auc(s, y);
  }
  return report;
}

}  // namespace capt::eval
