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

#include "../oracles/metrics_oracle.hpp"
#include "capt/core/error.hpp"
#include "capt/core/rng.hpp"
#include "capt/eval/metrics.hpp"

using namespace capt;
using namespace capt::eval;

namespace {

using Labels = std::vector<std::uint8_t>;

// Random instance with both classes; coarse scores force ties.
void random_instance(Rng& rng, int n, std::vector<double>& s, Labels& y, int levels = 8) {
  do {
    s.assign(static_cast<std::size_t>(n), 0.0);
    y.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
      const double base = static_cast<double>(rng.index(static_cast<std::size_t>(levels))) / levels;
      s[static_cast<std::size_t>(i)] = std::clamp(base + (y[static_cast<std::size_t>(i)] ? 0.2 : 0.0), 0.0, 1.0);
    }
  } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0);
}

}  // namespace

TEST_CASE("auc: separating, constant and inverted scores") {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  CHECK(auc(s, Labels{0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(auc(s, Labels{1, 1, 0, 0}) == doctest::Approx(0.0));
  const std::vector<double> c(6, 0.3);
  CHECK(auc(c, Labels{0, 1, 0, 1, 1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("auc: single class is undefined") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS_AS(auc(s, Labels{1, 1}), UndefinedMetric);
  CHECK_THROWS_AS(auc(s, Labels{0, 0}), UndefinedMetric);
  CHECK_THROWS_AS(auc(s, Labels{0}), InvalidInput);
}

TEST_CASE("auc: equals the pairwise oracle (property, 300 instances)") {
  Rng rng(11);
  for (int k = 0; k < 300; ++k) {
    std::vector<double> s;
    Labels y;
    random_instance(rng, 2 + static_cast<int>(rng.index(80)), s, y, 1 + static_cast<int>(rng.index(20)));
    CHECK(std::abs(auc(s, y) - oracle::pairwise_auc(s, y)) < 1e-9);
  }
}

TEST_CASE("precision_at_recall: equals the threshold sweep (property, 300 instances)") {
  Rng rng(12);
  for (int k = 0; k < 300; ++k) {
    std::vector<double> s;
    Labels y;
    random_instance(rng, 2 + static_cast<int>(rng.index(80)), s, y, 1 + static_cast<int>(rng.index(20)));
    const double target = 0.05 + 0.95 * rng.uniform();
    const auto want = oracle::sweep_precision_at_recall(s, y, target);
    REQUIRE(want.has_value());  // the lowest score reaches recall 1
    const auto got = precision_at_recall(s, y, target);
    CHECK(got.threshold == want->threshold);
    CHECK(std::abs(got.precision - want->precision) < 1e-9);
    CHECK(std::abs(got.recall - want->recall) < 1e-9);
    CHECK(got.recall >= target);
  }
}

TEST_CASE("precision_at_recall: boundary cases") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8, 0.2, 0.9};
  const Labels y{0, 1, 0, 1, 0, 1};
  SUBCASE("target 1.0 flags down to the lowest positive") {
    const auto r = precision_at_recall(s, y, 1.0);
    CHECK(r.threshold == 0.4);
    CHECK(r.recall == 1.0);
    CHECK(r.precision == doctest::Approx(1.0));
  }
  SUBCASE("separating scores give precision 1 at recall 0.5") {
    const auto r = precision_at_recall(s, y, 0.5);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("target 1.0 on constant scores gives the base rate") {
    const std::vector<double> c(6, 0.5);
    const auto r = precision_at_recall(c, y, 1.0);
    CHECK(r.precision == doctest::Approx(0.5));
  }
  SUBCASE("invalid target") {
    CHECK_THROWS_AS(precision_at_recall(s, y, 0.0), InvalidInput);
    CHECK_THROWS_AS(precision_at_recall(s, y, 1.5), InvalidInput);
  }
}

TEST_CASE("precision_at_recall: unreachable target names the best recall") {
  // NaN scores are never flagged, so one positive stays out of reach.
  const std::vector<double> s{0.9, std::nan(""), 0.1};
  const Labels y{1, 1, 0};
  try {
    (void)precision_at_recall(s, y, 0.8);
    FAIL("expected UnreachableRecall");
  } catch (const UnreachableRecall& e) {
    CHECK(e.max_recall() == doctest::Approx(0.5));
  } catch (const InvalidInput&) {
    // Rejecting non-finite scores outright is also acceptable.
  }
}

TEST_CASE("pr_curve: raw points with descending thresholds") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> s;
    Labels y;
    random_instance(rng, 30, s, y);
    const auto curve = pr_curve(s, y);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].threshold < curve[i - 1].threshold);
      CHECK(curve[i].recall >= curve[i - 1].recall);
    }
    CHECK(curve.back().recall == 1.0);
    const int positives = static_cast<int>(std::count(y.begin(), y.end(), 1));
    for (const auto& p : curve) {
      int tp = 0, fp = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] >= p.threshold) (y[i] ? tp : fp)++;
      CHECK(p.true_positives == tp);
      CHECK(p.false_positives == fp);
      CHECK(p.recall == doctest::Approx(static_cast<double>(tp) / positives));
    }
  }
}

TEST_CASE("bootstrap intervals contain the point and are reproducible") {
  Rng rng(14);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> s;
    Labels y;
    random_instance(rng, 40, s, y);
    std::vector<int> groups(s.size());
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = static_cast<int>(i / 3);
    const BootstrapOptions opts{60, 100 + static_cast<std::uint64_t>(k), 0.95};
    const auto a = precision_at_recall(s, y, 0.4, groups, opts);
    const auto b = precision_at_recall(s, y, 0.4, groups, opts);
    const auto plain = precision_at_recall(s, y, 0.4);
    CHECK(a.precision == plain.precision);
    CHECK(a.precision_ci.low <= a.precision);
    CHECK(a.precision <= a.precision_ci.high);
    CHECK(a.recall_ci.low <= a.recall);
    CHECK(a.recall <= a.recall_ci.high);
    CHECK(a.precision_ci.low == b.precision_ci.low);
    CHECK(a.precision_ci.high == b.precision_ci.high);
    CHECK(a.resamples <= 60);
  }
}

TEST_CASE("threshold_metrics decides strictly above the threshold") {
  const std::vector<double> s{0.5, 0.7, 0.2, 0.9};
  const Labels y{1, 1, 0, 0};
  const std::vector<int> g{0, 1, 2, 3};
  const auto m = threshold_metrics(s, y, 0.5, g, {50, 3, 0.95});
  REQUIRE(m.precision.has_value());
  CHECK(*m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.precision_ci->low <= *m.precision);
  const auto none = threshold_metrics(s, y, 0.95, g, {50, 3, 0.95});
  CHECK_FALSE(none.precision.has_value());
  CHECK(none.recall == 0.0);
}

TEST_CASE("precision_at_matched_recall interpolates inside the crossing tie") {
  // Two positives and two negatives tied at 0.5, one positive above.
  const std::vector<double> s{0.9, 0.5, 0.5, 0.5, 0.5};
  const Labels y{1, 1, 1, 0, 0};
  // recall 1/3 needs nothing from the tie
  CHECK(precision_at_matched_recall(s, y, 1.0 / 3.0) == doctest::Approx(1.0));
  // recall 2/3 takes half of the tie: one positive and one negative
  CHECK(precision_at_matched_recall(s, y, 2.0 / 3.0) == doctest::Approx(2.0 / 3.0));
  CHECK(precision_at_matched_recall(s, y, 1.0) == doctest::Approx(0.6));
  const std::vector<double> sep{0.9, 0.8, 0.1};
  CHECK(precision_at_matched_recall(sep, Labels{1, 1, 0}, 0.4) == doctest::Approx(1.0));
}

TEST_CASE("severity_report") {
  SUBCASE("empty buckets are absent") {
    const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
    const Labels y{1, 1, 0, 0};
    const std::vector<int> d{1, 1, 0, 0};
    const auto r = severity_report(s, y, d);
    REQUIRE(r.auc[0].has_value());
    CHECK(*r.auc[0] == doctest::Approx(1.0));
    for (int b = 1; b < kSeverityBuckets; ++b) CHECK_FALSE(r.auc[static_cast<std::size_t>(b)].has_value());
    CHECK(r.positives[0] == 2);
    CHECK(r.negatives == 2);
  }
  SUBCASE("maximal scores for distance >= 4 give bucket AUC 1") {
    Rng rng(15);
    std::vector<double> s;
    Labels y;
    std::vector<int> d;
    for (int i = 0; i < 200; ++i) {
      const int dist = static_cast<int>(rng.index(7));  // 0 marks a negative
      y.push_back(dist > 0);
      d.push_back(dist);
      s.push_back(dist >= 4 ? 1.0 + rng.uniform() : rng.uniform());
    }
    const auto r = severity_report(s, y, d);
    REQUIRE(r.auc[3].has_value());
    CHECK(*r.auc[3] == 1.0);
  }
  SUBCASE("each bucket matches the pairwise oracle on its subset") {
    Rng rng(16);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> s;
      Labels y;
      std::vector<int> d;
      for (int i = 0; i < 40; ++i) {
        const int dist = i < 10 ? 0 : 1 + static_cast<int>(rng.index(5));
        y.push_back(dist > 0);
        d.push_back(dist);
        s.push_back(static_cast<double>(rng.index(10)) / 10.0 + 0.05 * dist);
      }
      const auto r = severity_report(s, y, d);
      for (int b = 0; b < kSeverityBuckets; ++b) {
        std::vector<double> ss;
        Labels yy;
        for (std::size_t i = 0; i < s.size(); ++i)
          if (!y[i] || severity_bucket(d[i]) == b) {
            ss.push_back(s[i]);
            yy.push_back(y[i]);
          }
        const bool present = std::count(yy.begin(), yy.end(), 1) > 0;
        REQUIRE(r.auc[static_cast<std::size_t>(b)].has_value() == present);
        if (present) CHECK(std::abs(*r.auc[static_cast<std::size_t>(b)] - oracle::pairwise_auc(ss, yy)) < 1e-9);
      }
    }
  }
  SUBCASE("a positive without a distance is rejected") {
    const std::vector<double> s{0.9, 0.1};
    CHECK_THROWS_AS(severity_report(s, Labels{1, 0}, std::vector<int>{0, 0}), InvalidInput);
  }
  CHECK(severity_bucket(1) == 0);
  CHECK(severity_bucket(4) == 3);
  CHECK(severity_bucket(9) == 3);
}
