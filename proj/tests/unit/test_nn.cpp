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
#include <sstream>

#include "capt/core/error.hpp"
#include "capt/nn/ctc.hpp"
#include "capt/nn/optim.hpp"

using namespace capt;
using namespace capt::nn;

namespace {

Matrix log_softmax(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double m = x.row(t).maxCoeff();
    const double lse = m + std::log((x.row(t).array() - m).exp().sum());
    out.row(t).array() -= lse;
  }
  return out;
}

// Sums probabilities of every frame path that collapses to `labels`.
double brute_ctc(const Matrix& log_probs, const std::vector<int>& labels, int blank) {
  const int T = static_cast<int>(log_probs.rows());
  const int C = static_cast<int>(log_probs.cols());
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    if (ctc_collapse(path, blank) == labels) {
      double lp = 0.0;
      for (int t = 0; t < T; ++t) lp += log_probs(t, path[t]);
      total += std::exp(lp);
    }
    int t = 0;
    while (t < T && ++path[t] == C) path[t++] = 0;
    if (t == T) break;
  }
  return total;
}

}  // namespace

TEST_CASE("ctc collapse and minimum frames") {
  CHECK(ctc_collapse(std::vector<int>{2, 2, 0, 2, 1, 1, 2}, 2) == std::vector<int>{0, 1});
  CHECK(ctc_collapse(std::vector<int>{0, 0, 3, 0}, 3) == std::vector<int>{0, 0});
  CHECK(ctc_min_frames(std::vector<int>{1, 1, 2}) == 4);
  CHECK(ctc_min_frames(std::vector<int>{1, 2, 3}) == 3);
}

TEST_CASE("ctc likelihood matches path enumeration") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 2 + static_cast<int>(rng.index(4));
    const int C = 3;
    const Matrix lp = log_softmax(gaussian(T, C, 1.5, rng));
    std::vector<int> labels(1 + rng.index(3));
    for (auto& l : labels) l = static_cast<int>(rng.index(2));
    const double oracle = brute_ctc(lp, labels, 2);
    const double got = ctc_log_likelihood(lp, labels, 2);
    if (oracle == 0.0) {
      CHECK(std::isinf(got));
    } else {
      CHECK(std::exp(got) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("ctc loss preconditions") {
  Tape tape;
  const Var x = tape.constant(Matrix::Zero(3, 4));
  CHECK_THROWS_AS(ctc_loss(x, std::vector<int>{}, 3), InvalidInput);
  CHECK_THROWS_AS(ctc_loss(x, std::vector<int>{1, 1, 1}, 3), InvalidInput);
  CHECK_THROWS_AS(ctc_loss(x, std::vector<int>{3}, 3), InvalidInput);
  CHECK(ctc_loss(x, std::vector<int>{1, 2}, 3).scalar() > 0.0);
}

TEST_CASE("ctc gradient matches finite differences on a tiny model") {
  Rng rng(9);
  ParameterSet params;
  params.add("w", gaussian(4, 5, 0.5, rng));
  params.add("b", gaussian(1, 5, 0.1, rng));
  const Matrix feats = gaussian(7, 4, 1.0, rng);
  const std::vector<int> labels{0, 2, 2, 1};
  auto loss = [&](Tape& t) {
    const Var h = add_row(matmul(t.constant(feats), t.param(params.get("w"))),
                          t.param(params.get("b")));
    return ctc_loss(h, labels, 4);
  };
  const double err = gradient_check(params, loss);
  CHECK(err < 1e-4);
  CHECK(gradient_check(params, loss) == err);
}

TEST_CASE("operation gradients match finite differences") {
  Rng rng(21);
  ParameterSet params;
  params.add("a", gaussian(5, 3, 0.7, rng));
  params.add("b", gaussian(3, 4, 0.7, rng));
  params.add("r", gaussian(1, 4, 0.7, rng));
  params.add("s", gaussian(1, 1, 0.7, rng));
  const std::vector<int> rows{3, 0, 2, 2};
  const std::vector<int> cols{1, 3, 0, 2, 2, 1};
  const std::vector<std::pair<int, int>> segs{{0, 2}, {2, 6}};
  const std::vector<double> targets{1.0, 0.0};
  auto loss = [&](Tape& t) {
    const Var a = t.param(params.get("a"));
    const Var b = t.param(params.get("b"));
    Var h = tanh(add_row(matmul(a, b), t.param(params.get("r"))));  // 5x4
    h = scale_by(h, exp(t.param(params.get("s"))));
    const Var parts[] = {h, sigmoid(h)};
    Var wide = concat_cols(parts);                                 // 5x8
    wide = context_window(slice_rows(wide, 0, 4), 1);              // 4x24
    const Var g = gather_rows(transpose(a), std::vector<int>{2, 0});  // 2x5
    const Var stacked_parts[] = {softmax_rows(h), log_softmax_rows(h)};
    const Var stacked = concat_rows(stacked_parts);                // 10x4
    const Var col = pick(slice_rows(stacked, 0, 6), cols);         // 6x1
    const Var mx = segment_max(col, segs);                         // 2x1
    Var total = add(sum(mul(wide, wide)), scale(mean(g), 3.0));
    total = add(total, bce_with_logits(mx, targets));
    total = add(total, softmax_cross_entropy(slice_rows(h, 0, 4), rows));
    total = sub(total, sum(mean_rows(h)));
    return total;
  };
  CHECK(gradient_check(params, loss) < 1e-4);
}

TEST_CASE("detach blocks gradients") {
  ParameterSet params;
  params.add("w", Matrix::Constant(2, 2, 0.5));
  Tape t;
  const Var y = sum(detach(t.param(params.get("w"))));
  t.backward(y);
  CHECK(params.get("w").grad.isZero());
}

TEST_CASE("parameter set save and load") {
  Rng rng(1);
  ParameterSet p;
  p.add("enc.w", glorot(3, 4, rng));
  p.add("b", gaussian(1, 4, 1.0, rng));
  std::stringstream buf;
  p.save(buf);
  const ParameterSet q = ParameterSet::load(buf);
  CHECK(q.scalar_count() == 16);
  CHECK(q.get("enc.w").value == p.get("enc.w").value);
  CHECK(q.get("b").value == p.get("b").value);
  std::stringstream bad("nope");
  CHECK_THROWS_AS(ParameterSet::load(bad), Error);
  CHECK_THROWS_AS(p.add("b", Matrix::Zero(1, 1)), InvalidInput);
}

TEST_CASE("adam minimizes a quadratic") {
  ParameterSet p;
  p.add("x", Matrix::Constant(1, 3, 4.0));
  Adam opt(p, AdamConfig{0.1});
  for (int i = 0; i < 500; ++i) {
    Tape t;
    const Var x = t.param(p.get("x"));
    t.backward(sum(mul(x, x)));
    opt.step();
  }
  CHECK(p.get("x").value.cwiseAbs().maxCoeff() < 0.05);
}
