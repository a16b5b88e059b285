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

#include "capt/nn/ctc.hpp"

#include <cmath>
#include <limits>

#include "capt/core/error.hpp"

namespace capt::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

std::vector<int> extend(std::span<const int> labels, int blank) {
  std::vector<int> ext;
  ext.reserve(2 * labels.size() + 1);
  ext.push_back(blank);
  for (int l : labels) {
    ext.push_back(l);
    ext.push_back(blank);
  }
  return ext;
}

Matrix log_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    y.row(i) = (x.row(i).array() - lse).matrix();
  }
  return y;
}

// alpha(t, s) in the log domain, emission at t included.
Matrix forward(const Matrix& lp, const std::vector<int>& ext, int blank) {
  const Eigen::Index T = lp.rows();
  const Eigen::Index S = static_cast<Eigen::Index>(ext.size());
  Matrix alpha = Matrix::Constant(T, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = (a == kNegInf) ? kNegInf : a + lp(t, ext[s]);
    }
  }
  return alpha;
}

// beta(t, s) in the log domain over frames t+1..T-1.
Matrix backward(const Matrix& lp, const std::vector<int>& ext, int blank) {
  const Eigen::Index T = lp.rows();
  const Eigen::Index S = static_cast<Eigen::Index>(ext.size());
  Matrix beta = Matrix::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s])
        b = log_add(b, beta(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }
  return beta;
}

double total_from_alpha(const Matrix& alpha) {
  const Eigen::Index T = alpha.rows(), S = alpha.cols();
  double p = alpha(T - 1, S - 1);
  if (S > 1) p = log_add(p, alpha(T - 1, S - 2));
  return p;
}

}  // namespace

int ctc_min_frames(std::span<const int> labels) {
  int n = static_cast<int>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

double ctc_log_likelihood(const Matrix& log_probs, std::span<const int> labels, int blank) {
  if (log_probs.rows() == 0) return labels.empty() ? 0.0 : kNegInf;
  if (ctc_min_frames(labels) > log_probs.rows()) return kNegInf;
  const auto ext = extend(labels, blank);
  return total_from_alpha(forward(log_probs, ext, blank));
}

Var ctc_loss(const Var& logits, std::span<const int> labels, int blank) {
  require(!labels.empty(), "ctc_loss: empty target sequence");
  const Matrix& x = logits.value();
  require(x.rows() > 0, "ctc_loss: no frames");
  require(ctc_min_frames(labels) <= x.rows(), "ctc_loss: target longer than input");
  for (int l : labels) require(l >= 0 && l < x.cols() && l != blank, "ctc_loss: bad label");

  const Matrix lp = log_softmax(x);
  const auto ext = extend(labels, blank);
  const Matrix alpha = forward(lp, ext, blank);
  const Matrix beta = backward(lp, ext, blank);
  const double log_p = total_from_alpha(alpha);

  // d(-log p)/d(logits) = softmax - occupancy.
  Matrix grad = lp.array().exp().matrix();
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(ext.size()); ++s) {
      const double a = alpha(t, s), b = beta(t, s);
      if (a == kNegInf || b == kNegInf) continue;
      grad(t, ext[s]) -= std::exp(a + b - log_p);
    }

  Tape& tape = *logits.tape();
  const int il = logits.id();
  return tape.push(Matrix::Constant(1, 1, -log_p), {il},
                   [il, grad = std::move(grad)](Tape& t, int self) {
                     t.accumulate(il, grad * t.grad(self)(0, 0));
                   });
}

std::vector<int> ctc_collapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

}  // namespace capt::nn
