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

#include <algorithm>
#include <cmath>
#include <limits>

#include "capt/core/error.hpp"
#include "capt/detectors.hpp"

namespace capt {

namespace {

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::vector<std::pair<int, int>> phoneme_spans(const Synthesizer& synth, const Utterance& u,
                                               const PhonemeSeq& r) {
  if (static_cast<int>(u.prosody.durations.size()) == r.size() &&
      u.prosody.total_frames() == u.frames())
    return u.prosody.spans();
  return synth.forced_align(u, r, AlignMode::kDynamic);
}

}  // namespace

WordEvidence bayes_word_evidence(const Synthesizer& synth, const Utterance& u,
                                 const PhonemeSeq& r, const BayesConfig& cfg) {
  require(cfg.p_sub > 0.0 && cfg.p_sub < 1.0, "bayes: p_sub must lie in (0, 1)");
  require(cfg.sigma > 0.0, "bayes: sigma must be positive");
  require(!r.empty(), "bayes: empty canonical sequence");
  r.check(synth.inventory());
  const int V = synth.inventory().size();
  const auto spans = phoneme_spans(synth, u, r);
  const Eigen::VectorXd offsets = u.speaker.band_offsets();

  // ll(j, x): log-likelihood of phoneme j's frames if it were realized as x.
  Eigen::MatrixXd ll(r.size(), V);
  for (int j = 0; j < r.size(); ++j) {
    const auto [b, e] = spans[j];
    const auto frames = u.speech.block(b, 0, e - b, kBandCount);
    for (int x = 0; x < V; ++x) {
      const Eigen::RowVectorXd mean = (synth.prototypes().band(x) + offsets).transpose();
      ll(j, x) = -(frames.rowwise() - mean).squaredNorm() / (2.0 * cfg.sigma * cfg.sigma);
    }
  }

  const double log_keep = std::log1p(-cfg.p_sub);
  const double log_swap = std::log(cfg.p_sub / (V - 1));
  WordEvidence out;
  for (const auto& span : r.spans()) {
    double log_canonical = 0.0, log_any = 0.0;
    for (int j = span.start; j < span.end; ++j) {
      double s = -std::numeric_limits<double>::infinity();
      for (int x = 0; x < V; ++x) s = log_sum_exp(s, ll(j, x) + (x == r[j] ? log_keep : log_swap));
      log_canonical += ll(j, r[j]) + log_keep;
      log_any += s;
    }
    // Perturbations that changed something, normalized by their total mass.
    const double log_changed = log_any + std::log1p(-std::exp(log_canonical - log_any));
    const double log_mass = std::log1p(-std::exp(span.length() * log_keep));
    out.log_correct.push_back(log_canonical - span.length() * log_keep);
    out.log_error.push_back(log_changed - log_mass);
  }
  return out;
}

BayesPosterior bayes_enumerate(const Synthesizer& synth, const Utterance& u, const PhonemeSeq& r,
                               const BayesPrior& prior, const BayesConfig& cfg) {
  require(prior.rho > 0.0 && prior.rho < 1.0, "bayes: prior rho must lie in (0, 1)");
  const WordEvidence ev = bayes_word_evidence(synth, u, r, cfg);
  const int W = r.word_count();
  std::vector<double> a0(W), a1(W);
  for (int w = 0; w < W; ++w) {
    a0[w] = std::log1p(-prior.rho) + ev.log_correct[w];
    a1[w] = std::log(prior.rho) + ev.log_error[w];
  }

  BayesPosterior out;
  std::vector<double> marg(W, 0.0);
  if (W <= cfg.max_exact_words) {
    const std::size_t n = std::size_t{1} << W;
    std::vector<double> logp(n);
    double log_z = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < n; ++e) {
      double s = 0.0;
      for (int w = 0; w < W; ++w) s += (e >> w & 1U) ? a1[w] : a0[w];
      logp[e] = s;
      log_z = log_sum_exp(log_z, s);
    }
    out.joint.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
      out.joint[e] = std::exp(logp[e] - log_z);
      for (int w = 0; w < W; ++w)
        if (e >> w & 1U) marg[w] += out.joint[e];
    }
    out.std_error.assign(W, 0.0);
    out.exact = true;
  } else {
    require(cfg.mc_samples >= 2, "bayes: too few Monte-Carlo samples");
    // Proposal: the prior. Importance weight: the evidence ratio.
    Rng rng(cfg.seed);
    std::vector<std::vector<std::uint8_t>> draws(cfg.mc_samples, std::vector<std::uint8_t>(W));
    std::vector<double> logw(cfg.mc_samples, 0.0);
    for (int i = 0; i < cfg.mc_samples; ++i)
      for (int w = 0; w < W; ++w) {
        draws[i][w] = rng.bernoulli(prior.rho) ? 1 : 0;
        logw[i] += draws[i][w] ? ev.log_error[w] : ev.log_correct[w];
      }
    const double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> wts(cfg.mc_samples);
    double total = 0.0;
    for (int i = 0; i < cfg.mc_samples; ++i) total += wts[i] = std::exp(logw[i] - top);
    for (int i = 0; i < cfg.mc_samples; ++i)
      for (int w = 0; w < W; ++w) marg[w] += wts[i] * draws[i][w] / total;
    out.std_error.assign(W, 0.0);
    for (int w = 0; w < W; ++w) {
      double v = 0.0;
      for (int i = 0; i < cfg.mc_samples; ++i) {
        const double d = (draws[i][w] - marg[w]) * wts[i] / total;
        v += d * d;
      }
      out.std_error[w] = std::sqrt(v);
    }
    out.exact = false;
  }
  out.marginals = WordErrorProbs::make(std::move(marg), 0.5);
  return out;
}

}  // namespace capt
