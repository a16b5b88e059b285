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

#include "capt/pronunciation_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"
#include "capt/nn/checkpoint.hpp"
#include "capt/nn/ctc.hpp"
#include "capt/nn/optim.hpp"

namespace capt {

using nn::Var;

// ---- model ----------------------------------------------------------------

PMModel PMModel::init(const PhonemeInventory& inventory, const PMConfig& cfg) {
  require(cfg.embedding >= 1 && cfg.hidden >= 1, "bad pronunciation model configuration");
  PMModel m;
  m.config_ = cfg;
  m.vocabulary_ = inventory.size() + 1;
  const int e = cfg.embedding, h = cfg.hidden;
  Rng rng(derive_seed(cfg.seed, 0x706d));
  auto& p = m.params_;
  p.add("emb", nn::gaussian(inventory.size() + 1, e, 0.5, rng));  // last row: start symbol
  p.add("enc.w", nn::glorot(3 * e, h, rng));
  p.add("enc.b", nn::Matrix::Zero(1, h));
  p.add("init.w", nn::glorot(h, h, rng));
  p.add("init.b", nn::Matrix::Zero(1, h));
  p.add("dec.ws", nn::glorot(h, h, rng));
  p.add("dec.we", nn::glorot(e, h, rng));
  p.add("dec.b", nn::Matrix::Zero(1, h));
  p.add("att.w", nn::glorot(h, h, rng));
  p.add("out.w", nn::Matrix::Zero(2 * h, m.vocabulary_));
  p.add("out.b", nn::Matrix::Zero(1, m.vocabulary_));
  return m;
}

Var PMModel::step_logits(nn::Tape& tape, const std::vector<PhonemeId>& canonical,
                         const std::vector<PhonemeId>& realized) {
  require(!canonical.empty(), "pronunciation model: empty canonical word");
  const int start = vocabulary_ - 1;
  for (PhonemeId p : canonical) require(p >= 0 && p < start, "pronunciation model: bad phoneme");
  for (PhonemeId p : realized) require(p >= 0 && p < start, "pronunciation model: bad phoneme");

  auto P = [&](const char* name) { return tape.param(params_.get(name)); };
  const Var emb = P("emb");
  const Var enc = nn::tanh(nn::add_row(
      nn::matmul(nn::context_window(nn::gather_rows(emb, canonical), 1), P("enc.w")),
      P("enc.b")));
  const Var enc_t = nn::transpose(enc);
  const Var keys = nn::matmul(enc, P("att.w"));
  Var state = nn::tanh(nn::add_row(nn::matmul(nn::mean_rows(enc), P("init.w")), P("init.b")));

  std::vector<int> inputs{start};
  inputs.insert(inputs.end(), realized.begin(), realized.end());
  const Var in_emb = nn::gather_rows(emb, inputs);
  const Var ws = P("dec.ws"), we = P("dec.we"), db = P("dec.b");
  std::vector<Var> outputs;
  outputs.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Var x = nn::slice_rows(in_emb, static_cast<Eigen::Index>(t), 1);
    state = nn::tanh(nn::add_row(nn::add(nn::matmul(state, ws), nn::matmul(x, we)), db));
    const Var weights = nn::softmax_rows(nn::transpose(nn::matmul(keys, nn::transpose(state))));
    const Var context = nn::transpose(nn::matmul(enc_t, nn::transpose(weights)));
    const Var parts[] = {state, context};
    outputs.push_back(nn::concat_cols(parts));
  }
  return nn::add_row(nn::matmul(nn::concat_rows(outputs), P("out.w")), P("out.b"));
}

Var PMModel::nll(nn::Tape& tape, const std::vector<PhonemeId>& canonical,
                 const std::vector<PhonemeId>& realized) {
  std::vector<int> targets(realized.begin(), realized.end());
  targets.push_back(end_symbol());
  return nn::softmax_cross_entropy(step_logits(tape, canonical, realized), targets);
}

double PMModel::log_prob(const std::vector<PhonemeId>& canonical,
                         const std::vector<PhonemeId>& realized) const {
  nn::Tape tape;
  // Forward only; parameters are read, never written.
  return -const_cast<PMModel&>(*this).nll(tape, canonical, realized).scalar();
}

Eigen::MatrixXd PMModel::step_distributions(const std::vector<PhonemeId>& canonical,
                                            const std::vector<PhonemeId>& realized) const {
  nn::Tape tape;
  return nn::softmax_rows(const_cast<PMModel&>(*this).step_logits(tape, canonical, realized))
      .value();
}

void PMModel::save(const std::string& stem, const PhonemeInventory& inventory) const {
  nn::save_checkpoint(stem, params_,
                      {{"kind", "pronunciation_model"},
                       {"inventory_hash", hex64(inventory.fingerprint())},
                       {"vocabulary", vocabulary_},
                       {"embedding", config_.embedding},
                       {"hidden", config_.hidden},
                       {"epochs", config_.epochs},
                       {"learning_rate", config_.learning_rate},
                       {"seed", config_.seed},
                       {"loss_trace", loss_trace_}});
}

PMModel PMModel::load(const std::string& stem, const PhonemeInventory& inventory) {
  auto [params, meta] = nn::load_checkpoint(stem, "pronunciation_model");
  require(meta.at("inventory_hash").get<std::string>() == hex64(inventory.fingerprint()),
          "checkpoint '" + stem + "' was trained on another inventory");
  PMModel m;
  m.params_ = std::move(params);
  m.vocabulary_ = meta.at("vocabulary").get<int>();
  m.config_.embedding = meta.at("embedding").get<int>();
  m.config_.hidden = meta.at("hidden").get<int>();
  m.config_.epochs = meta.at("epochs").get<int>();
  m.config_.learning_rate = meta.at("learning_rate").get<double>();
  m.config_.seed = meta.at("seed").get<std::uint64_t>();
  m.loss_trace_ = meta.at("loss_trace").get<std::vector<double>>();
  return m;
}

// ---- corpus and training --------------------------------------------------

std::vector<PMPair> build_pm_corpus(const RecognizerModel& recognizer,
                                    const std::vector<TrainingExample>& native) {
  require(!native.empty(), "build_pm_corpus: empty corpus");
  std::vector<PMPair> out;
  out.reserve(native.size());
  for (const auto& ex : native) {
    require(ex.speech != nullptr, "build_pm_corpus: example without speech");
    out.push_back({ex.canonical, recognize(recognizer, *ex.speech).decoded.phonemes()});
  }
  return out;
}

std::vector<PMWordPair> word_pairs(const std::vector<PMPair>& pairs) {
  std::map<std::pair<std::vector<PhonemeId>, std::vector<PhonemeId>>, double> merged;
  for (const auto& p : pairs) {
    const Alignment al = align(p.canonical.phonemes(), p.recognized);
    const auto segments = segment_by_words(al, p.canonical, p.recognized);
    for (int w = 0; w < p.canonical.word_count(); ++w)
      merged[{p.canonical.word(w), segments[w]}] += 1.0;
  }
  std::vector<PMWordPair> out;
  for (auto& [key, weight] : merged) out.push_back({key.first, key.second, weight});
  return out;
}

PMModel train_pm(const std::vector<PMWordPair>& pairs, const PhonemeInventory& inventory,
                 const PMConfig& cfg) {
  require(!pairs.empty(), "train_pm: no training pairs");
  require(cfg.epochs >= 0, "train_pm: negative epoch count");
  PMModel m = PMModel::init(inventory, cfg);
  double total_weight = 0.0;
  for (const auto& p : pairs) total_weight += p.weight;
  auto epoch_loss = [&] {
    double total = 0.0;
    for (const auto& p : pairs) total -= p.weight * m.log_prob(p.canonical, p.realized);
    return total / total_weight;
  };
  m.loss_trace_.push_back(epoch_loss());
  nn::Adam opt(m.params_, nn::AdamConfig{cfg.learning_rate});
  Rng rng(derive_seed(cfg.seed, 0x6f72));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  constexpr std::size_t kBatch = 16;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double total = 0.0, batch_weight = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& p = pairs[order[k]];
      nn::Tape tape;
      const Var loss = nn::scale(m.nll(tape, p.canonical, p.realized), p.weight);
      tape.backward(loss);
      total += loss.scalar();
      batch_weight += p.weight;
      if ((k + 1) % kBatch == 0 || k + 1 == order.size()) {
        opt.step(batch_weight);
        batch_weight = 0.0;
      }
    }
    m.loss_trace_.push_back(total / total_weight);
    if (!std::isfinite(m.loss_trace_.back()))
      throw TrainingFailure("pronunciation model training diverged", m.loss_trace_);
  }
  return m;
}

// ---- hypothesis lattice ---------------------------------------------------

HypothesisLattice::HypothesisLattice(const PhonemePosteriorgram& pg,
                                     const LatticeOptions& options) {
  require(pg.frames() >= 1 && pg.classes() >= 2, "lattice: empty posteriorgram");
  require(options.max_branching >= 0 && options.max_branching <= 20,
          "lattice: branching cap must lie in [0, 20]");
  blank_ = pg.blank();
  const int T = pg.frames();
  best_.resize(T);
  second_.resize(T);
  std::vector<std::pair<double, int>> ambiguous;
  for (int t = 0; t < T; ++t) {
    int b = 0, s = -1;
    for (int k = 1; k < pg.classes(); ++k)
      if (pg.probs(t, k) > pg.probs(t, b)) b = k;
    for (int k = 0; k < pg.classes(); ++k)
      if (k != b && (s < 0 || pg.probs(t, k) > pg.probs(t, s))) s = k;
    best_[t] = b;
    second_[t] = s;
    if (pg.probs(t, s) >= options.min_second) ambiguous.emplace_back(-pg.probs(t, s), t);
  }
  std::sort(ambiguous.begin(), ambiguous.end());
  if (static_cast<int>(ambiguous.size()) > options.max_branching)
    ambiguous.resize(options.max_branching);
  for (const auto& a : ambiguous) branch_frames_.push_back(a.second);
  std::sort(branch_frames_.begin(), branch_frames_.end());

  masked_ = Eigen::MatrixXd::Zero(T, pg.classes());
  for (int t = 0; t < T; ++t) masked_(t, best_[t]) = 1.0;
  for (int t : branch_frames_) {
    const double p1 = pg.probs(t, best_[t]), p2 = pg.probs(t, second_[t]);
    masked_(t, best_[t]) = p1 / (p1 + p2);
    masked_(t, second_[t]) = p2 / (p1 + p2);
  }
}

std::vector<int> HypothesisLattice::path(std::uint64_t mask) const {
  std::vector<int> out = best_;
  for (std::size_t i = 0; i < branch_frames_.size(); ++i)
    if (mask >> i & 1U) out[branch_frames_[i]] = second_[branch_frames_[i]];
  return out;
}

double HypothesisLattice::path_probability(std::uint64_t mask) const {
  double p = 1.0;
  for (std::size_t i = 0; i < branch_frames_.size(); ++i) {
    const int t = branch_frames_[i];
    p *= masked_(t, (mask >> i & 1U) ? second_[t] : best_[t]);
  }
  return p;
}

double HypothesisLattice::probability(const std::vector<PhonemeId>& labels) const {
  return std::exp(nn::ctc_log_likelihood(masked_.array().log().matrix(), labels, blank_));
}

std::vector<Hypothesis> HypothesisLattice::top_k(int k) const {
  require(k >= 1, "top-K: K must be at least 1");
  const std::size_t m = branch_frames_.size();
  // Branch i costs ratio[i] = q(second) / q(best) <= 1. Subsets are visited
  // in non-increasing product order: from a subset whose largest sorted
  // index is j, extend with j+1 or replace j by j+1.
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ratio(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int t = branch_frames_[i];
    ratio[i] = masked_(t, second_[t]) / masked_(t, best_[t]);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ratio[a] > ratio[b]; });

  struct Node {
    double weight;
    std::uint64_t mask;
    int last;  // position in `order` of the largest member, -1 for the empty set
    bool operator<(const Node& o) const {
      return weight != o.weight ? weight < o.weight : mask > o.mask;
    }
  };
  std::priority_queue<Node> heap;
  heap.push({1.0, 0, -1});

  std::vector<Hypothesis> out;
  std::set<std::vector<PhonemeId>> seen;
  while (!heap.empty() && static_cast<int>(out.size()) < k) {
    const Node node = heap.top();
    heap.pop();
    auto h = nn::ctc_collapse(path(node.mask), blank_);
    if (seen.insert(h).second) {
      const double p = probability(h);
      out.push_back({std::move(h), p});
    }
    const int next = node.last + 1;
    if (next < static_cast<int>(m)) {
      const std::uint64_t bit = std::uint64_t{1} << order[next];
      heap.push({node.weight * ratio[order[next]], node.mask | bit, next});
      if (node.last >= 0) {
        const std::uint64_t drop = std::uint64_t{1} << order[node.last];
        heap.push({node.weight / ratio[order[node.last]] * ratio[order[next]],
                   (node.mask & ~drop) | bit, next});
      }
    }
  }
  return out;
}

std::vector<Hypothesis> HypothesisLattice::all() const {
  return top_k(static_cast<int>(std::min<std::uint64_t>(path_count(), 1U << 20)));
}

// ---- scoring --------------------------------------------------------------

double sequence_prob(const PMModel& pm, const PhonemeSeq& r,
                     const std::vector<PhonemeId>& realized, std::vector<double>* per_word) {
  const Alignment al = align(r.phonemes(), realized);
  const auto segments = segment_by_words(al, r, realized);
  double total = 1.0;
  if (per_word != nullptr) per_word->assign(r.word_count(), 0.0);
  for (int w = 0; w < r.word_count(); ++w) {
    const double p = std::exp(pm.log_prob(r.word(w), segments[w]));
    total *= p;
    if (per_word != nullptr) (*per_word)[w] = p;
  }
  return total;
}

PMScore score(const PMModel& pm, const RecognitionResult& recognizer_out, const PhonemeSeq& r,
              const ScoreOptions& options) {
  require(options.top_k >= 1, "score: K must be at least 1");
  require(!r.empty(), "score: empty canonical sequence");
  const HypothesisLattice lattice(recognizer_out.posteriorgram, options.lattice);
  const auto hyps = options.exact ? lattice.all() : lattice.top_k(options.top_k);
  PMScore out;
  out.per_word_pi.assign(r.word_count(), 0.0);
  out.hypotheses = static_cast<int>(hyps.size());
  std::vector<double> per_word;
  for (const auto& h : hyps) {
    out.pi += h.prob * sequence_prob(pm, r, h.phonemes, &per_word);
    for (int w = 0; w < r.word_count(); ++w) out.per_word_pi[w] += h.prob * per_word[w];
  }
  out.log_pi = std::log(out.pi);
  return out;
}

}  // namespace capt
