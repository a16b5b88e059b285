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

#include "capt/phoneme_core.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "capt/core/error.hpp"
#include "capt/core/hash.hpp"

namespace capt {

// ---- PhonemeInventory -----------------------------------------------------

PhonemeInventory::PhonemeInventory(std::vector<std::string> consonants,
                                   std::vector<std::string> vowel_bases)
    : vowel_bases_(std::move(vowel_bases)) {
  for (std::size_t v = 0; v < vowel_bases_.size(); ++v)
    for (int s = 0; s < 3; ++s) {
      symbols_.push_back(vowel_bases_[v] + std::to_string(s));
      stress_.push_back(s);
      vowel_base_.push_back(static_cast<int>(v));
    }
  for (auto& c : consonants) {
    require(!c.empty() && !std::isdigit(static_cast<unsigned char>(c.back())),
            "consonant symbols must not end in a stress digit: '" + c + "'");
    symbols_.push_back(std::move(c));
    stress_.push_back(-1);
    vowel_base_.push_back(-1);
  }
  for (PhonemeId i = 0; i < size(); ++i) {
    const bool inserted = index_.emplace(symbols_[i], i).second;
    require(inserted, "duplicate phoneme symbol '" + symbols_[i] + "'");
    (stress_[i] >= 0 ? vowels_ : consonants_).push_back(i);
  }
}

const PhonemeInventory& PhonemeInventory::standard() {
  static const PhonemeInventory inv({"d", "f", "m", "n", "r", "s"},
                                    {"aa", "ah", "ax", "ay", "ih", "iy"});
  return inv;
}

const std::string& PhonemeInventory::symbol(PhonemeId id) const {
  require(contains(id), "phoneme id out of range: " + std::to_string(id));
  return symbols_[id];
}

std::optional<PhonemeId> PhonemeInventory::find(std::string_view symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PhonemeId PhonemeInventory::id(std::string_view symbol) const {
  auto found = find(symbol);
  if (!found) throw InvalidInput("unknown phoneme symbol '" + std::string(symbol) + "'");
  return *found;
}

bool PhonemeInventory::is_vowel(PhonemeId id) const { return contains(id) && stress_[id] >= 0; }

int PhonemeInventory::stress(PhonemeId id) const {
  require(contains(id), "phoneme id out of range");
  return stress_[id];
}

PhonemeId PhonemeInventory::with_stress(PhonemeId vowel, int stress) const {
  require(is_vowel(vowel), "with_stress: not a vowel");
  require(stress >= 0 && stress <= 2, "with_stress: stress must be 0, 1 or 2");
  return vowel_base_[vowel] * 3 + stress;
}

std::vector<PhonemeId> PhonemeInventory::parse(std::string_view text) const {
  std::vector<PhonemeId> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(id(tok));
  return out;
}

std::string PhonemeInventory::format(std::span<const PhonemeId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += symbol(ids[i]);
  }
  return out;
}

std::uint64_t PhonemeInventory::fingerprint() const {
  std::uint64_t h = fnv1a64("inventory/v1");
  for (const auto& s : symbols_) h = fnv1a64(s + '\n', h);
  return h;
}

// ---- PhonemeSeq -----------------------------------------------------------

PhonemeSeq::PhonemeSeq(std::vector<PhonemeId> phonemes, std::vector<WordSpan> spans)
    : phonemes_(std::move(phonemes)), spans_(std::move(spans)) {
  int expected = 0;
  for (std::size_t w = 0; w < spans_.size(); ++w) {
    const auto& s = spans_[w];
    require(s.word == static_cast<int>(w), "word spans must be numbered in order");
    require(s.start == expected, "word spans must be contiguous");
    require(s.end > s.start, "word span is empty");
    expected = s.end;
  }
  require(expected == static_cast<int>(phonemes_.size()),
          "word spans must cover the phoneme sequence");
}

PhonemeSeq PhonemeSeq::from_words(const std::vector<std::vector<PhonemeId>>& words) {
  std::vector<PhonemeId> ph;
  std::vector<WordSpan> spans;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const int start = static_cast<int>(ph.size());
    ph.insert(ph.end(), words[w].begin(), words[w].end());
    spans.push_back({static_cast<int>(w), start, static_cast<int>(ph.size())});
  }
  return PhonemeSeq(std::move(ph), std::move(spans));
}

PhonemeSeq PhonemeSeq::single_word(std::vector<PhonemeId> phonemes) {
  return from_words({std::move(phonemes)});
}

int PhonemeSeq::word_of(int pos) const {
  require(pos >= 0 && pos < size(), "word_of: position out of range");
  auto it = std::upper_bound(spans_.begin(), spans_.end(), pos,
                             [](int p, const WordSpan& s) { return p < s.end; });
  return it->word;
}

std::vector<PhonemeId> PhonemeSeq::word(int w) const {
  require(w >= 0 && w < word_count(), "word index out of range");
  const auto& s = spans_[w];
  return {phonemes_.begin() + s.start, phonemes_.begin() + s.end};
}

std::vector<std::vector<PhonemeId>> PhonemeSeq::words() const {
  std::vector<std::vector<PhonemeId>> out;
  for (int w = 0; w < word_count(); ++w) out.push_back(word(w));
  return out;
}

void PhonemeSeq::check(const PhonemeInventory& inventory) const {
  for (PhonemeId p : phonemes_)
    require(inventory.contains(p), "phoneme id " + std::to_string(p) + " not in inventory");
}

// ---- ErrorLabels ----------------------------------------------------------

ErrorLabels ErrorLabels::no_error(const PhonemeSeq& seq) {
  return {std::vector<std::uint8_t>(seq.size(), 0),
          std::vector<std::uint8_t>(seq.word_count(), 0)};
}

ErrorLabels ErrorLabels::all_error(const PhonemeSeq& seq) {
  return {std::vector<std::uint8_t>(seq.size(), 1),
          std::vector<std::uint8_t>(seq.word_count(), 1)};
}

void ErrorLabels::derive_words(const PhonemeSeq& seq) {
  require(static_cast<int>(phoneme_errors.size()) == seq.size(),
          "phoneme labels do not match the sequence");
  word_errors.assign(seq.word_count(), 0);
  for (const auto& s : seq.spans())
    for (int j = s.start; j < s.end; ++j)
      if (phoneme_errors[j]) word_errors[s.word] = 1;
}

int ErrorLabels::error_word_count() const {
  return static_cast<int>(std::count(word_errors.begin(), word_errors.end(), 1));
}

// ---- Lexicon --------------------------------------------------------------

Lexicon Lexicon::load(std::istream& in, const PhonemeInventory& inventory) {
  Lexicon lex(inventory);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw InvalidInput("lexicon line " + std::to_string(lineno) + ": missing TAB");
    lex.add(line.substr(0, tab), inventory.parse(std::string_view(line).substr(tab + 1)));
  }
  return lex;
}

Lexicon Lexicon::load_file(const std::string& path, const PhonemeInventory& inventory) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open lexicon '" + path + "'");
  return load(in, inventory);
}

void Lexicon::save(std::ostream& out) const {
  for (const auto& e : entries_)
    for (const auto& v : e.variants) out << e.word << '\t' << inventory_->format(v) << '\n';
}

void Lexicon::add(const std::string& word, std::vector<PhonemeId> pronunciation) {
  require(!word.empty(), "lexicon word is empty");
  require(!pronunciation.empty(), "lexicon pronunciation for '" + word + "' is empty");
  for (PhonemeId p : pronunciation)
    require(inventory_->contains(p), "lexicon entry '" + word + "' uses unknown phoneme");
  for (auto& e : entries_)
    if (e.word == word) {
      e.variants.push_back(std::move(pronunciation));
      return;
    }
  entries_.push_back({word, {std::move(pronunciation)}});
}

const Lexicon::Entry* Lexicon::find(std::string_view word) const {
  for (const auto& e : entries_)
    if (e.word == word) return &e;
  return nullptr;
}

const Lexicon::Entry& Lexicon::at(std::string_view word) const {
  const Entry* e = find(word);
  if (e == nullptr) throw InvalidInput("word not in lexicon: '" + std::string(word) + "'");
  return *e;
}

// ---- alignment ------------------------------------------------------------

Alignment align(std::span<const PhonemeId> a, std::span<const PhonemeId> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }

  Alignment out;
  out.cost = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const int here = at(i, j);
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && at(i - 1, j - 1) == here) {
      out.ops.push_back({EditOp::kMatch, static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && j > 0 && a[i - 1] != b[j - 1] && at(i - 1, j - 1) + 1 == here) {
      out.ops.push_back({EditOp::kSubstitute, static_cast<int>(i - 1), static_cast<int>(j - 1)});
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == here) {
      out.ops.push_back({EditOp::kDelete, static_cast<int>(i - 1), -1});
      --i;
    } else {
      out.ops.push_back({EditOp::kInsert, -1, static_cast<int>(j - 1)});
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

Alignment align(const PhonemeSeq& a, const PhonemeSeq& b, const PhonemeInventory& inventory) {
  require(!a.empty() && !b.empty(), "align: sequences must be non-empty");
  a.check(inventory);
  b.check(inventory);
  return align(a.phonemes(), b.phonemes());
}

int phoneme_distance(std::span<const PhonemeId> a, std::span<const PhonemeId> b) {
  return align(a, b).cost;
}

int phoneme_distance(const PhonemeSeq& a, const PhonemeSeq& b, const PhonemeInventory& inventory) {
  return align(a, b, inventory).cost;
}

std::vector<PhonemeId> apply_alignment(const Alignment& alignment, std::span<const PhonemeId> a,
                                       std::span<const PhonemeId> b) {
  std::vector<PhonemeId> out;
  for (const auto& op : alignment.ops) {
    switch (op.op) {
      case EditOp::kMatch:
        out.push_back(a[op.a_pos]);
        break;
      case EditOp::kSubstitute:
      case EditOp::kInsert:
        out.push_back(b[op.b_pos]);
        break;
      case EditOp::kDelete:
        break;
    }
  }
  return out;
}

namespace {

// Word of `a` each op belongs to, per the attribution rule.
std::vector<int> op_words(const Alignment& alignment, const PhonemeSeq& a) {
  std::vector<int> words;
  words.reserve(alignment.ops.size());
  int last_a = -1;
  for (const auto& op : alignment.ops) {
    if (op.a_pos >= 0) {
      last_a = op.a_pos;
      words.push_back(a.word_of(op.a_pos));
    } else {
      words.push_back(last_a >= 0 ? a.word_of(last_a) : 0);
    }
  }
  return words;
}

// Phoneme labels for `target` against `reference` within one segment.
void label_segment(std::span<const PhonemeId> target, std::span<const PhonemeId> reference,
                   std::uint8_t* out) {
  if (target.size() == reference.size()) {
    for (std::size_t j = 0; j < target.size(); ++j) out[j] = target[j] != reference[j];
    return;
  }
  const Alignment al = align(target, reference);
  int last_target = -1;
  bool pending = false;  // a missing phoneme seen before any target position
  for (const auto& op : al.ops) {
    switch (op.op) {
      case EditOp::kMatch:
        last_target = op.a_pos;
        if (pending) out[op.a_pos] = 1, pending = false;
        break;
      case EditOp::kSubstitute:
      case EditOp::kDelete:  // extra phoneme in target
        last_target = op.a_pos;
        out[op.a_pos] = 1;
        if (pending) pending = false;
        break;
      case EditOp::kInsert:  // reference phoneme missing from target
        if (last_target >= 0)
          out[last_target] = 1;
        else
          pending = true;
        break;
    }
  }
}

}  // namespace

std::vector<std::uint8_t> words_touched(const Alignment& alignment, const PhonemeSeq& a) {
  std::vector<std::uint8_t> flags(a.word_count(), 0);
  const auto words = op_words(alignment, a);
  for (std::size_t k = 0; k < alignment.ops.size(); ++k)
    if (alignment.ops[k].op != EditOp::kMatch) flags[words[k]] = 1;
  return flags;
}

std::vector<std::vector<PhonemeId>> segment_by_words(const Alignment& alignment,
                                                     const PhonemeSeq& a,
                                                     std::span<const PhonemeId> b) {
  std::vector<std::vector<PhonemeId>> segments(a.word_count());
  const auto words = op_words(alignment, a);
  for (std::size_t k = 0; k < alignment.ops.size(); ++k) {
    const auto& op = alignment.ops[k];
    if (op.b_pos >= 0) segments[words[k]].push_back(b[op.b_pos]);
  }
  return segments;
}

ErrorLabels project_errors(const PhonemeSeq& reference, const PhonemeSeq& target) {
  require(!reference.empty() && !target.empty(), "project_errors: empty sequence");
  ErrorLabels labels;
  labels.phoneme_errors.assign(target.size(), 0);
  if (reference.word_count() == target.word_count()) {
    for (int w = 0; w < target.word_count(); ++w) {
      const auto& ts = target.spans()[w];
      const auto& rs = reference.spans()[w];
      require(ts.length() > 0 && rs.length() > 0, "project_errors: empty word span");
      label_segment(std::span(target.phonemes()).subspan(ts.start, ts.length()),
                    std::span(reference.phonemes()).subspan(rs.start, rs.length()),
                    labels.phoneme_errors.data() + ts.start);
    }
  } else {
    label_segment(target.phonemes(), reference.phonemes(), labels.phoneme_errors.data());
  }
  labels.derive_words(target);
  return labels;
}

}  // namespace capt
