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

// Phoneme inventory, word-segmented phoneme sequences, lexicon, minimal-edit
// alignment and projection of phoneme mismatches onto word labels.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace capt {

using PhonemeId = int;

/// Ordered set of phoneme symbols. Vowels come in three stress variants
/// ("aa0", "aa1", "aa2"); the CTC blank is the id one past the last symbol.
class PhonemeInventory {
 public:
  PhonemeInventory(std::vector<std::string> consonants, std::vector<std::string> vowel_bases);

  /// The toy inventory: 6 vowels x 3 stress variants + 6 consonants.
  static const PhonemeInventory& standard();

  int size() const { return static_cast<int>(symbols_.size()); }
  int blank_id() const { return size(); }
  const std::string& symbol(PhonemeId id) const;
  const std::vector<std::string>& symbols() const { return symbols_; }
  std::optional<PhonemeId> find(std::string_view symbol) const;
  /// Throws InvalidInput for an unknown symbol.
  PhonemeId id(std::string_view symbol) const;
  bool contains(PhonemeId id) const { return id >= 0 && id < size(); }

  bool is_vowel(PhonemeId id) const;
  /// Stress digit 0/1/2 for vowels, -1 for consonants.
  int stress(PhonemeId id) const;
  /// Same vowel with another stress digit.
  PhonemeId with_stress(PhonemeId vowel, int stress) const;
  int vowel_count() const { return static_cast<int>(vowel_bases_.size()); }
  const std::vector<PhonemeId>& vowels() const { return vowels_; }
  const std::vector<PhonemeId>& consonants() const { return consonants_; }

  /// Space separated symbols to ids.
  std::vector<PhonemeId> parse(std::string_view text) const;
  std::string format(std::span<const PhonemeId> ids) const;

  /// Stable fingerprint of the symbol list (recorded in checkpoints).
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> symbols_;
  std::vector<std::string> vowel_bases_;
  std::vector<int> stress_;      // per symbol, -1 for consonants
  std::vector<int> vowel_base_;  // per symbol, -1 for consonants
  std::vector<PhonemeId> vowels_, consonants_;
  std::map<std::string, PhonemeId, std::less<>> index_;
};

/// Half-open phoneme range [start, end) belonging to one word.
struct WordSpan {
  int word = 0;
  int start = 0;
  int end = 0;
  int length() const { return end - start; }
  bool operator==(const WordSpan&) const = default;
};

/// Phonemes segmented into words. Spans are contiguous, ordered, non-empty
/// and cover the whole sequence.
class PhonemeSeq {
 public:
  PhonemeSeq() = default;
  PhonemeSeq(std::vector<PhonemeId> phonemes, std::vector<WordSpan> spans);
  /// Builds spans from per-word phoneme lists.
  static PhonemeSeq from_words(const std::vector<std::vector<PhonemeId>>& words);
  static PhonemeSeq single_word(std::vector<PhonemeId> phonemes);

  const std::vector<PhonemeId>& phonemes() const { return phonemes_; }
  const std::vector<WordSpan>& spans() const { return spans_; }
  int size() const { return static_cast<int>(phonemes_.size()); }
  bool empty() const { return phonemes_.empty(); }
  int word_count() const { return static_cast<int>(spans_.size()); }
  PhonemeId operator[](int i) const { return phonemes_[i]; }
  /// Word index that owns position `pos`.
  int word_of(int pos) const;
  std::vector<PhonemeId> word(int w) const;
  std::vector<std::vector<PhonemeId>> words() const;

  /// Throws InvalidInput if any symbol is outside the inventory.
  void check(const PhonemeInventory& inventory) const;

  bool operator==(const PhonemeSeq&) const = default;

 private:
  std::vector<PhonemeId> phonemes_;
  std::vector<WordSpan> spans_;
};

/// Per-phoneme and per-word mispronunciation labels. A word is labelled 1
/// iff at least one of its phonemes is.
struct ErrorLabels {
  std::vector<std::uint8_t> phoneme_errors;
  std::vector<std::uint8_t> word_errors;

  static ErrorLabels no_error(const PhonemeSeq& seq);
  /// Every word (and phoneme) flagged.
  static ErrorLabels all_error(const PhonemeSeq& seq);
  /// Recomputes word labels from phoneme labels.
  void derive_words(const PhonemeSeq& seq);
  int error_word_count() const;
  bool operator==(const ErrorLabels&) const = default;
};

/// Word to pronunciation variants. The first variant is the canonical one.
class Lexicon {
 public:
  struct Entry {
    std::string word;
    std::vector<std::vector<PhonemeId>> variants;
  };

  explicit Lexicon(const PhonemeInventory& inventory) : inventory_(&inventory) {}

  /// One line per variant: word TAB space separated phonemes. '#' comments.
  static Lexicon load(std::istream& in, const PhonemeInventory& inventory);
  static Lexicon load_file(const std::string& path, const PhonemeInventory& inventory);
  void save(std::ostream& out) const;

  void add(const std::string& word, std::vector<PhonemeId> pronunciation);
  const Entry* find(std::string_view word) const;
  const Entry& at(std::string_view word) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const PhonemeInventory& inventory() const { return *inventory_; }

 private:
  const PhonemeInventory* inventory_;
  std::vector<Entry> entries_;
};

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

/// One step of an edit script from sequence A to sequence B. Delete consumes
/// an A symbol, Insert a B symbol; positions not consumed are -1.
struct AlignedPair {
  EditOp op;
  int a_pos;
  int b_pos;
  bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
  std::vector<AlignedPair> ops;
  int cost = 0;
};

/// Minimal unit-cost edit alignment (Needleman-Wunsch). Among equal-cost
/// scripts the traceback prefers match > substitute > delete > insert.
Alignment align(std::span<const PhonemeId> a, std::span<const PhonemeId> b);
Alignment align(const PhonemeSeq& a, const PhonemeSeq& b, const PhonemeInventory& inventory);

int phoneme_distance(std::span<const PhonemeId> a, std::span<const PhonemeId> b);
int phoneme_distance(const PhonemeSeq& a, const PhonemeSeq& b, const PhonemeInventory& inventory);

/// Applies an edit script to `a`; `b` supplies substituted and inserted symbols.
std::vector<PhonemeId> apply_alignment(const Alignment& alignment, std::span<const PhonemeId> a,
                                       std::span<const PhonemeId> b);

/// Flags each word of `a` that an alignment of `a` against some sequence
/// edits. Deletions and substitutions belong to the word holding the A
/// position; insertions to the word of the preceding A position (word 0 when
/// nothing precedes them).
std::vector<std::uint8_t> words_touched(const Alignment& alignment, const PhonemeSeq& a);

/// Splits `b` into per-word segments following an alignment of `a` to `b`,
/// using the same attribution rule as words_touched.
std::vector<std::vector<PhonemeId>> segment_by_words(const Alignment& alignment,
                                                     const PhonemeSeq& a,
                                                     std::span<const PhonemeId> b);

/// Labels for `target` given the `reference` it should match. When both have
/// the same word count, words are compared positionally; otherwise a global
/// alignment decides. Segments of equal length are compared position by
/// position, others through align(). Phoneme labels are aligned to `target`;
/// a deletion marks the nearest remaining phoneme of its word.
ErrorLabels project_errors(const PhonemeSeq& reference, const PhonemeSeq& target);

}  // namespace capt
