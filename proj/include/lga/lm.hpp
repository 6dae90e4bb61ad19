// Copyright 2026 The lgadecode Authors
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

#pragma once

// Backoff n-gram language model read from ARPA text. Scores are log10, as in
// the file; converting to natural log is the decoder's job.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lga {

using WordId = std::int32_t;
inline constexpr WordId kUnknownWord = -1;
inline constexpr double kDefaultOovLog10 = -10.0;

struct NGramEntry {
  double log10_prob = 0.0;
  double backoff = 0.0;  // 0.0 when absent and at the highest order

  bool operator==(const NGramEntry&) const = default;
};

// Preceding words, oldest first; at most order-1 of them.
struct LMState {
  std::vector<WordId> context;

  bool operator==(const LMState&) const = default;
};

struct WordScore {
  double log10_prob = 0.0;
  LMState next;
};

class NGramLM {
 public:
  // Throws FormatError on missing \data\ or \end\, count mismatch, or a
  // malformed entry line.
  static NGramLM parse_arpa(std::istream& text, double oov_log10 = kDefaultOovLog10);
  static NGramLM parse_arpa(std::string_view text, double oov_log10 = kDefaultOovLog10);
  // Reads a plain or gzip-compressed ARPA file.
  static NGramLM load(const std::filesystem::path& path, double oov_log10 = kDefaultOovLog10);

  int order() const { return static_cast<int>(sections_.size()); }
  std::size_t vocab_size() const { return words_.size(); }
  std::size_t count(int n) const { return sections_.at(static_cast<std::size_t>(n - 1)).entries.size(); }
  double oov_log10() const { return oov_log10_; }
  std::optional<WordId> unk_id() const { return unk_; }

  std::optional<WordId> word_id(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }

  // Entry for an n-gram given oldest word first, or nullptr.
  const NGramEntry* find(std::span<const WordId> ngram) const;

  // Word ids of the i-th n-gram of order n in file order.
  std::span<const WordId> ngram_at(int n, std::size_t i, std::vector<WordId>& scratch) const;
  const NGramEntry& entry_at(int n, std::size_t i) const {
    return sections_.at(static_cast<std::size_t>(n - 1)).entries.at(i).second;
  }

  // [<s>] when the model knows <s>, else empty.
  LMState begin_state() const;

  // log10 P(word | state) with standard backoff. Unknown words map to <unk>
  // when present; otherwise the fixed OOV penalty is returned.
  WordScore score_word(const LMState& state, std::string_view word) const;
  WordScore score_word(const LMState& state, WordId word) const;

  double score_sequence(std::span<const std::string> words) const;

  void write_arpa(std::ostream& out) const;

  bool operator==(const NGramLM& other) const;

 private:
  using Key = std::u32string;

  struct Section {
    std::vector<std::pair<Key, NGramEntry>> entries;
    std::unordered_map<Key, std::size_t> index;
  };

  static Key make_key(std::span<const WordId> ids);
  WordId intern(std::string_view word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> word_ids_;
  std::vector<Section> sections_;
  std::optional<WordId> unk_;
  double oov_log10_ = kDefaultOovLog10;
};

// Free-function spellings of the scoring API.
inline NGramLM parse_arpa(std::string_view text) { return NGramLM::parse_arpa(text); }
inline WordScore score_word(const NGramLM& lm, const LMState& state, std::string_view word) {
  return lm.score_word(state, word);
}
inline double score_sequence(const NGramLM& lm, std::span<const std::string> words) {
  return lm.score_sequence(words);
}

}  // namespace lga
