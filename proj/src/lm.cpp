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

#include "lga/lm.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <zlib.h>

#include "lga/error.hpp"

namespace lga {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw FormatError("ARPA line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

NGramLM::Key NGramLM::make_key(std::span<const WordId> ids) {
  Key key(ids.size(), U'\0');
  for (std::size_t i = 0; i < ids.size(); ++i) key[i] = static_cast<char32_t>(static_cast<std::uint32_t>(ids[i]));
  return key;
}

WordId NGramLM::intern(std::string_view word) {
  auto [it, inserted] = word_ids_.try_emplace(std::string(word), static_cast<WordId>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

std::optional<WordId> NGramLM::word_id(std::string_view word) const {
  auto it = word_ids_.find(std::string(word));
  if (it == word_ids_.end()) return std::nullopt;
  return it->second;
}

const NGramEntry* NGramLM::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > sections_.size()) return nullptr;
  const auto& section = sections_[ngram.size() - 1];
  auto it = section.index.find(make_key(ngram));
  return it == section.index.end() ? nullptr : &section.entries[it->second].second;
}

std::span<const WordId> NGramLM::ngram_at(int n, std::size_t i, std::vector<WordId>& scratch) const {
  const Key& key = sections_.at(static_cast<std::size_t>(n - 1)).entries.at(i).first;
  scratch.assign(key.size(), 0);
  for (std::size_t k = 0; k < key.size(); ++k) scratch[k] = static_cast<WordId>(static_cast<std::uint32_t>(key[k]));
  return scratch;
}

NGramLM NGramLM::parse_arpa(std::string_view text, double oov_log10) {
  std::istringstream in{std::string(text)};
  return parse_arpa(in, oov_log10);
}

NGramLM NGramLM::parse_arpa(std::istream& text, double oov_log10) {
  enum class Phase { kPreamble, kCounts, kSections, kDone };

  NGramLM lm;
  lm.oov_log10_ = oov_log10;
  std::vector<std::size_t> declared;
  std::vector<bool> section_seen;
  Phase phase = Phase::kPreamble;
  std::size_t current = 0;  // order of the active section, 0 = none
  std::size_t line_no = 0;
  std::vector<WordId> ids;

  std::string raw;
  while (phase != Phase::kDone && std::getline(text, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (phase == Phase::kPreamble) {
      if (line == "\\data\\") phase = Phase::kCounts;
      continue;
    }
    if (line.empty()) continue;

    if (line.front() == '\\') {
      if (line == "\\end\\") {
        phase = Phase::kDone;
        break;
      }
      std::size_t n = 0;
      const auto dash = line.find("-grams:");
      if (dash == std::string_view::npos || dash + 7 != line.size() || !parse_size(line.substr(1, dash - 1), n)) {
        malformed(line_no, "unrecognized section header '" + std::string(line) + "'");
      }
      if (n < 1 || n > declared.size()) malformed(line_no, "section for undeclared order " + std::to_string(n));
      if (section_seen[n - 1]) malformed(line_no, "duplicate section for order " + std::to_string(n));
      section_seen[n - 1] = true;
      current = n;
      phase = Phase::kSections;
      continue;
    }

    if (phase == Phase::kCounts) {
      if (line.rfind("ngram ", 0) != 0) malformed(line_no, "expected 'ngram k=n'");
      const auto body = trim(line.substr(6));
      const auto eq = body.find('=');
      std::size_t n = 0, count = 0;
      if (eq == std::string_view::npos || !parse_size(trim(body.substr(0, eq)), n) ||
          !parse_size(trim(body.substr(eq + 1)), count)) {
        malformed(line_no, "bad count line '" + std::string(line) + "'");
      }
      if (n != declared.size() + 1) malformed(line_no, "ngram orders must be declared as 1, 2, ...");
      declared.push_back(count);
      section_seen.push_back(false);
      lm.sections_.emplace_back();
      continue;
    }

    if (current == 0) malformed(line_no, "entry outside an n-gram section");
    const auto fields = split_ws(line);
    if (fields.size() != current + 1 && fields.size() != current + 2) {
      malformed(line_no, "expected 'logprob w1 .. w" + std::to_string(current) + " [backoff]'");
    }
    NGramEntry entry;
    if (!parse_double(fields[0], entry.log10_prob)) malformed(line_no, "bad log probability");
    if (entry.log10_prob > 0.0) malformed(line_no, "log10 probability is positive");
    if (fields.size() == current + 2 && !parse_double(fields.back(), entry.backoff)) {
      malformed(line_no, "bad backoff weight");
    }
    ids.clear();
    for (std::size_t k = 1; k <= current; ++k) ids.push_back(lm.intern(fields[k]));
    auto& section = lm.sections_[current - 1];
    Key key = make_key(ids);
    if (!section.index.try_emplace(key, section.entries.size()).second) {
      malformed(line_no, "duplicate n-gram");
    }
    section.entries.emplace_back(std::move(key), entry);
  }

  if (phase == Phase::kPreamble) throw FormatError("ARPA: missing \\data\\ section");
  if (phase != Phase::kDone) throw FormatError("ARPA: missing \\end\\ marker");
  if (declared.empty()) throw FormatError("ARPA: no n-gram counts declared");
  for (std::size_t n = 1; n <= declared.size(); ++n) {
    const std::size_t parsed = lm.sections_[n - 1].entries.size();
    if (parsed != declared[n - 1]) {
      throw FormatError("ARPA: count mismatch for order " + std::to_string(n) + ": declared " +
                        std::to_string(declared[n - 1]) + ", found " + std::to_string(parsed));
    }
  }
  for (std::size_t n = 2; n <= declared.size(); ++n) {
    for (const auto& [key, entry] : lm.sections_[n - 1].entries) {
      const auto& lower = lm.sections_[n - 2].index;
      if (!lower.count(key.substr(0, n - 1))) {
        throw FormatError("ARPA: " + std::to_string(n) + "-gram without its prefix (k-1)-gram");
      }
    }
  }
  if (auto unk = lm.word_id("<unk>"); unk && lm.find(std::span(&*unk, 1))) lm.unk_ = unk;
  return lm;
}

NGramLM NGramLM::load(const std::filesystem::path& path, double oov_log10) {
  // gzread is transparent for uncompressed input.
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (!file) throw IoError("cannot open LM '" + path.string() + "'");
  std::string data;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(file, buf, sizeof(buf))) > 0) data.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = n < 0 ? gzerror(file, &err) : nullptr;
  const std::string message = msg ? msg : "";
  gzclose(file);
  if (n < 0) throw IoError("failed reading LM '" + path.string() + "': " + message);
  try {
    return parse_arpa(data, oov_log10);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

LMState NGramLM::begin_state() const {
  LMState state;
  if (auto bos = word_id("<s>"); bos && find(std::span(&*bos, 1))) state.context.push_back(*bos);
  return state;
}

WordScore NGramLM::score_word(const LMState& state, std::string_view word) const {
  return score_word(state, word_id(word).value_or(kUnknownWord));
}

WordScore NGramLM::score_word(const LMState& state, WordId word) const {
  const std::size_t keep = sections_.empty() ? 0 : sections_.size() - 1;
  const std::size_t skip = state.context.size() > keep ? state.context.size() - keep : 0;
  const std::span<const WordId> context = std::span(state.context).subspan(skip);

  WordScore result;
  auto advance = [&](WordId w) {
    result.next.context.assign(context.begin(), context.end());
    result.next.context.push_back(w);
    if (result.next.context.size() > keep) {
      result.next.context.erase(result.next.context.begin(),
                                result.next.context.end() - static_cast<std::ptrdiff_t>(keep));
    }
  };

  const bool known = word != kUnknownWord && find(std::span(&word, 1)) != nullptr;
  if (!known) {
    if (!unk_) {
      result.log10_prob = oov_log10_;
      advance(word);
      return result;
    }
    word = *unk_;
  }

  std::vector<WordId> ngram(context.begin(), context.end());
  ngram.push_back(word);
  double backoff = 0.0;
  for (std::size_t start = 0; start <= context.size(); ++start) {
    const auto tail = std::span<const WordId>(ngram).subspan(start);
    if (const NGramEntry* e = find(tail)) {
      result.log10_prob = backoff + e->log10_prob;
      break;
    }
    if (const NGramEntry* ctx = find(tail.first(tail.size() - 1))) backoff += ctx->backoff;
  }
  advance(word);
  return result;
}

double NGramLM::score_sequence(std::span<const std::string> words) const {
  LMState state = begin_state();
  double total = 0.0;
  for (const auto& w : words) {
    auto scored = score_word(state, w);
    total += scored.log10_prob;
    state = std::move(scored.next);
  }
  return total;
}

void NGramLM::write_arpa(std::ostream& out) const {
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= sections_.size(); ++n) {
    out << "ngram " << n << '=' << sections_[n - 1].entries.size() << '\n';
  }
  for (std::size_t n = 1; n <= sections_.size(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [key, entry] : sections_[n - 1].entries) {
      out << format_double(entry.log10_prob);
      for (char32_t id : key) out << '\t' << words_[static_cast<std::size_t>(id)];
      if (n < sections_.size()) out << '\t' << format_double(entry.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  if (!out) throw IoError("failed to write ARPA text");
}

bool NGramLM::operator==(const NGramLM& other) const {
  if (sections_.size() != other.sections_.size() || oov_log10_ != other.oov_log10_) return false;
  std::vector<WordId> mapped;
  for (std::size_t n = 0; n < sections_.size(); ++n) {
    if (sections_[n].entries.size() != other.sections_[n].entries.size()) return false;
    for (const auto& [key, entry] : sections_[n].entries) {
      mapped.clear();
      for (char32_t id : key) {
        auto theirs = other.word_id(words_[static_cast<std::size_t>(id)]);
        if (!theirs) return false;
        mapped.push_back(*theirs);
      }
      const NGramEntry* match = other.find(mapped);
      if (!match || !(*match == entry)) return false;
    }
  }
  return true;
}

}  // namespace lga
