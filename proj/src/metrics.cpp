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

#include "lga/metrics.hpp"

#include "lga/error.hpp"

namespace lga {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

ErrorRateReport make_report(const EditOps& ops, std::size_t reference_len) {
  ErrorRateReport r;
  r.substitutions = ops.substitutions;
  r.insertions = ops.insertions;
  r.deletions = ops.deletions;
  r.reference_len = reference_len;
  r.rate = static_cast<double>(r.errors()) / static_cast<double>(reference_len);
  return r;
}

}  // namespace

ErrorRateReport& ErrorRateReport::operator+=(const ErrorRateReport& other) {
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  reference_len += other.reference_len;
  rate = reference_len ? static_cast<double>(errors()) / static_cast<double>(reference_len) : 0.0;
  return *this;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  const std::string norm = normalize_text(text);
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    words.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

std::u32string to_code_points(std::string_view text) {
  const std::string norm = normalize_text(text);
  std::u32string out;
  for (std::size_t i = 0; i < norm.size();) {
    const auto b = static_cast<unsigned char>(norm[i]);
    std::size_t len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > norm.size()) {
      // Invalid UTF-8 lead: count the byte as one symbol.
      out.push_back(b);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? b : b & (0x7F >> len);
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(norm[i + k]);
      if ((cont >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      out.push_back(b);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

ErrorRateReport wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(reference);
  if (ref.empty()) throw ArgumentError("WER undefined for an empty reference");
  return make_report(edit_distance(ref, split_words(hypothesis)), ref.size());
}

ErrorRateReport cer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = to_code_points(reference);
  if (ref.empty()) throw ArgumentError("CER undefined for an empty reference");
  const auto hyp = to_code_points(hypothesis);
  return make_report(edit_distance(std::span<const char32_t>(ref), std::span<const char32_t>(hyp)), ref.size());
}

}  // namespace lga
