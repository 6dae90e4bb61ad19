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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lga {

// Unit-cost Levenshtein alignment of `hyp` against `ref`. Insertions are
// symbols only in hyp, deletions symbols only in ref.
struct EditOps {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  bool operator==(const EditOps&) const = default;
};

template <class T>
EditOps edit_distance(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::size_t> dp((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) dp[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    dp[i * w] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = dp[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t del = dp[(i - 1) * w + j] + 1;
      const std::size_t ins = dp[i * w + j - 1] + 1;
      dp[i * w + j] = std::min(diag, std::min(del, ins));
    }
  }

  // Backtrace preference: substitution/match, then deletion, then insertion.
  EditOps ops;
  ops.distance = dp[n * w + m];
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = dp[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (dp[(i - 1) * w + j - 1] + (same ? 0 : 1) == here) {
        if (!same) ++ops.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[(i - 1) * w + j] + 1 == here) {
      ++ops.deletions;
      --i;
    } else {
      ++ops.insertions;
      --j;
    }
  }
  return ops;
}

template <class T>
EditOps edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  return edit_distance(std::span<const T>(ref), std::span<const T>(hyp));
}

struct ErrorRateReport {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_len = 0;
  double rate = 0.0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  // Pools counts (corpus-level rate = total errors / total reference length).
  ErrorRateReport& operator+=(const ErrorRateReport& other);
};

// Uppercase (ASCII), collapse whitespace runs to one space, trim.
std::string normalize_text(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
// UTF-8 code points of normalize_text(text).
std::u32string to_code_points(std::string_view text);

// Both throw ArgumentError when the normalized reference is empty.
ErrorRateReport wer(std::string_view reference, std::string_view hypothesis);
ErrorRateReport cer(std::string_view reference, std::string_view hypothesis);

}  // namespace lga
