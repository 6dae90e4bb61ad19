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

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lga/lm.hpp"
#include "lga/projection.hpp"
#include "lga/tensor_io.hpp"

namespace lga {

inline constexpr double kLn10 = 2.302585092994045684;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DecodeParams {
  std::size_t beam_width = 100;
  double alpha1 = 0.5;  // LM weight
  double alpha2 = 1.0;  // per-word insertion bonus (negative = penalty)
  double token_min_logp = -5.0;
  double beam_prune_logp = -10.0;
  std::size_t max_candidates_per_step = 0;  // 0 = all C tokens

  // Throws ArgumentError.
  void validate() const;

  // No token floor, no score window, every token considered.
  static DecodeParams exhaustive(std::size_t beam_width);
};

struct BeamHypothesis {
  std::vector<TokenId> tokens;  // collapsed
  std::vector<std::string> words;
  std::string partial_word;
  double p_blank = kNegInf;
  double p_nonblank = kNegInf;
  LMState lm_state;
  double lm_log10 = 0.0;  // sum over completed words
  double combined = kNegInf;

  double am_logp() const;
};

struct Transcript {
  std::string text;
  std::vector<TokenId> token_ids;
  double am_logp = 0.0;
  double lm_log10 = 0.0;
  double combined_score = 0.0;
};

// Merge repeats, then drop blanks.
std::vector<TokenId> ctc_collapse(std::span<const TokenId> ids, TokenId blank);

// Token strings joined with the word delimiter rendered as a space;
// whitespace runs are collapsed and the ends trimmed. Blanks are skipped.
std::string render_text(std::span<const TokenId> ids, const Vocabulary& vocab);

Transcript greedy_decode(const LogProbsMatrix& logprobs, const Vocabulary& vocab);

// Called after pruning at every timestep with the surviving beams.
using BeamObserver = std::function<void(std::size_t t, std::span<const BeamHypothesis> beams)>;

// CTC prefix beam search. Score of a prefix:
//   ln P_AM + alpha1 * ln(10) * sum log10 P_LM(word) + alpha2 * |words|
// where the LM term and bonus are added once per completed word. `lm` may be
// null, in which case alpha1 is ignored. Returns up to beam_width transcripts
// ordered by score, then text.
std::vector<Transcript> beam_search_decode(const LogProbsMatrix& logprobs, const Vocabulary& vocab,
                                           const NGramLM* lm, const DecodeParams& params,
                                           const BeamObserver& observer = {});

}  // namespace lga
