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

#include "lga/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "lga/error.hpp"

namespace lga {
namespace {

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

struct TokensHash {
  std::size_t operator()(const std::vector<TokenId>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (TokenId id : v) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(id));
      h *= 1099511628211ull;
    }
    return h;
  }
};

void check_inputs(const LogProbsMatrix& logprobs, const Vocabulary& vocab) {
  if (logprobs.rows < 1) throw ArgumentError("decode: need at least one timestep");
  if (logprobs.cols != vocab.size()) {
    throw ArgumentError("decode: logprob width " + std::to_string(logprobs.cols) +
                        " does not match vocabulary size " + std::to_string(vocab.size()));
  }
}

// Beam bookkeeping for one timestep: hypotheses keyed by collapsed prefix.
class StepBeams {
 public:
  StepBeams(const Vocabulary& vocab, const NGramLM* lm) : vocab_(vocab), lm_(lm) {}

  void clear() {
    hyps_.clear();
    index_.clear();
  }

  // Slot for `parent`'s own prefix.
  BeamHypothesis& same(const BeamHypothesis& parent) {
    auto [it, inserted] = index_.try_emplace(parent.tokens, hyps_.size());
    if (inserted) {
      BeamHypothesis& h = hyps_.emplace_back(parent);
      h.p_blank = h.p_nonblank = kNegInf;
    }
    return hyps_[it->second];
  }

  // Slot for `parent`'s prefix extended by token c.
  BeamHypothesis& extended(const BeamHypothesis& parent, TokenId c) {
    key_ = parent.tokens;
    key_.push_back(c);
    auto [it, inserted] = index_.try_emplace(key_, hyps_.size());
    if (inserted) {
      BeamHypothesis& h = hyps_.emplace_back(parent);
      h.p_blank = h.p_nonblank = kNegInf;
      h.tokens.push_back(c);
      if (c == vocab_.word_delimiter_id) {
        close_word(h);
      } else {
        h.partial_word += vocab_.token(c);
      }
    }
    return hyps_[it->second];
  }

  void close_word(BeamHypothesis& h) const {
    if (h.partial_word.empty()) return;
    if (lm_) {
      auto scored = lm_->score_word(h.lm_state, h.partial_word);
      h.lm_log10 += scored.log10_prob;
      h.lm_state = std::move(scored.next);
    }
    h.words.push_back(std::move(h.partial_word));
    h.partial_word.clear();
  }

  std::vector<BeamHypothesis>& hyps() { return hyps_; }

 private:
  const Vocabulary& vocab_;
  const NGramLM* lm_;
  std::vector<BeamHypothesis> hyps_;
  std::unordered_map<std::vector<TokenId>, std::size_t, TokensHash> index_;
  std::vector<TokenId> key_;
};

}  // namespace

void DecodeParams::validate() const {
  if (beam_width < 1) throw ArgumentError("beam_width must be >= 1");
  if (!(token_min_logp <= 0.0)) throw ArgumentError("token_min_logp must be <= 0");
  if (!(beam_prune_logp <= 0.0)) throw ArgumentError("beam_prune_logp must be <= 0");
  if (!std::isfinite(alpha1) || !std::isfinite(alpha2)) throw ArgumentError("alpha1/alpha2 must be finite");
}

DecodeParams DecodeParams::exhaustive(std::size_t beam_width) {
  DecodeParams p;
  p.beam_width = beam_width;
  p.token_min_logp = kNegInf;
  p.beam_prune_logp = kNegInf;
  p.max_candidates_per_step = 0;
  return p;
}

double BeamHypothesis::am_logp() const { return logaddexp(p_blank, p_nonblank); }

std::vector<TokenId> ctc_collapse(std::span<const TokenId> ids, TokenId blank) {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0 && ids[i] == ids[i - 1]) continue;
    if (ids[i] != blank) out.push_back(ids[i]);
  }
  return out;
}

std::string render_text(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string raw;
  for (TokenId id : ids) {
    if (id == vocab.blank_id) continue;
    raw += id == vocab.word_delimiter_id ? std::string_view(" ") : std::string_view(vocab.token(id));
  }
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    const bool space = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r';
    if (space) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(ch);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Transcript greedy_decode(const LogProbsMatrix& logprobs, const Vocabulary& vocab) {
  check_inputs(logprobs, vocab);
  std::vector<TokenId> path(logprobs.rows);
  double am = 0.0;
  for (std::size_t t = 0; t < logprobs.rows; ++t) {
    const auto row = logprobs.row(t);
    const std::size_t best = argmax(row);
    path[t] = static_cast<TokenId>(best);
    am += row[best];
  }
  Transcript out;
  out.token_ids = ctc_collapse(path, vocab.blank_id);
  out.text = render_text(out.token_ids, vocab);
  out.am_logp = am;
  out.combined_score = am;
  return out;
}

std::vector<Transcript> beam_search_decode(const LogProbsMatrix& logprobs, const Vocabulary& vocab,
                                           const NGramLM* lm, const DecodeParams& params,
                                           const BeamObserver& observer) {
  params.validate();
  check_inputs(logprobs, vocab);

  const TokenId blank = vocab.blank_id;
  const double lm_weight = lm ? params.alpha1 * kLn10 : 0.0;
  const std::size_t max_candidates =
      params.max_candidates_per_step == 0 ? vocab.size() : params.max_candidates_per_step;
  auto score = [&](BeamHypothesis& h) {
    h.combined = h.am_logp() + lm_weight * h.lm_log10 + params.alpha2 * static_cast<double>(h.words.size());
  };

  std::vector<BeamHypothesis> beams(1);
  beams[0].p_blank = 0.0;
  if (lm) beams[0].lm_state = lm->begin_state();
  score(beams[0]);

  StepBeams step(vocab, lm);
  std::vector<TokenId> candidates;
  std::vector<std::size_t> order;

  for (std::size_t t = 0; t < logprobs.rows; ++t) {
    const auto row = logprobs.row(t);

    candidates.clear();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto id = static_cast<TokenId>(c);
      if (id != blank && row[c] >= params.token_min_logp) candidates.push_back(id);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](TokenId a, TokenId b) { return row[a] > row[b]; });
    if (candidates.size() > max_candidates) candidates.resize(max_candidates);

    step.clear();
    for (const BeamHypothesis& h : beams) {
      const double total = h.am_logp();
      {
        BeamHypothesis& s = step.same(h);
        s.p_blank = logaddexp(s.p_blank, total + row[blank]);
      }
      for (TokenId c : candidates) {
        const double lp = row[c];
        if (!h.tokens.empty() && c == h.tokens.back()) {
          {
            BeamHypothesis& s = step.same(h);
            s.p_nonblank = logaddexp(s.p_nonblank, h.p_nonblank + lp);
          }
          BeamHypothesis& e = step.extended(h, c);
          e.p_nonblank = logaddexp(e.p_nonblank, h.p_blank + lp);
        } else {
          BeamHypothesis& e = step.extended(h, c);
          e.p_nonblank = logaddexp(e.p_nonblank, total + lp);
        }
      }
    }

    auto& next = step.hyps();
    for (auto& h : next) score(h);
    order.resize(next.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (next[a].combined != next[b].combined) return next[a].combined > next[b].combined;
      return next[a].tokens < next[b].tokens;
    });
    const double floor = next[order.front()].combined + params.beam_prune_logp;
    beams.clear();
    for (std::size_t i : order) {
      if (beams.size() == params.beam_width) break;
      if (next[i].combined < floor) break;
      // Impossible prefixes (a repeat with no blank in between) carry no mass.
      if (next[i].combined == kNegInf && !beams.empty()) break;
      beams.push_back(std::move(next[i]));
    }
    if (observer) observer(t, beams);
  }

  std::vector<Transcript> out;
  out.reserve(beams.size());
  for (BeamHypothesis& h : beams) {
    step.close_word(h);
    score(h);
    Transcript tr;
    tr.text = render_text(h.tokens, vocab);
    tr.token_ids = std::move(h.tokens);
    tr.am_logp = h.am_logp();
    tr.lm_log10 = h.lm_log10;
    tr.combined_score = h.combined;
    out.push_back(std::move(tr));
  }
  std::sort(out.begin(), out.end(), [](const Transcript& a, const Transcript& b) {
    if (a.combined_score != b.combined_score) return a.combined_score > b.combined_score;
    if (a.text != b.text) return a.text < b.text;
    return a.token_ids < b.token_ids;
  });
  return out;
}

}  // namespace lga
