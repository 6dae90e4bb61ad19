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

#include "lga/tuning.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>

#include "format.hpp"
#include "lga/error.hpp"
#include "lga/parallel.hpp"

namespace lga {
namespace {

template <class T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Lower is better: WER, CER, beta, m, alpha1, alpha2.
auto rank_key(const TuneRow& row) {
  return std::make_tuple(row.wer(), row.cer(), row.params.beta, row.params.agg_layers, row.params.alpha1,
                         row.params.alpha2);
}

}  // namespace

TuneGrid TuneGrid::defaults(std::size_t num_layers) {
  TuneGrid grid;
  grid.betas = {0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  for (std::size_t m : {1, 2, 4, 12, 18, 24}) {
    if (m <= num_layers) grid.layer_counts.push_back(m);
  }
  return grid;
}

TuneGrid TuneGrid::normalized() const {
  TuneGrid g = *this;
  sort_unique(g.betas);
  sort_unique(g.layer_counts);
  sort_unique(g.alpha1s);
  sort_unique(g.alpha2s);
  return g;
}

void TuneGrid::validate(std::size_t num_layers) const {
  if (betas.empty() || layer_counts.empty()) throw ArgumentError("tune grid needs betas and layer counts");
  for (double b : betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw ArgumentError("tune grid beta outside [0, 1]");
  }
  for (std::size_t m : layer_counts) {
    if (m < 1 || m > num_layers) {
      throw ArgumentError("tune grid layer count " + std::to_string(m) + " outside 1.." +
                          std::to_string(num_layers));
    }
  }
  if (!std::is_sorted(betas.begin(), betas.end()) || !std::is_sorted(layer_counts.begin(), layer_counts.end()) ||
      !std::is_sorted(alpha1s.begin(), alpha1s.end()) || !std::is_sorted(alpha2s.begin(), alpha2s.end())) {
    throw ArgumentError("tune grid lists must be sorted");
  }
}

std::size_t TuneGrid::size() const {
  return betas.size() * layer_counts.size() * std::max<std::size_t>(alpha1s.size(), 1) *
         std::max<std::size_t>(alpha2s.size(), 1);
}

TuneResult tune_grid(std::span<const ModelDump> dumps, const NGramLM* lm, const TuneGrid& grid,
                     const DecodeParams& params, AggregationNorm norm, std::size_t workers) {
  if (dumps.empty()) throw ArgumentError("tune_grid: no utterances");
  const ModelDump& first = dumps.front();
  for (const auto& d : dumps) {
    if (!d.meta.reference_text) throw ArgumentError("tune_grid: dump '" + d.meta.sample_id + "' has no reference");
    if (!(d.vocab == first.vocab)) throw ArgumentError("tune_grid: inconsistent vocabularies");
    if (d.num_layers() != first.num_layers()) throw ArgumentError("tune_grid: inconsistent layer counts");
  }
  grid.validate(first.num_layers());
  params.validate();

  const std::vector<double> alpha1s = grid.alpha1s.empty() ? std::vector<double>{params.alpha1} : grid.alpha1s;
  const std::vector<double> alpha2s = grid.alpha2s.empty() ? std::vector<double>{params.alpha2} : grid.alpha2s;

  std::vector<TunePoint> points;
  for (double beta : grid.betas) {
    for (std::size_t m : grid.layer_counts) {
      for (double a1 : alpha1s) {
        for (double a2 : alpha2s) points.push_back({beta, m, a1, a2});
      }
    }
  }

  // Logits per utterance: baseline plus one aggregate per layer count.
  const std::size_t n_utt = dumps.size();
  const std::size_t n_m = grid.layer_counts.size();
  std::vector<LogitsMatrix> base(n_utt);
  std::vector<LogitsMatrix> agg(n_utt * n_m);
  parallel_for(n_utt, workers, [&](std::size_t u) {
    base[u] = project(dumps[u], dumps[u].num_layers());
    for (std::size_t k = 0; k < n_m; ++k) agg[u * n_m + k] = aggregate_logits(dumps[u], grid.layer_counts[k], norm);
  });
  auto m_slot = [&](std::size_t m) {
    return static_cast<std::size_t>(std::lower_bound(grid.layer_counts.begin(), grid.layer_counts.end(), m) -
                                    grid.layer_counts.begin());
  };

  struct Cell {
    ErrorRateReport words, chars;
  };
  std::vector<Cell> cells(points.size() * n_utt);
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    const TunePoint& p = points[i / n_utt];
    const std::size_t u = i % n_utt;
    DecodeParams decode = params;
    decode.alpha1 = p.alpha1;
    decode.alpha2 = p.alpha2;
    const auto logprobs = log_softmax(interpolate(base[u], agg[u * n_m + m_slot(p.agg_layers)], p.beta));
    const auto nbest = beam_search_decode(logprobs, dumps[u].vocab, lm, decode);
    const std::string hyp = nbest.empty() ? std::string() : nbest.front().text;
    const std::string& ref = *dumps[u].meta.reference_text;
    cells[i] = {wer(ref, hyp), cer(ref, hyp)};
  });

  TuneResult result;
  result.table.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    TuneRow row;
    row.params = points[p];
    for (std::size_t u = 0; u < n_utt; ++u) {
      row.word_errors += cells[p * n_utt + u].words;
      row.char_errors += cells[p * n_utt + u].chars;
    }
    result.table.push_back(row);
  }
  const auto best = std::min_element(result.table.begin(), result.table.end(),
                                     [](const TuneRow& a, const TuneRow& b) { return rank_key(a) < rank_key(b); });
  result.best = best->params;
  return result;
}

void write_tune_csv(const TuneResult& result, std::ostream& out) {
  using detail::format_number;
  out << "beta,m,alpha1,alpha2,wer,cer\n";
  for (const auto& row : result.table) {
    out << format_number(row.params.beta) << ',' << row.params.agg_layers << ',' << format_number(row.params.alpha1)
        << ',' << format_number(row.params.alpha2) << ',' << format_number(row.wer()) << ','
        << format_number(row.cer()) << '\n';
  }
}

}  // namespace lga
