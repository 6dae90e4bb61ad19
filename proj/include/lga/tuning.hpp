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

// Exhaustive grid search over (beta, m[, alpha1, alpha2]) minimizing
// corpus-level WER of the top beam-search transcript.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lga/decoder.hpp"
#include "lga/lm.hpp"
#include "lga/metrics.hpp"
#include "lga/projection.hpp"
#include "lga/tensor_io.hpp"

namespace lga {

struct TuneGrid {
  std::vector<double> betas;
  std::vector<std::size_t> layer_counts;
  std::vector<double> alpha1s;  // empty: use DecodeParams::alpha1
  std::vector<double> alpha2s;  // empty: use DecodeParams::alpha2

  // Betas from 0.5 to 1 (dense around 0.75 to 0.9) and layer counts
  // {1, 2, 4, 12, 18, 24}, restricted to <= num_layers.
  static TuneGrid defaults(std::size_t num_layers);

  // Sorts and deduplicates every list.
  TuneGrid normalized() const;
  // Throws ArgumentError on empty lists, betas outside [0, 1], m outside 1..L.
  void validate(std::size_t num_layers) const;
  std::size_t size() const;
};

struct TunePoint {
  double beta = 1.0;
  std::size_t agg_layers = 1;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  bool operator==(const TunePoint&) const = default;
};

struct TuneRow {
  TunePoint params;
  ErrorRateReport word_errors;
  ErrorRateReport char_errors;

  double wer() const { return word_errors.rate; }
  double cer() const { return char_errors.rate; }
};

struct TuneResult {
  TunePoint best;
  std::vector<TuneRow> table;  // beta-major, then m, alpha1, alpha2
};

// Every dump must carry reference_text and share the vocabulary and layer
// count of the first. `lm` may be null.
TuneResult tune_grid(std::span<const ModelDump> dumps, const NGramLM* lm, const TuneGrid& grid,
                     const DecodeParams& params, AggregationNorm norm = AggregationNorm::kHiddenState,
                     std::size_t workers = 1);

// CSV: beta,m,alpha1,alpha2,wer,cer
void write_tune_csv(const TuneResult& result, std::ostream& out);

}  // namespace lga
