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

// Prediction paths from a model dump to per-frame scores:
//
//   baseline     lm_head(H_L)
//   aggregated   sum_{n=L-m+1..L} lm_head(H_n / ||H_n||_2)
//   interpolated beta * baseline + (1 - beta) * aggregated
//
// All arithmetic is carried in double regardless of the f32 dump payload.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lga/tensor_io.hpp"

namespace lga {

enum class Provenance {
  kBaseline,
  kIntermediate,  // projection of a layer below the top one
  kAggregated,
  kInterpolated,
  kTemperatureScaled,
};

std::string_view to_string(Provenance p);

// Where the L2 normalization is applied during aggregation. kHiddenState is
// the default method; kLogits normalizes each projected logit vector
// instead and exists for comparison.
enum class AggregationNorm { kHiddenState, kLogits };

// Hidden-state vectors with a norm below this are summed unnormalized.
inline constexpr double kZeroNormEpsilon = 1e-12;

namespace detail {
// Row-major [rows x cols] of doubles.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values).subspan(t * cols, cols);
  }
  std::span<double> row(std::size_t t) { return std::span<double>(values).subspan(t * cols, cols); }
  double& at(std::size_t t, std::size_t c) { return values[t * cols + c]; }
  double at(std::size_t t, std::size_t c) const { return values[t * cols + c]; }
};
}  // namespace detail

// Pre-softmax scores, [T x C].
struct LogitsMatrix : detail::RowMatrix {
  Provenance provenance = Provenance::kBaseline;
  std::optional<double> beta;
  std::optional<std::size_t> agg_layers;

  using RowMatrix::RowMatrix;
};

// Natural-log probabilities, [T x C]; every row log-sum-exps to zero.
struct LogProbsMatrix : detail::RowMatrix {
  using RowMatrix::RowMatrix;
};

// Logits of transformer layer `layer` (0..L). Throws ArgumentError.
LogitsMatrix project(const ModelDump& dump, std::size_t layer);

// Sum of head(H_n / ||H_n||) over the top m transformer layers (1 <= m <= L).
LogitsMatrix aggregate_logits(const ModelDump& dump, std::size_t m,
                              AggregationNorm norm = AggregationNorm::kHiddenState);

LogitsMatrix interpolate(const LogitsMatrix& base, const LogitsMatrix& agg, double beta);

LogitsMatrix temperature_scale(const LogitsMatrix& logits, double tau);

LogProbsMatrix log_softmax(const LogitsMatrix& logits);

// Probabilities of one row, max-subtracted.
std::vector<double> softmax(std::span<const double> row);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

struct PredictionConfig {
  double beta = 1.0;
  std::size_t agg_layers = 1;
  AggregationNorm norm = AggregationNorm::kHiddenState;
};

// log_softmax(interpolate(project(dump, L), aggregate_logits(dump, m), beta)).
LogProbsMatrix predict_log_probs(const ModelDump& dump, const PredictionConfig& config);

}  // namespace lga
