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

#include "lga/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lga/error.hpp"

namespace lga {
namespace {

void project_into(const ProjectionHead& head, std::span<const float> h, double scale,
                  std::span<double> out) {
  const std::size_t classes = head.num_classes();
  for (std::size_t c = 0; c < classes; ++c) {
    const auto w = head.row(c);
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) acc += static_cast<double>(w[k]) * h[k];
    out[c] = acc * scale + head.bias.data[c];
  }
}

double l2_norm(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  return std::sqrt(sq);
}

double l2_norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

void check_finite(const detail::RowMatrix& m, std::string_view what) {
  if (!std::all_of(m.values.begin(), m.values.end(), [](double v) { return std::isfinite(v); })) {
    throw InvariantError(std::string(what) + " produced non-finite values");
  }
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kBaseline: return "baseline";
    case Provenance::kIntermediate: return "intermediate";
    case Provenance::kAggregated: return "aggregated";
    case Provenance::kInterpolated: return "interpolated";
    case Provenance::kTemperatureScaled: return "temperature_scaled";
  }
  return "unknown";
}

LogitsMatrix project(const ModelDump& dump, std::size_t layer) {
  if (layer > dump.num_layers()) {
    throw ArgumentError("layer " + std::to_string(layer) + " out of range 0.." +
                        std::to_string(dump.num_layers()));
  }
  LogitsMatrix out(dump.seq_len(), dump.num_classes());
  for (std::size_t t = 0; t < out.rows; ++t) project_into(dump.head, dump.hidden(layer, t), 1.0, out.row(t));
  out.provenance = layer == dump.num_layers() ? Provenance::kBaseline : Provenance::kIntermediate;
  return out;
}

LogitsMatrix aggregate_logits(const ModelDump& dump, std::size_t m, AggregationNorm norm) {
  const std::size_t top = dump.num_layers();
  if (m < 1 || m > top) {
    throw ArgumentError("aggregated layer count " + std::to_string(m) + " out of range 1.." +
                        std::to_string(top));
  }
  const std::size_t classes = dump.num_classes();
  LogitsMatrix out(dump.seq_len(), classes);
  std::vector<double> layer_logits(classes);
  for (std::size_t t = 0; t < out.rows; ++t) {
    auto acc = out.row(t);
    for (std::size_t n = top - m + 1; n <= top; ++n) {
      const auto h = dump.hidden(n, t);
      if (norm == AggregationNorm::kHiddenState) {
        const double len = l2_norm(h);
        project_into(dump.head, h, len < kZeroNormEpsilon ? 1.0 : 1.0 / len, layer_logits);
      } else {
        project_into(dump.head, h, 1.0, layer_logits);
        const double len = l2_norm(std::span<const double>(layer_logits));
        if (len >= kZeroNormEpsilon) {
          for (double& v : layer_logits) v /= len;
        }
      }
      for (std::size_t c = 0; c < classes; ++c) acc[c] += layer_logits[c];
    }
  }
  out.provenance = Provenance::kAggregated;
  out.agg_layers = m;
  return out;
}

LogitsMatrix interpolate(const LogitsMatrix& base, const LogitsMatrix& agg, double beta) {
  if (base.rows != agg.rows || base.cols != agg.cols) throw ArgumentError("interpolate: shape mismatch");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
  if (base.provenance != Provenance::kBaseline) throw ArgumentError("interpolate: base is not baseline logits");
  if (agg.provenance != Provenance::kAggregated) throw ArgumentError("interpolate: agg is not aggregated logits");

  LogitsMatrix out(base.rows, base.cols);
  if (beta == 1.0) {
    out.values = base.values;
  } else if (beta == 0.0) {
    out.values = agg.values;
  } else {
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = beta * base.values[i] + (1.0 - beta) * agg.values[i];
    }
  }
  out.provenance = Provenance::kInterpolated;
  out.beta = beta;
  out.agg_layers = agg.agg_layers;
  return out;
}

LogitsMatrix temperature_scale(const LogitsMatrix& logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("temperature must be positive and finite");
  LogitsMatrix out = logits;
  if (tau != 1.0) {
    for (double& v : out.values) v /= tau;
  }
  check_finite(out, "temperature_scale");
  out.provenance = Provenance::kTemperatureScaled;
  return out;
}

LogProbsMatrix log_softmax(const LogitsMatrix& logits) {
  LogProbsMatrix out(logits.rows, logits.cols);
  for (std::size_t t = 0; t < logits.rows; ++t) {
    const auto in = logits.row(t);
    const double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - peak);
    // Subtracting the peak first keeps large logits from losing precision.
    const double log_sum = std::log(sum);
    auto dst = out.row(t);
    for (std::size_t c = 0; c < in.size(); ++c) dst[c] = (in[c] - peak) - log_sum;
  }
  return out;
}

std::vector<double> softmax(std::span<const double> row) {
  std::vector<double> p(row.begin(), row.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) sum += (v = std::exp(v - peak));
  for (double& v : p) v /= sum;
  return p;
}

std::size_t argmax(std::span<const double> row) {
  // max_element returns the first maximal element.
  return static_cast<std::size_t>(std::distance(row.begin(), std::max_element(row.begin(), row.end())));
}

LogProbsMatrix predict_log_probs(const ModelDump& dump, const PredictionConfig& config) {
  const LogitsMatrix base = project(dump, dump.num_layers());
  const LogitsMatrix agg = aggregate_logits(dump, config.agg_layers, config.norm);
  return log_softmax(interpolate(base, agg, config.beta));
}

}  // namespace lga
