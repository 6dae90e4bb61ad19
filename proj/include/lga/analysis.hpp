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

// Layer-wise diagnostics over a model dump: how confident each transformer
// layer's projected prediction is, which token each layer would pick, and
// how local the head-averaged self-attention is.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "lga/tensor_io.hpp"

namespace lga {

// Inclusive range of 1-based transformer layers.
struct LayerRange {
  std::size_t first = 1;
  std::size_t last = 1;

  static LayerRange all(const ModelDump& dump) { return {1, dump.num_layers()}; }
  // "a:b" or a single layer "a".
  static LayerRange parse(const std::string& text);
  std::size_t size() const { return last >= first ? last - first + 1 : 0; }
};

struct LayerConfidence {
  std::size_t layer = 0;
  double mean_max_prob = 0.0;
  double median_max_prob = 0.0;
  double mean_entropy = 0.0;  // nats
};

struct ConfidenceProfile {
  std::vector<LayerConfidence> per_layer;
  std::size_t frames = 0;  // timesteps included in the statistics
};

// Softmax of project(dump, l) for each layer in range. With
// exclude_blank_frames, timesteps whose top-layer argmax is blank are left
// out. `workers` > 1 evaluates layers in parallel.
ConfidenceProfile confidence_profile(const ModelDump& dump, LayerRange layers,
                                     bool exclude_blank_frames = false, std::size_t workers = 1);

struct TokenEvolutionTable {
  std::vector<std::size_t> layers;
  std::vector<std::vector<TokenId>> grid;  // [layers x T]
};

TokenEvolutionTable token_evolution(const ModelDump& dump, LayerRange layers, std::size_t workers = 1);

struct AttentionMap {
  std::size_t layer = 0;
  std::size_t steps = 0;
  std::vector<double> values;  // [T x T]

  double at(std::size_t q, std::size_t k) const { return values[q * steps + k]; }
};

// Mean over heads of attentions[layer]. Throws ArgumentError when the dump
// carries no attentions.
AttentionMap average_attention(const ModelDump& dump, std::size_t layer);

// Mean over rows of the row mass within +-window of the diagonal.
double diagonality_score(const AttentionMap& map, std::size_t window);

// CSV: layer,mean_max_prob,median_max_prob,mean_entropy
void write_confidence_csv(const ConfidenceProfile& profile, std::ostream& out);
// {"layers": [...], "tokens": [[...]], "symbols": [[...]]}
nlohmann::ordered_json token_grid_json(const TokenEvolutionTable& table, const Vocabulary& vocab);
// One line per layer: "<layer>\t<tok> <tok> ...".
std::string render_token_grid(const TokenEvolutionTable& table, const Vocabulary& vocab);

}  // namespace lga
