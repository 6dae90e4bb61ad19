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

// Hand-built dumps for tests. Heads are identity-like so that logits are
// readable straight from the hidden states.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "lga/tensor_io.hpp"

namespace lga::testing {

// blank "<pad>", delimiter "|", then one token per letter.
inline Vocabulary letter_vocab(const std::string& letters) {
  Vocabulary v;
  v.tokens = {"<pad>", "|"};
  for (char c : letters) v.tokens.emplace_back(1, c);
  v.blank_id = 0;
  v.word_delimiter_id = 1;
  return v;
}

inline Vocabulary numbered_vocab(std::size_t classes) {
  Vocabulary v;
  for (std::size_t c = 0; c < classes; ++c) v.tokens.push_back("t" + std::to_string(c));
  v.blank_id = 0;
  v.word_delimiter_id = classes > 1 ? 1 : 0;
  return v;
}

// Zero hidden states, identity head of size C x C (d = C).
inline ModelDump blank_dump(std::size_t layers, std::size_t steps, Vocabulary vocab, float head_scale = 1.0f) {
  const std::size_t classes = vocab.size();
  ModelDump d;
  d.meta.model_name = "fixture";
  d.meta.num_layers = layers;
  d.meta.seq_len = steps;
  d.meta.hidden_dim = classes;
  d.meta.sample_id = "fixture";
  d.vocab = std::move(vocab);
  d.hidden_states = Tensor({layers + 1, steps, classes});
  d.head.weight = Tensor({classes, classes});
  for (std::size_t c = 0; c < classes; ++c) d.head.weight.data[c * classes + c] = head_scale;
  d.head.bias = Tensor({classes});
  return d;
}

inline float* hidden_at(ModelDump& d, std::size_t layer, std::size_t t) {
  return d.hidden_states.data.data() + (layer * d.seq_len() + t) * d.hidden_dim();
}

inline void set_hidden(ModelDump& d, std::size_t layer, std::size_t t, const std::vector<float>& h) {
  std::copy(h.begin(), h.end(), hidden_at(d, layer, t));
}

// Uniform-random dump with a random head and optional random attentions.
inline ModelDump random_dump(std::mt19937& rng, std::size_t layers, std::size_t steps, std::size_t dim,
                             std::size_t classes, bool with_attention, std::size_t heads = 2) {
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  ModelDump d;
  d.meta.model_name = "random";
  d.meta.num_layers = layers;
  d.meta.seq_len = steps;
  d.meta.hidden_dim = dim;
  d.meta.sample_id = "rand-" + std::to_string(rng() % 100000);
  d.vocab = numbered_vocab(classes);
  d.hidden_states = Tensor({layers + 1, steps, dim});
  for (float& v : d.hidden_states.data) v = u(rng);
  d.head.weight = Tensor({classes, dim});
  for (float& v : d.head.weight.data) v = u(rng);
  d.head.bias = Tensor({classes});
  for (float& v : d.head.bias.data) v = u(rng);
  if (with_attention) {
    Tensor a({layers, heads, steps, steps});
    std::uniform_real_distribution<float> pos(0.01f, 1.0f);
    for (std::size_t r = 0; r < layers * heads * steps; ++r) {
      float sum = 0.0f;
      for (std::size_t k = 0; k < steps; ++k) sum += (a.data[r * steps + k] = pos(rng));
      for (std::size_t k = 0; k < steps; ++k) a.data[r * steps + k] /= sum;
    }
    d.attentions = std::move(a);
  }
  return d;
}

}  // namespace lga::testing
