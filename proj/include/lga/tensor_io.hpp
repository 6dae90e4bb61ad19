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

// LGA1 model-dump container: per-layer hidden states, optional attention
// maps, the CTC projection head and its vocabulary for one utterance.
//
// Layout (all integers little-endian):
//   bytes 0-3   "LGA1"
//   bytes 4-7   u32 header_len
//   bytes 8..   UTF-8 JSON header (header_len bytes)
//   payload     f32 row-major tensor sections at 64-byte aligned offsets
//               relative to the payload start

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lga {

using TokenId = std::int32_t;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kPayloadAlignment = 64;

// Dense f32 tensor, row-major. Equality is bitwise on the payload.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  Tensor(std::vector<std::size_t> dims, std::vector<float> values);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  bool operator==(const Tensor& other) const;
};

struct DumpMeta {
  std::uint32_t format_version = kFormatVersion;
  std::string model_name;
  std::size_t num_layers = 0;  // L, transformer layers
  std::size_t seq_len = 0;     // T
  std::size_t hidden_dim = 0;  // d
  std::string sample_id;
  std::optional<std::string> reference_text;

  bool operator==(const DumpMeta&) const = default;
};

struct Vocabulary {
  std::vector<std::string> tokens;
  TokenId blank_id = 0;
  TokenId word_delimiter_id = 1;
  std::optional<TokenId> unk_id;

  std::size_t size() const { return tokens.size(); }
  const std::string& token(TokenId id) const { return tokens.at(static_cast<std::size_t>(id)); }
  // Throws InvariantError on duplicate tokens or out-of-range ids.
  void validate() const;

  bool operator==(const Vocabulary&) const = default;
};

// lm_head: logits = weight * h + bias.
struct ProjectionHead {
  Tensor weight;  // [C, d]
  Tensor bias;    // [C]

  std::size_t num_classes() const { return weight.rank() == 2 ? weight.shape[0] : 0; }
  std::size_t input_dim() const { return weight.rank() == 2 ? weight.shape[1] : 0; }
  std::span<const float> row(std::size_t c) const;

  bool operator==(const ProjectionHead&) const = default;
};

struct ModelDump {
  DumpMeta meta;
  Tensor hidden_states;              // [L+1, T, d]; layer 0 is the encoder input
  std::optional<Tensor> attentions;  // [L, heads, T, T], post-softmax
  ProjectionHead head;
  Vocabulary vocab;

  std::size_t num_layers() const { return meta.num_layers; }
  std::size_t seq_len() const { return meta.seq_len; }
  std::size_t hidden_dim() const { return meta.hidden_dim; }
  std::size_t num_classes() const { return vocab.size(); }
  std::size_t num_heads() const { return attentions ? attentions->shape.at(1) : 0; }

  // Hidden state of `layer` (0..L) at timestep t.
  std::span<const float> hidden(std::size_t layer, std::size_t t) const;
  // Attention row attentions[layer-1][head][query]; layer is 1-based.
  std::span<const float> attention_row(std::size_t layer, std::size_t head, std::size_t query) const;

  // Checks every container invariant; throws InvariantError.
  void validate() const;

  bool operator==(const ModelDump&) const = default;
};

// Serializes `dump` to `sink` and returns the number of bytes written.
std::size_t write_dump(const ModelDump& dump, std::ostream& sink);
ModelDump read_dump(std::istream& source);

std::string encode_dump(const ModelDump& dump);
ModelDump decode_dump(std::string_view bytes);

ModelDump load_dump(const std::filesystem::path& path);
void save_dump(const ModelDump& dump, const std::filesystem::path& path);

// All *.lga files in `dir`, sorted by filename.
std::vector<std::filesystem::path> list_dumps(const std::filesystem::path& dir);

}  // namespace lga
