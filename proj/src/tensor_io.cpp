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

#include "lga/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lga/error.hpp"

namespace lga {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr char kMagic[4] = {'L', 'G', 'A', '1'};
constexpr double kRowSumTolerance = 1e-4;

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

void expect_shape(const Tensor& t, const std::vector<std::size_t>& expected, std::string_view name) {
  if (t.shape != expected) {
    throw InvariantError(std::string(name) + " has shape " + shape_string(t.shape) + ", expected " +
                         shape_string(expected));
  }
  if (t.data.size() != t.numel()) {
    throw InvariantError(std::string(name) + " payload size does not match its shape");
  }
}

void expect_finite(const Tensor& t, std::string_view name) {
  auto bad = std::find_if(t.data.begin(), t.data.end(), [](float v) { return !std::isfinite(v); });
  if (bad != t.data.end()) {
    throw InvariantError(std::string(name) + " contains NaN/Inf at flat index " +
                         std::to_string(std::distance(t.data.begin(), bad)));
  }
}

std::size_t align_up(std::size_t n) {
  return (n + kPayloadAlignment - 1) / kPayloadAlignment * kPayloadAlignment;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  return v;
}

void append_f32(std::string& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * sizeof(float));
  char* dst = out.data() + start;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, values.data(), values.size() * sizeof(float));
  } else {
    for (float v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) *dst++ = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    }
  }
}

std::vector<float> read_f32(std::string_view bytes) {
  std::vector<float> out(bytes.size() / sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<float>(get_u32(bytes, i * 4));
    }
  }
  return out;
}

struct NamedTensor {
  const char* name;
  const Tensor* tensor;
};

std::vector<NamedTensor> tensor_sections(const ModelDump& dump) {
  std::vector<NamedTensor> out{{"hidden_states", &dump.hidden_states}};
  if (dump.attentions) out.push_back({"attentions", &*dump.attentions});
  out.push_back({"head_weight", &dump.head.weight});
  out.push_back({"head_bias", &dump.head.bias});
  return out;
}

ordered_json meta_to_json(const DumpMeta& m) {
  ordered_json j;
  j["format_version"] = m.format_version;
  j["model_name"] = m.model_name;
  j["num_layers"] = m.num_layers;
  j["seq_len"] = m.seq_len;
  j["hidden_dim"] = m.hidden_dim;
  j["sample_id"] = m.sample_id;
  j["reference_text"] = m.reference_text ? ordered_json(*m.reference_text) : ordered_json(nullptr);
  return j;
}

DumpMeta meta_from_json(const json& j) {
  DumpMeta m;
  m.format_version = j.at("format_version").get<std::uint32_t>();
  m.model_name = j.at("model_name").get<std::string>();
  m.num_layers = j.at("num_layers").get<std::size_t>();
  m.seq_len = j.at("seq_len").get<std::size_t>();
  m.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  m.sample_id = j.at("sample_id").get<std::string>();
  if (auto it = j.find("reference_text"); it != j.end() && !it->is_null()) {
    m.reference_text = it->get<std::string>();
  }
  return m;
}

ordered_json vocab_to_json(const Vocabulary& v) {
  ordered_json j;
  j["tokens"] = v.tokens;
  j["blank_id"] = v.blank_id;
  j["word_delimiter_id"] = v.word_delimiter_id;
  j["unk_id"] = v.unk_id ? ordered_json(*v.unk_id) : ordered_json(nullptr);
  return j;
}

Vocabulary vocab_from_json(const json& j) {
  Vocabulary v;
  v.tokens = j.at("tokens").get<std::vector<std::string>>();
  v.blank_id = j.at("blank_id").get<TokenId>();
  v.word_delimiter_id = j.at("word_delimiter_id").get<TokenId>();
  if (auto it = j.find("unk_id"); it != j.end() && !it->is_null()) v.unk_id = it->get<TokenId>();
  return v;
}

ModelDump decode_impl(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not an LGA1 container");
  }
  if (bytes.size() < 8) throw FormatError("truncated: missing header length");
  const std::size_t header_len = get_u32(bytes, 4);
  if (header_len > bytes.size() - 8) {
    throw FormatError("truncated: header_len " + std::to_string(header_len) + " exceeds stream size");
  }
  const std::string_view payload = bytes.substr(8 + header_len);

  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON header: ") + e.what());
  }

  ModelDump dump;
  try {
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported format_version " + std::to_string(version));
    }
    dump.meta = meta_from_json(header.at("meta"));
    if (dump.meta.format_version != kFormatVersion) {
      throw FormatError("unsupported meta.format_version " + std::to_string(dump.meta.format_version));
    }
    dump.vocab = vocab_from_json(header.at("vocab"));

    std::set<std::string> seen;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      if (!seen.insert(name).second) throw FormatError("duplicate tensor '" + name + "'");
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw FormatError("tensor '" + name + "' has unsupported dtype");
      }
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto byte_len = entry.at("byte_len").get<std::size_t>();
      const std::size_t numel =
          std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
      if (byte_len != numel * sizeof(float)) {
        throw FormatError("tensor '" + name + "' byte_len " + std::to_string(byte_len) +
                          " disagrees with shape " + shape_string(shape));
      }
      if (offset % kPayloadAlignment != 0) {
        throw FormatError("tensor '" + name + "' offset is not 64-byte aligned");
      }
      if (offset > payload.size() || byte_len > payload.size() - offset) {
        throw FormatError("truncated: tensor '" + name + "' extends beyond end of stream");
      }
      Tensor t(std::move(shape), read_f32(payload.substr(offset, byte_len)));
      if (name == "hidden_states") {
        dump.hidden_states = std::move(t);
      } else if (name == "attentions") {
        dump.attentions = std::move(t);
      } else if (name == "head_weight") {
        dump.head.weight = std::move(t);
      } else if (name == "head_bias") {
        dump.head.bias = std::move(t);
      } else {
        throw FormatError("unknown tensor '" + name + "'");
      }
    }
    for (const char* required : {"hidden_states", "head_weight", "head_bias"}) {
      if (!seen.count(required)) throw FormatError(std::string("missing tensor '") + required + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON header: ") + e.what());
  }

  dump.validate();
  return dump;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)), data(numel(), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> values)
    : shape(std::move(dims)), data(std::move(values)) {}

std::size_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

bool Tensor::operator==(const Tensor& other) const {
  return shape == other.shape && data.size() == other.data.size() &&
         (data.empty() || std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0);
}

void Vocabulary::validate() const {
  const auto c = static_cast<TokenId>(tokens.size());
  if (tokens.empty()) throw InvariantError("vocabulary is empty");
  std::unordered_set<std::string_view> unique(tokens.begin(), tokens.end());
  if (unique.size() != tokens.size()) throw InvariantError("vocabulary tokens are not unique");
  auto check = [c](TokenId id, const char* what) {
    if (id < 0 || id >= c) throw InvariantError(std::string(what) + " out of range");
  };
  check(blank_id, "blank_id");
  check(word_delimiter_id, "word_delimiter_id");
  if (unk_id) check(*unk_id, "unk_id");
  if (blank_id == word_delimiter_id) throw InvariantError("blank_id equals word_delimiter_id");
}

std::span<const float> ProjectionHead::row(std::size_t c) const {
  const std::size_t d = input_dim();
  return std::span<const float>(weight.data).subspan(c * d, d);
}

std::span<const float> ModelDump::hidden(std::size_t layer, std::size_t t) const {
  const std::size_t d = hidden_dim();
  return std::span<const float>(hidden_states.data).subspan((layer * seq_len() + t) * d, d);
}

std::span<const float> ModelDump::attention_row(std::size_t layer, std::size_t head,
                                                std::size_t query) const {
  const std::size_t steps = seq_len();
  const std::size_t offset = (((layer - 1) * num_heads() + head) * steps + query) * steps;
  return std::span<const float>(attentions->data).subspan(offset, steps);
}

void ModelDump::validate() const {
  if (meta.num_layers < 1) throw InvariantError("num_layers must be >= 1");
  if (meta.seq_len < 1) throw InvariantError("seq_len must be >= 1");
  if (meta.hidden_dim < 1) throw InvariantError("hidden_dim must be >= 1");
  vocab.validate();

  const std::size_t layers = meta.num_layers;
  const std::size_t steps = meta.seq_len;
  const std::size_t dim = meta.hidden_dim;
  const std::size_t classes = vocab.size();

  expect_shape(hidden_states, {layers + 1, steps, dim}, "hidden_states");
  expect_shape(head.weight, {classes, dim}, "head_weight");
  expect_shape(head.bias, {classes}, "head_bias");
  expect_finite(hidden_states, "hidden_states");
  expect_finite(head.weight, "head_weight");
  expect_finite(head.bias, "head_bias");

  if (attentions) {
    if (attentions->rank() != 4 || attentions->shape[1] < 1) {
      throw InvariantError("attentions has shape " + shape_string(attentions->shape) +
                           ", expected [L, heads, T, T]");
    }
    expect_shape(*attentions, {layers, attentions->shape[1], steps, steps}, "attentions");
    const auto& a = attentions->data;
    for (std::size_t r = 0; r * steps < a.size(); ++r) {
      double sum = 0.0;
      for (std::size_t k = 0; k < steps; ++k) {
        const float v = a[r * steps + k];
        if (!(v >= 0.0f && v <= 1.0f)) {
          throw InvariantError("attention weight outside [0, 1] in row " + std::to_string(r));
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw InvariantError("attention row " + std::to_string(r) + " sums to " + std::to_string(sum));
      }
    }
  }
}

std::string encode_dump(const ModelDump& dump) {
  dump.validate();

  const auto sections = tensor_sections(dump);
  ordered_json tensors = ordered_json::array();
  std::size_t offset = 0;
  for (const auto& s : sections) {
    const std::size_t byte_len = s.tensor->data.size() * sizeof(float);
    tensors.push_back({{"name", s.name},
                       {"dtype", "f32"},
                       {"shape", s.tensor->shape},
                       {"offset", offset},
                       {"byte_len", byte_len}});
    offset = align_up(offset + byte_len);
  }

  ordered_json header;
  header["format_version"] = kFormatVersion;
  header["meta"] = meta_to_json(dump.meta);
  header["vocab"] = vocab_to_json(dump.vocab);
  header["tensors"] = std::move(tensors);

  std::string header_text = header.dump();
  // Space padding keeps the payload start 64-byte aligned in the file.
  header_text.append(align_up(8 + header_text.size()) - 8 - header_text.size(), ' ');

  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  const std::size_t payload_start = out.size();
  for (const auto& s : sections) {
    out.resize(payload_start + align_up(out.size() - payload_start), '\0');
    append_f32(out, s.tensor->data);
  }
  return out;
}

ModelDump decode_dump(std::string_view bytes) { return decode_impl(bytes); }

std::size_t write_dump(const ModelDump& dump, std::ostream& sink) {
  const std::string bytes = encode_dump(dump);
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw IoError("failed to write LGA1 container");
  return bytes.size();
}

ModelDump read_dump(std::istream& source) {
  std::string bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  if (source.bad()) throw IoError("failed to read LGA1 container");
  return decode_impl(bytes);
}

ModelDump load_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dump '" + path.string() + "'");
  try {
    return read_dump(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(path.string() + ": " + e.what());
  }
}

void save_dump(const ModelDump& dump, const std::filesystem::path& path) {
  const std::string bytes = encode_dump(dump);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create dump '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write dump '" + path.string() + "'");
}

std::vector<std::filesystem::path> list_dumps(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("not a directory: '" + dir.string() + "'");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lga") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return out;
}

}  // namespace lga
