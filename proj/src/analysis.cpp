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

#include "lga/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "format.hpp"
#include "lga/error.hpp"
#include "lga/parallel.hpp"
#include "lga/projection.hpp"

namespace lga {
namespace {

void check_range(const ModelDump& dump, LayerRange layers) {
  if (layers.size() == 0) throw ArgumentError("empty layer range");
  if (layers.first < 1 || layers.last > dump.num_layers()) {
    throw ArgumentError("layer range " + std::to_string(layers.first) + ":" + std::to_string(layers.last) +
                        " outside 1:" + std::to_string(dump.num_layers()));
  }
}

// Running mean; exact for constant sequences.
class Mean {
 public:
  void add(double x) { mean_ += (x - mean_) / static_cast<double>(++n_); }
  double value() const { return mean_; }

 private:
  double mean_ = 0.0;
  std::size_t n_ = 0;
};

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

}  // namespace

LayerRange LayerRange::parse(const std::string& text) {
  auto to_size = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || s.front() == '-') throw ArgumentError("bad layer range '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    const auto v = to_size(text);
    return {v, v};
  }
  return {to_size(text.substr(0, colon)), to_size(text.substr(colon + 1))};
}

ConfidenceProfile confidence_profile(const ModelDump& dump, LayerRange layers, bool exclude_blank_frames,
                                     std::size_t workers) {
  check_range(dump, layers);
  const std::size_t steps = dump.seq_len();
  std::vector<bool> include(steps, true);
  if (exclude_blank_frames) {
    const LogitsMatrix top = project(dump, dump.num_layers());
    for (std::size_t t = 0; t < steps; ++t) {
      include[t] = static_cast<TokenId>(argmax(top.row(t))) != dump.vocab.blank_id;
    }
  }
  ConfidenceProfile profile;
  profile.frames = static_cast<std::size_t>(std::count(include.begin(), include.end(), true));
  if (profile.frames == 0) throw ArgumentError("no frames left after excluding blank frames");

  profile.per_layer.resize(layers.size());
  parallel_for(layers.size(), workers, [&](std::size_t i) {
    const std::size_t layer = layers.first + i;
    const LogitsMatrix logits = project(dump, layer);
    std::vector<double> maxima;
    maxima.reserve(profile.frames);
    Mean mean_max, mean_entropy;
    for (std::size_t t = 0; t < steps; ++t) {
      if (!include[t]) continue;
      const auto p = softmax(logits.row(t));
      double entropy = 0.0;
      for (double q : p) {
        if (q > 0.0) entropy -= q * std::log(q);
      }
      const double top = *std::max_element(p.begin(), p.end());
      maxima.push_back(top);
      mean_max.add(top);
      mean_entropy.add(std::max(entropy, 0.0));
    }
    profile.per_layer[i] = {layer, mean_max.value(), median(std::move(maxima)), mean_entropy.value()};
  });
  return profile;
}

TokenEvolutionTable token_evolution(const ModelDump& dump, LayerRange layers, std::size_t workers) {
  check_range(dump, layers);
  TokenEvolutionTable table;
  table.layers.resize(layers.size());
  table.grid.resize(layers.size());
  parallel_for(layers.size(), workers, [&](std::size_t i) {
    const std::size_t layer = layers.first + i;
    const LogitsMatrix logits = project(dump, layer);
    table.layers[i] = layer;
    auto& row = table.grid[i];
    row.resize(logits.rows);
    for (std::size_t t = 0; t < logits.rows; ++t) row[t] = static_cast<TokenId>(argmax(logits.row(t)));
  });
  return table;
}

AttentionMap average_attention(const ModelDump& dump, std::size_t layer) {
  if (!dump.attentions) throw ArgumentError("dump carries no attention maps");
  if (layer < 1 || layer > dump.num_layers()) {
    throw ArgumentError("attention layer " + std::to_string(layer) + " outside 1:" +
                        std::to_string(dump.num_layers()));
  }
  const std::size_t steps = dump.seq_len();
  const std::size_t heads = dump.num_heads();
  AttentionMap map;
  map.layer = layer;
  map.steps = steps;
  map.values.assign(steps * steps, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t q = 0; q < steps; ++q) {
      const auto row = dump.attention_row(layer, h, q);
      for (std::size_t k = 0; k < steps; ++k) map.values[q * steps + k] += row[k];
    }
  }
  for (double& v : map.values) v /= static_cast<double>(heads);
  return map;
}

double diagonality_score(const AttentionMap& map, std::size_t window) {
  const std::size_t steps = map.steps;
  if (steps == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t q = 0; q < steps; ++q) {
    const std::size_t lo = q > window ? q - window : 0;
    const std::size_t hi = std::min(steps - 1, q + window);
    double near = 0.0, total = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      total += map.at(q, k);
      if (k >= lo && k <= hi) near += map.at(q, k);
    }
    acc += total > 0.0 ? near / total : 0.0;
  }
  return acc / static_cast<double>(steps);
}

void write_confidence_csv(const ConfidenceProfile& profile, std::ostream& out) {
  out << "layer,mean_max_prob,median_max_prob,mean_entropy\n";
  for (const auto& row : profile.per_layer) {
    out << row.layer << ',' << detail::format_number(row.mean_max_prob) << ','
        << detail::format_number(row.median_max_prob) << ',' << detail::format_number(row.mean_entropy) << '\n';
  }
}

nlohmann::ordered_json token_grid_json(const TokenEvolutionTable& table, const Vocabulary& vocab) {
  nlohmann::ordered_json j;
  j["layers"] = table.layers;
  j["tokens"] = table.grid;
  auto symbols = nlohmann::ordered_json::array();
  for (const auto& row : table.grid) {
    auto line = nlohmann::ordered_json::array();
    for (TokenId id : row) line.push_back(vocab.token(id));
    symbols.push_back(std::move(line));
  }
  j["symbols"] = std::move(symbols);
  return j;
}

std::string render_token_grid(const TokenEvolutionTable& table, const Vocabulary& vocab) {
  std::ostringstream os;
  for (std::size_t i = 0; i < table.grid.size(); ++i) {
    os << table.layers[i] << '\t';
    for (std::size_t t = 0; t < table.grid[i].size(); ++t) os << (t ? " " : "") << vocab.token(table.grid[i][t]);
    os << '\n';
  }
  return os.str();
}

}  // namespace lga
