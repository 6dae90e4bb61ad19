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

// Python bindings. Tensors cross the boundary as NumPy arrays (copied).

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "lga/analysis.hpp"
#include "lga/decoder.hpp"
#include "lga/error.hpp"
#include "lga/lm.hpp"
#include "lga/metrics.hpp"
#include "lga/projection.hpp"
#include "lga/tensor_io.hpp"
#include "lga/tuning.hpp"

namespace py = pybind11;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const lga::Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape.begin(), t.shape.end()));
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

lga::Tensor from_numpy(const F32Array& a) {
  lga::Tensor t;
  t.shape.assign(a.shape(), a.shape() + a.ndim());
  t.data.assign(a.data(), a.data() + a.size());
  return t;
}

py::array_t<double> to_numpy(const lga::detail::RowMatrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

template <class Matrix>
Matrix matrix_from_numpy(const F64Array& a) {
  if (a.ndim() != 2) throw lga::ArgumentError("expected a 2-D array of shape [T, C]");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values.begin());
  return m;
}

lga::AggregationNorm parse_norm(const std::string& name) {
  if (name == "hidden") return lga::AggregationNorm::kHiddenState;
  if (name == "logits") return lga::AggregationNorm::kLogits;
  throw lga::ArgumentError("normalize must be 'hidden' or 'logits'");
}

py::dict transcript_dict(const lga::Transcript& tr) {
  py::dict d;
  d["text"] = tr.text;
  d["token_ids"] = tr.token_ids;
  d["am_logp"] = tr.am_logp;
  d["lm_log10"] = tr.lm_log10;
  d["combined_score"] = tr.combined_score;
  return d;
}

py::dict report_dict(const lga::ErrorRateReport& r) {
  py::dict d;
  d["rate"] = r.rate;
  d["substitutions"] = r.substitutions;
  d["insertions"] = r.insertions;
  d["deletions"] = r.deletions;
  d["reference_len"] = r.reference_len;
  return d;
}

lga::DecodeParams decode_params(std::size_t beam_width, double alpha1, double alpha2, double token_min_logp,
                                double beam_prune_logp, std::size_t max_candidates) {
  lga::DecodeParams p;
  p.beam_width = beam_width;
  p.alpha1 = alpha1;
  p.alpha2 = alpha2;
  p.token_min_logp = token_min_logp;
  p.beam_prune_logp = beam_prune_logp;
  p.max_candidates_per_step = max_candidates;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layer-aggregated CTC decoding over LGA1 dumps";

  auto base_error = py::register_exception<lga::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<lga::ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<lga::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<lga::FormatError>(m, "FormatError", base_error.ptr());
  py::register_exception<lga::InvariantError>(m, "InvariantError", base_error.ptr());

  py::class_<lga::Vocabulary>(m, "Vocabulary")
      .def(py::init([](std::vector<std::string> tokens, lga::TokenId blank_id, lga::TokenId word_delimiter_id) {
             lga::Vocabulary v;
             v.tokens = std::move(tokens);
             v.blank_id = blank_id;
             v.word_delimiter_id = word_delimiter_id;
             v.validate();
             return v;
           }),
           py::arg("tokens"), py::arg("blank_id") = 0, py::arg("word_delimiter_id") = 1)
      .def_readonly("tokens", &lga::Vocabulary::tokens)
      .def_readonly("blank_id", &lga::Vocabulary::blank_id)
      .def_readonly("word_delimiter_id", &lga::Vocabulary::word_delimiter_id)
      .def("__len__", &lga::Vocabulary::size);

  py::class_<lga::ModelDump>(m, "ModelDump")
      .def(py::init([](const F32Array& hidden_states, const F32Array& head_weight, const F32Array& head_bias,
                       const lga::Vocabulary& vocab, std::string sample_id, std::string model_name,
                       std::optional<std::string> reference_text, std::optional<F32Array> attentions) {
             lga::ModelDump d;
             d.hidden_states = from_numpy(hidden_states);
             if (d.hidden_states.shape.size() != 3) throw lga::ArgumentError("hidden_states must be [L+1, T, d]");
             d.meta.num_layers = d.hidden_states.shape[0] - 1;
             d.meta.seq_len = d.hidden_states.shape[1];
             d.meta.hidden_dim = d.hidden_states.shape[2];
             d.meta.sample_id = std::move(sample_id);
             d.meta.model_name = std::move(model_name);
             d.meta.reference_text = std::move(reference_text);
             d.head.weight = from_numpy(head_weight);
             d.head.bias = from_numpy(head_bias);
             d.vocab = vocab;
             if (attentions) d.attentions = from_numpy(*attentions);
             d.validate();
             return d;
           }),
           py::arg("hidden_states"), py::arg("head_weight"), py::arg("head_bias"), py::arg("vocab"),
           py::arg("sample_id") = "sample", py::arg("model_name") = "unknown", py::arg("reference_text") = py::none(),
           py::arg("attentions") = py::none())
      .def_property_readonly("sample_id", [](const lga::ModelDump& d) { return d.meta.sample_id; })
      .def_property_readonly("model_name", [](const lga::ModelDump& d) { return d.meta.model_name; })
      .def_property_readonly("reference_text", [](const lga::ModelDump& d) { return d.meta.reference_text; })
      .def_property_readonly("num_layers", &lga::ModelDump::num_layers)
      .def_property_readonly("seq_len", &lga::ModelDump::seq_len)
      .def_property_readonly("hidden_dim", &lga::ModelDump::hidden_dim)
      .def_property_readonly("vocab", [](const lga::ModelDump& d) { return d.vocab; })
      .def_property_readonly("hidden_states", [](const lga::ModelDump& d) { return to_numpy(d.hidden_states); })
      .def_property_readonly("head_weight", [](const lga::ModelDump& d) { return to_numpy(d.head.weight); })
      .def_property_readonly("head_bias", [](const lga::ModelDump& d) { return to_numpy(d.head.bias); })
      .def_property_readonly("attentions",
                             [](const lga::ModelDump& d) -> py::object {
                               if (!d.attentions) return py::none();
                               return to_numpy(*d.attentions);
                             })
      .def("save", [](const lga::ModelDump& d, const std::filesystem::path& p) { lga::save_dump(d, p); })
      .def("to_bytes", [](const lga::ModelDump& d) { return py::bytes(lga::encode_dump(d)); })
      .def("__eq__", [](const lga::ModelDump& a, const lga::ModelDump& b) { return a == b; });

  m.def("load_dump", [](const std::filesystem::path& p) { return lga::load_dump(p); }, py::arg("path"));
  m.def("decode_dump", [](const py::bytes& b) { return lga::decode_dump(std::string(b)); }, py::arg("data"));
  m.def("list_dumps", &lga::list_dumps, py::arg("directory"));

  m.def("project", [](const lga::ModelDump& d, std::size_t layer) { return to_numpy(lga::project(d, layer)); },
        py::arg("dump"), py::arg("layer"));
  m.def(
      "aggregate_logits",
      [](const lga::ModelDump& d, std::size_t layers, const std::string& normalize) {
        return to_numpy(lga::aggregate_logits(d, layers, parse_norm(normalize)));
      },
      py::arg("dump"), py::arg("agg_layers"), py::arg("normalize") = "hidden");
  m.def(
      "interpolate",
      [](const F64Array& base, const F64Array& agg, double beta) {
        auto b = matrix_from_numpy<lga::LogitsMatrix>(base);
        auto a = matrix_from_numpy<lga::LogitsMatrix>(agg);
        a.provenance = lga::Provenance::kAggregated;
        return to_numpy(lga::interpolate(b, a, beta));
      },
      py::arg("base"), py::arg("aggregated"), py::arg("beta"));
  m.def(
      "log_softmax",
      [](const F64Array& logits) { return to_numpy(lga::log_softmax(matrix_from_numpy<lga::LogitsMatrix>(logits))); },
      py::arg("logits"));
  m.def(
      "predict_log_probs",
      [](const lga::ModelDump& d, double beta, std::size_t layers, const std::string& normalize) {
        return to_numpy(lga::predict_log_probs(d, {beta, layers, parse_norm(normalize)}));
      },
      py::arg("dump"), py::arg("beta") = 1.0, py::arg("agg_layers") = 1, py::arg("normalize") = "hidden");

  py::class_<lga::LMState>(m, "LMState")
      .def_readonly("context", &lga::LMState::context)
      .def("__eq__", [](const lga::LMState& a, const lga::LMState& b) { return a == b; });

  py::class_<lga::NGramLM>(m, "NGramLM")
      .def_static(
          "load", [](const std::filesystem::path& p, double oov) { return lga::NGramLM::load(p, oov); },
          py::arg("path"), py::arg("oov_log10") = lga::kDefaultOovLog10)
      .def_static(
          "parse", [](const std::string& text, double oov) { return lga::NGramLM::parse_arpa(std::string_view(text), oov); },
          py::arg("text"), py::arg("oov_log10") = lga::kDefaultOovLog10)
      .def_property_readonly("order", &lga::NGramLM::order)
      .def_property_readonly("vocab_size", &lga::NGramLM::vocab_size)
      .def("begin_state", &lga::NGramLM::begin_state)
      .def(
          "score_word",
          [](const lga::NGramLM& lm, const lga::LMState& state, const std::string& word) {
            auto s = lm.score_word(state, std::string_view(word));
            return py::make_tuple(s.log10_prob, s.next);
          },
          py::arg("state"), py::arg("word"))
      .def("score_sequence",
           [](const lga::NGramLM& lm, const std::vector<std::string>& words) { return lm.score_sequence(words); },
           py::arg("words"));

  m.def(
      "greedy_decode",
      [](const F64Array& logprobs, const lga::Vocabulary& vocab) {
        return transcript_dict(lga::greedy_decode(matrix_from_numpy<lga::LogProbsMatrix>(logprobs), vocab));
      },
      py::arg("logprobs"), py::arg("vocab"));
  m.def(
      "beam_search_decode",
      [](const F64Array& logprobs, const lga::Vocabulary& vocab, const lga::NGramLM* lm, std::size_t beam_width,
         double alpha1, double alpha2, double token_min_logp, double beam_prune_logp, std::size_t max_candidates) {
        const auto lp = matrix_from_numpy<lga::LogProbsMatrix>(logprobs);
        py::list out;
        std::vector<lga::Transcript> nbest;
        {
          py::gil_scoped_release release;
          nbest = lga::beam_search_decode(
              lp, vocab, lm, decode_params(beam_width, alpha1, alpha2, token_min_logp, beam_prune_logp, max_candidates));
        }
        for (const auto& tr : nbest) out.append(transcript_dict(tr));
        return out;
      },
      py::arg("logprobs"), py::arg("vocab"), py::arg("lm") = nullptr, py::arg("beam_width") = 100,
      py::arg("alpha1") = 0.5, py::arg("alpha2") = 1.0, py::arg("token_min_logp") = -5.0,
      py::arg("beam_prune_logp") = -10.0, py::arg("max_candidates_per_step") = 0);

  m.def("wer", [](const std::string& r, const std::string& h) { return report_dict(lga::wer(r, h)); },
        py::arg("reference"), py::arg("hypothesis"));
  m.def("cer", [](const std::string& r, const std::string& h) { return report_dict(lga::cer(r, h)); },
        py::arg("reference"), py::arg("hypothesis"));
  m.def(
      "edit_distance",
      [](const std::vector<std::string>& r, const std::vector<std::string>& h) {
        return lga::edit_distance(r, h).distance;
      },
      py::arg("reference"), py::arg("hypothesis"));
  m.def("normalize_text", &lga::normalize_text, py::arg("text"));

  m.def(
      "confidence_profile",
      [](const lga::ModelDump& d, std::optional<std::pair<std::size_t, std::size_t>> layers,
         bool exclude_blank_frames, std::size_t workers) {
        const lga::LayerRange range = layers ? lga::LayerRange{layers->first, layers->second} : lga::LayerRange::all(d);
        py::list rows;
        for (const auto& row : lga::confidence_profile(d, range, exclude_blank_frames, workers).per_layer) {
          py::dict r;
          r["layer"] = row.layer;
          r["mean_max_prob"] = row.mean_max_prob;
          r["median_max_prob"] = row.median_max_prob;
          r["mean_entropy"] = row.mean_entropy;
          rows.append(r);
        }
        return rows;
      },
      py::arg("dump"), py::arg("layers") = py::none(), py::arg("exclude_blank_frames") = false,
      py::arg("workers") = 1);
  m.def(
      "token_evolution",
      [](const lga::ModelDump& d, std::optional<std::pair<std::size_t, std::size_t>> layers) {
        const lga::LayerRange range = layers ? lga::LayerRange{layers->first, layers->second} : lga::LayerRange::all(d);
        const auto table = lga::token_evolution(d, range);
        py::array_t<lga::TokenId> grid({static_cast<py::ssize_t>(table.grid.size()),
                                        static_cast<py::ssize_t>(d.seq_len())});
        auto* dst = grid.mutable_data();
        for (const auto& row : table.grid) dst = std::copy(row.begin(), row.end(), dst);
        return py::make_tuple(table.layers, grid);
      },
      py::arg("dump"), py::arg("layers") = py::none());
  m.def(
      "average_attention", [](const lga::ModelDump& d, std::size_t layer) {
        const auto map = lga::average_attention(d, layer);
        py::array_t<double> out({static_cast<py::ssize_t>(map.steps), static_cast<py::ssize_t>(map.steps)});
        std::copy(map.values.begin(), map.values.end(), out.mutable_data());
        return out;
      },
      py::arg("dump"), py::arg("layer"));
  m.def(
      "diagonality_score",
      [](const F64Array& map, std::size_t window) {
        if (map.ndim() != 2 || map.shape(0) != map.shape(1)) throw lga::ArgumentError("expected a square map");
        lga::AttentionMap a;
        a.steps = static_cast<std::size_t>(map.shape(0));
        a.values.assign(map.data(), map.data() + map.size());
        return lga::diagonality_score(a, window);
      },
      py::arg("attention"), py::arg("window"));

  m.def(
      "tune_grid",
      [](const std::vector<lga::ModelDump>& dumps, const lga::NGramLM* lm, std::vector<double> betas,
         std::vector<std::size_t> layer_counts, std::vector<double> alpha1s, std::vector<double> alpha2s,
         std::size_t beam_width, const std::string& normalize, std::size_t workers) {
        lga::TuneGrid grid{std::move(betas), std::move(layer_counts), std::move(alpha1s), std::move(alpha2s)};
        lga::DecodeParams params;
        params.beam_width = beam_width;
        lga::TuneResult result;
        {
          py::gil_scoped_release release;
          result = lga::tune_grid(dumps, lm, grid.normalized(), params, parse_norm(normalize), workers);
        }
        py::list table;
        for (const auto& row : result.table) {
          py::dict r;
          r["beta"] = row.params.beta;
          r["m"] = row.params.agg_layers;
          r["alpha1"] = row.params.alpha1;
          r["alpha2"] = row.params.alpha2;
          r["wer"] = row.wer();
          r["cer"] = row.cer();
          table.append(r);
        }
        py::dict best;
        best["beta"] = result.best.beta;
        best["m"] = result.best.agg_layers;
        best["alpha1"] = result.best.alpha1;
        best["alpha2"] = result.best.alpha2;
        return py::make_tuple(best, table);
      },
      py::arg("dumps"), py::arg("lm") = nullptr, py::arg("betas"), py::arg("layer_counts"),
      py::arg("alpha1s") = std::vector<double>{}, py::arg("alpha2s") = std::vector<double>{},
      py::arg("beam_width") = 100, py::arg("normalize") = "hidden", py::arg("workers") = 1);
}
