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

// lgadecode: batch decoding, analysis, scoring and tuning over LGA1 dumps.
//
// Exit codes: 0 success, 1 bad arguments, 2 I/O failure, 3 malformed input.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "lga/analysis.hpp"
#include "lga/decoder.hpp"
#include "lga/error.hpp"
#include "lga/lm.hpp"
#include "lga/metrics.hpp"
#include "lga/parallel.hpp"
#include "lga/projection.hpp"
#include "lga/tensor_io.hpp"
#include "lga/tuning.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kBadArgs = 1, kIoFailure = 2, kMalformed = 3 };

struct InputOptions {
  std::vector<std::string> dumps;
  std::string dump_dir;
  std::size_t workers = 1;
  std::string out;
};

struct LmOptions {
  std::string path;
  bool none = false;
};

struct ModelOptions {
  double beta = 1.0;
  std::size_t agg_layers = 1;
  std::string normalize = "hidden";
};

void add_inputs(CLI::App& cmd, InputOptions& in, bool many) {
  if (many) {
    cmd.add_option("--dump", in.dumps, "LGA1 dump file (repeatable)");
    cmd.add_option("--dump-dir", in.dump_dir, "Directory of .lga dumps, processed in filename order");
  } else {
    cmd.add_option("--dump", in.dumps, "LGA1 dump file")->expected(1);
  }
  cmd.add_option("--workers", in.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd.add_option("--out", in.out, "Output file (default: stdout); also writes <out>.manifest.json");
}

void add_lm(CLI::App& cmd, LmOptions& lm) {
  auto* path = cmd.add_option("--lm", lm.path, "ARPA language model (.arpa or .arpa.gz)");
  cmd.add_flag("--no-lm", lm.none, "Decode without a language model")->excludes(path);
}

void add_model(CLI::App& cmd, ModelOptions& model, double beta, std::size_t m) {
  model.beta = beta;
  model.agg_layers = m;
  cmd.add_option("--beta", model.beta, "Weight of the top-layer logits")->capture_default_str();
  cmd.add_option("--agg-layers", model.agg_layers, "Number of top layers to aggregate")->capture_default_str();
  cmd.add_option("--normalize", model.normalize, "Aggregation normalization: hidden | logits")
      ->capture_default_str()
      ->check(CLI::IsMember({"hidden", "logits"}));
}

void add_decode_params(CLI::App& cmd, lga::DecodeParams& p) {
  cmd.add_option("--beam-width", p.beam_width, "Beam width")->capture_default_str();
  cmd.add_option("--alpha1", p.alpha1, "Language model weight")->capture_default_str();
  cmd.add_option("--alpha2", p.alpha2, "Per-word bonus")->capture_default_str();
  cmd.add_option("--token-min-logp", p.token_min_logp, "Skip tokens below this log probability")
      ->capture_default_str();
  cmd.add_option("--beam-prune-logp", p.beam_prune_logp, "Drop beams this far below the best")
      ->capture_default_str();
}

lga::AggregationNorm parse_norm(const std::string& name) {
  return name == "logits" ? lga::AggregationNorm::kLogits : lga::AggregationNorm::kHiddenState;
}

std::vector<fs::path> resolve_inputs(const InputOptions& in) {
  std::vector<fs::path> paths(in.dumps.begin(), in.dumps.end());
  if (!in.dump_dir.empty()) {
    const auto listed = lga::list_dumps(in.dump_dir);
    if (listed.empty()) throw lga::IoError("no .lga files in '" + in.dump_dir + "'");
    paths.insert(paths.end(), listed.begin(), listed.end());
  }
  if (paths.empty()) throw lga::ArgumentError("one of --dump or --dump-dir is required");
  return paths;
}

std::vector<lga::ModelDump> load_all(const std::vector<fs::path>& paths, std::size_t workers) {
  std::vector<lga::ModelDump> dumps(paths.size());
  lga::parallel_for(paths.size(), workers, [&](std::size_t i) { dumps[i] = lga::load_dump(paths[i]); });
  spdlog::info("loaded {} dump(s)", dumps.size());
  return dumps;
}

std::unique_ptr<lga::NGramLM> load_lm(const LmOptions& opts) {
  if (opts.none) return nullptr;
  if (opts.path.empty()) throw lga::ArgumentError("pass --lm <path> or --no-lm");
  auto lm = std::make_unique<lga::NGramLM>(lga::NGramLM::load(opts.path));
  spdlog::info("loaded {}-gram LM with {} words", lm->order(), lm->vocab_size());
  return lm;
}

// Output sink: a file when --out is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path_.empty()) {
      file_.open(path_, std::ios::binary);
      if (!file_) throw lga::IoError("cannot create '" + path_ + "'");
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  void finish() {
    stream().flush();
    if (!stream()) throw lga::IoError("failed writing '" + (path_.empty() ? std::string("stdout") : path_) + "'");
  }

 private:
  std::string path_;
  std::ofstream file_;
};

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
  }
  json& params() { return doc_["params"]; }
  void set_inputs(const std::vector<fs::path>& paths) {
    json list = json::array();
    for (const auto& p : paths) list.push_back(p.string());
    doc_["inputs"] = std::move(list);
  }
  void set_lm(const LmOptions& lm) { doc_["lm"] = lm.none || lm.path.empty() ? json(nullptr) : json(lm.path); }

  void write_next_to(const std::string& out) {
    if (out.empty()) return;
    doc_["output"] = out;
    doc_["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream f(out + ".manifest.json", std::ios::binary);
    f << doc_.dump(2) << '\n';
    if (!f) throw lga::IoError("cannot write manifest for '" + out + "'");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

json decode_params_json(const lga::DecodeParams& p, const ModelOptions& model) {
  return json{{"beam_width", p.beam_width},         {"alpha1", p.alpha1},
              {"alpha2", p.alpha2},                 {"token_min_logp", p.token_min_logp},
              {"beam_prune_logp", p.beam_prune_logp}, {"beta", model.beta},
              {"m", model.agg_layers},              {"normalize", model.normalize}};
}

std::string transcript_line(const lga::ModelDump& d, const lga::Transcript& tr, const ModelOptions& model) {
  json row{{"sample_id", d.meta.sample_id}, {"text", tr.text},          {"am_logp", tr.am_logp},
           {"lm_log10", tr.lm_log10},       {"combined_score", tr.combined_score}, {"beta", model.beta},
           {"m", model.agg_layers}};
  return row.dump();
}

lga::LogProbsMatrix model_log_probs(const lga::ModelDump& d, const ModelOptions& model) {
  return lga::predict_log_probs(d, {model.beta, model.agg_layers, parse_norm(model.normalize)});
}

// Runs `line_for` over every utterance in parallel and writes lines in input order.
template <class Fn>
void write_lines(const std::vector<lga::ModelDump>& dumps, std::size_t workers, std::ostream& out, Fn&& line_for) {
  std::vector<std::string> lines(dumps.size());
  lga::parallel_for(dumps.size(), workers, [&](std::size_t i) { lines[i] = line_for(dumps[i]); });
  for (const auto& line : lines) out << line << '\n';
}

int run_decode(const InputOptions& in, const LmOptions& lm_opts, const ModelOptions& model,
               const lga::DecodeParams& params) {
  params.validate();
  const auto paths = resolve_inputs(in);
  const auto lm = load_lm(lm_opts);
  const auto dumps = load_all(paths, in.workers);
  Manifest manifest("decode");
  manifest.params() = decode_params_json(params, model);
  manifest.set_inputs(paths);
  manifest.set_lm(lm_opts);

  Output out(in.out);
  write_lines(dumps, in.workers, out.stream(), [&](const lga::ModelDump& d) {
    const auto nbest = lga::beam_search_decode(model_log_probs(d, model), d.vocab, lm.get(), params);
    return transcript_line(d, nbest.front(), model);
  });
  out.finish();
  manifest.write_next_to(in.out);
  return kOk;
}

int run_greedy(const InputOptions& in, const ModelOptions& model) {
  const auto paths = resolve_inputs(in);
  const auto dumps = load_all(paths, in.workers);
  Manifest manifest("greedy");
  manifest.params() = json{{"beta", model.beta}, {"m", model.agg_layers}, {"normalize", model.normalize}};
  manifest.set_inputs(paths);

  Output out(in.out);
  write_lines(dumps, in.workers, out.stream(), [&](const lga::ModelDump& d) {
    return transcript_line(d, lga::greedy_decode(model_log_probs(d, model), d.vocab), model);
  });
  out.finish();
  manifest.write_next_to(in.out);
  return kOk;
}

struct AnalyzeOptions {
  InputOptions in;
  std::string layers;
  bool exclude_blank_frames = false;
  std::string format = "json";
  std::size_t layer = 0;
  std::size_t window = 1;
};

lga::ModelDump load_single(const InputOptions& in, Manifest& manifest) {
  const auto paths = resolve_inputs(in);
  if (paths.size() != 1) throw lga::ArgumentError("analyze takes exactly one --dump");
  manifest.set_inputs(paths);
  return lga::load_dump(paths.front());
}

lga::LayerRange layer_range(const std::string& text, const lga::ModelDump& d) {
  return text.empty() ? lga::LayerRange::all(d) : lga::LayerRange::parse(text);
}

int run_confidence(const AnalyzeOptions& a) {
  Manifest manifest("analyze confidence");
  const auto dump = load_single(a.in, manifest);
  const auto range = layer_range(a.layers, dump);
  manifest.params() = json{{"layers", std::to_string(range.first) + ":" + std::to_string(range.last)},
                           {"exclude_blank_frames", a.exclude_blank_frames}};
  const auto profile = lga::confidence_profile(dump, range, a.exclude_blank_frames, a.in.workers);
  Output out(a.in.out);
  lga::write_confidence_csv(profile, out.stream());
  out.finish();
  manifest.write_next_to(a.in.out);
  return kOk;
}

int run_tokens(const AnalyzeOptions& a) {
  Manifest manifest("analyze tokens");
  const auto dump = load_single(a.in, manifest);
  const auto range = layer_range(a.layers, dump);
  manifest.params() = json{{"layers", std::to_string(range.first) + ":" + std::to_string(range.last)},
                           {"format", a.format}};
  const auto table = lga::token_evolution(dump, range, a.in.workers);
  Output out(a.in.out);
  if (a.format == "text") {
    out.stream() << lga::render_token_grid(table, dump.vocab);
  } else {
    out.stream() << lga::token_grid_json(table, dump.vocab).dump() << '\n';
  }
  out.finish();
  manifest.write_next_to(a.in.out);
  return kOk;
}

int run_attention(const AnalyzeOptions& a) {
  Manifest manifest("analyze attention");
  const auto dump = load_single(a.in, manifest);
  manifest.params() = json{{"layer", a.layer}, {"window", a.window}};
  // Each requested layer is averaged independently, so layers spread across workers.
  std::vector<std::size_t> layers;
  if (a.layer != 0) {
    layers.push_back(a.layer);
  } else {
    for (std::size_t l = 1; l <= dump.num_layers(); ++l) layers.push_back(l);
  }
  std::vector<json> rows(layers.size());
  lga::parallel_for(layers.size(), a.in.workers, [&](std::size_t i) {
    const auto map = lga::average_attention(dump, layers[i]);
    json values = json::array();
    for (std::size_t q = 0; q < map.steps; ++q) {
      json row = json::array();
      for (std::size_t k = 0; k < map.steps; ++k) row.push_back(map.at(q, k));
      values.push_back(std::move(row));
    }
    rows[i] = json{{"layer", map.layer},
                   {"window", a.window},
                   {"diagonality", lga::diagonality_score(map, a.window)},
                   {"attention", std::move(values)}};
  });
  Output out(a.in.out);
  for (const auto& row : rows) out.stream() << row.dump() << '\n';
  out.finish();
  manifest.write_next_to(a.in.out);
  return kOk;
}

struct ScoreOptions {
  std::string ref;
  std::string hyp;
  std::string out;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw lga::IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

// A text file is either JSONL with {"sample_id", "text"} objects or one
// transcript per line, keyed by 1-based line number.
std::vector<std::pair<std::string, std::string>> read_transcripts(const std::string& path) {
  const auto lines = read_lines(path);
  const bool jsonl = !lines.empty() && lines.front().find_first_not_of(" \t") != std::string::npos &&
                     lines.front()[lines.front().find_first_not_of(" \t")] == '{';
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!jsonl) {
      out.emplace_back(std::to_string(i + 1), lines[i]);
      continue;
    }
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(lines[i]);
      out.emplace_back(row.at("sample_id").get<std::string>(), row.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw lga::FormatError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

int run_score(const ScoreOptions& s) {
  const auto refs = read_transcripts(s.ref);
  const auto hyps = read_transcripts(s.hyp);
  std::map<std::string, std::string> by_id;
  for (const auto& [id, text] : hyps) {
    if (!by_id.emplace(id, text).second) throw lga::FormatError("duplicate hypothesis id '" + id + "'");
  }
  if (hyps.size() != refs.size()) {
    throw lga::FormatError("reference has " + std::to_string(refs.size()) + " entries, hypothesis has " +
                           std::to_string(hyps.size()));
  }
  auto row_json = [](const lga::ErrorRateReport& w, const lga::ErrorRateReport& c) {
    return json{{"wer", w.rate},
                {"cer", c.rate},
                {"word_errors", w.errors()},
                {"ref_words", w.reference_len},
                {"char_errors", c.errors()},
                {"ref_chars", c.reference_len}};
  };
  Output out(s.out);
  lga::ErrorRateReport words, chars;
  for (const auto& [id, ref] : refs) {
    const auto hit = by_id.find(id);
    if (hit == by_id.end()) throw lga::FormatError("no hypothesis for '" + id + "'");
    if (lga::normalize_text(ref).empty()) throw lga::FormatError("empty reference for '" + id + "'");
    const auto w = lga::wer(ref, hit->second);
    const auto c = lga::cer(ref, hit->second);
    words += w;
    chars += c;
    json row{{"sample_id", id}, {"scope", "utterance"}};
    row.update(row_json(w, c));
    out.stream() << row.dump() << '\n';
  }
  json total{{"sample_id", nullptr}, {"scope", "corpus"}};
  total.update(row_json(words, chars));
  out.stream() << total.dump() << '\n';
  out.finish();
  Manifest manifest("score");
  manifest.set_inputs({s.ref, s.hyp});
  manifest.write_next_to(s.out);
  return kOk;
}

struct TuneOptions {
  InputOptions in;
  LmOptions lm;
  lga::DecodeParams params;
  std::string normalize = "hidden";
  std::vector<double> betas;
  std::vector<std::size_t> layer_counts;
  std::vector<double> alpha1s;
  std::vector<double> alpha2s;
  std::string best_out;
};

int run_tune(const TuneOptions& t) {
  const auto paths = resolve_inputs(t.in);
  const auto lm = load_lm(t.lm);
  const auto dumps = load_all(paths, t.in.workers);
  lga::TuneGrid grid = lga::TuneGrid::defaults(dumps.front().num_layers());
  if (!t.betas.empty()) grid.betas = t.betas;
  if (!t.layer_counts.empty()) grid.layer_counts = t.layer_counts;
  grid.alpha1s = t.alpha1s;
  grid.alpha2s = t.alpha2s;
  grid = grid.normalized();
  spdlog::info("tuning {} grid points over {} utterance(s)", grid.size(), dumps.size());

  const auto result = lga::tune_grid(dumps, lm.get(), grid, t.params, parse_norm(t.normalize), t.in.workers);
  Output out(t.in.out);
  lga::write_tune_csv(result, out.stream());
  out.finish();

  if (!t.best_out.empty()) {
    const auto& row = *std::find_if(result.table.begin(), result.table.end(),
                                    [&](const lga::TuneRow& r) { return r.params == result.best; });
    std::ofstream f(t.best_out, std::ios::binary);
    f << json{{"beta", result.best.beta},   {"m", result.best.agg_layers}, {"alpha1", result.best.alpha1},
              {"alpha2", result.best.alpha2}, {"wer", row.wer()},          {"cer", row.cer()}}
             .dump(2)
      << '\n';
    if (!f) throw lga::IoError("cannot write '" + t.best_out + "'");
  }

  Manifest manifest("tune");
  ModelOptions shown;
  shown.normalize = t.normalize;
  manifest.params() = decode_params_json(t.params, shown);
  manifest.params().erase("beta");
  manifest.params().erase("m");
  manifest.params()["betas"] = grid.betas;
  manifest.params()["layer_counts"] = grid.layer_counts;
  manifest.set_inputs(paths);
  manifest.set_lm(t.lm);
  manifest.write_next_to(t.in.out);
  return kOk;
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("lgadecode");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("LGA_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Decode, analyze, score and tune CTC models from LGA1 layer dumps", "lgadecode"};
  app.require_subcommand(1);

  InputOptions decode_in;
  LmOptions decode_lm;
  ModelOptions decode_model;
  lga::DecodeParams decode_params;
  auto* decode = app.add_subcommand("decode", "Beam search with optional LM fusion and layer aggregation");
  add_inputs(*decode, decode_in, true);
  add_lm(*decode, decode_lm);
  add_model(*decode, decode_model, 0.75, 4);
  add_decode_params(*decode, decode_params);

  InputOptions greedy_in;
  ModelOptions greedy_model;
  auto* greedy = app.add_subcommand("greedy", "Frame-wise argmax decoding");
  add_inputs(*greedy, greedy_in, true);
  add_model(*greedy, greedy_model, 1.0, 1);

  AnalyzeOptions analyze_opts;
  auto* analyze = app.add_subcommand("analyze", "Layer-wise analysis of a single dump");
  analyze->require_subcommand(1);
  auto* confidence = analyze->add_subcommand("confidence", "Per-layer confidence statistics (CSV)");
  auto* tokens = analyze->add_subcommand("tokens", "Per-layer argmax token grid (JSON or text)");
  auto* attention = analyze->add_subcommand("attention", "Head-averaged attention maps and diagonality (JSONL)");
  for (auto* sub : {confidence, tokens, attention}) add_inputs(*sub, analyze_opts.in, false);
  for (auto* sub : {confidence, tokens}) {
    sub->add_option("--layers", analyze_opts.layers, "Layer range a:b (default: all layers)");
  }
  confidence->add_flag("--exclude-blank-frames", analyze_opts.exclude_blank_frames,
                       "Skip frames whose top-layer argmax is blank");
  tokens->add_option("--format", analyze_opts.format, "json | text")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));
  attention->add_option("--layer", analyze_opts.layer, "Layer to average (default: every layer)");
  attention->add_option("--window", analyze_opts.window, "Diagonal band half-width")->capture_default_str();

  ScoreOptions score_opts;
  auto* score = app.add_subcommand("score", "WER/CER of hypotheses against references (JSONL)");
  score->add_option("--ref", score_opts.ref, "Reference transcripts (text lines or JSONL)")->required();
  score->add_option("--hyp", score_opts.hyp, "Hypothesis transcripts (text lines or JSONL)")->required();
  score->add_option("--out", score_opts.out, "Output file (default: stdout)");

  TuneOptions tune_opts;
  auto* tune = app.add_subcommand("tune", "Grid search over beta, layer count and LM weights (CSV)");
  add_inputs(*tune, tune_opts.in, true);
  add_lm(*tune, tune_opts.lm);
  add_decode_params(*tune, tune_opts.params);
  tune->add_option("--normalize", tune_opts.normalize, "Aggregation normalization: hidden | logits")
      ->capture_default_str()
      ->check(CLI::IsMember({"hidden", "logits"}));
  tune->add_option("--betas", tune_opts.betas, "Comma-separated betas (default: built-in grid)")->delimiter(',');
  tune->add_option("--layer-counts", tune_opts.layer_counts, "Comma-separated layer counts (default: built-in grid)")
      ->delimiter(',');
  tune->add_option("--alpha1s", tune_opts.alpha1s, "Comma-separated LM weights (default: --alpha1)")->delimiter(',');
  tune->add_option("--alpha2s", tune_opts.alpha2s, "Comma-separated word bonuses (default: --alpha2)")->delimiter(',');
  tune->add_option("--best-out", tune_opts.best_out, "Write the winning parameters as JSON");

  if (argc <= 1) {
    std::cerr << app.help();
    return kBadArgs;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().back();
    std::cerr << failed->help();
    return kBadArgs;
  }

  try {
    if (*decode) return run_decode(decode_in, decode_lm, decode_model, decode_params);
    if (*greedy) return run_greedy(greedy_in, greedy_model);
    if (*confidence) return run_confidence(analyze_opts);
    if (*tokens) return run_tokens(analyze_opts);
    if (*attention) return run_attention(analyze_opts);
    if (*score) return run_score(score_opts);
    if (*tune) return run_tune(tune_opts);
  } catch (const lga::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().back()->help();
    return kBadArgs;
  } catch (const lga::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const lga::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMalformed;
  }
  return kBadArgs;
}
