// Copyright 2026 The senssum Authors.
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

// `senssum` command-line front end. Kept in a header so tests can drive it
// in-process through cli::run.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "senssum/senssum.hpp"

namespace senssum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

inline constexpr const char* kJudgeKeyEnv = "SENSSUM_JUDGE_KEY";

// Stage offsets for seeds derived from --seed.
inline constexpr std::uint64_t kStageVocab = 1;
inline constexpr std::uint64_t kStageCorpus = 2;
inline constexpr std::uint64_t kStageSpeech = 4;
inline constexpr std::uint64_t kStageAsr = 5;
inline constexpr std::uint64_t kStageJudge = 6;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << content;
  if (!f) throw DataError("write failed: " + path);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline std::string dump(const nlohmann::ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

struct TextItem {
  std::string id;
  std::string text;
};

// JSONL with an "id" and a text field. With field empty, the first of
// output/summary/text present is used.
inline std::vector<TextItem> read_texts(const std::string& path, const std::string& field) {
  std::vector<TextItem> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(lineno, path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw LoadError(lineno, path + ": missing string id");
    std::string key = field;
    if (key.empty())
      for (const char* k : {"output", "summary", "text"})
        if (j.contains(k) && j[k].is_string()) {
          key = k;
          break;
        }
    if (key.empty() || !j.contains(key) || !j[key].is_string())
      throw LoadError(lineno, path + ": no text field" + (field.empty() ? "" : " '" + field + "'"));
    out.push_back({j["id"].get<std::string>(), j[key].get<std::string>()});
  }
  return out;
}

inline std::map<std::string, std::string> by_id(const std::vector<TextItem>& items,
                                                const std::string& what) {
  std::map<std::string, std::string> m;
  for (const auto& it : items)
    if (!m.emplace(it.id, it.text).second) throw DataError(what + ": duplicate id " + it.id);
  return m;
}

inline std::vector<EmbeddingSeq> read_embeddings(const std::string& path,
                                                 std::map<std::string, std::size_t>* index) {
  std::vector<EmbeddingSeq> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EmbeddingSeq e;
      e.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
      e.dim = e.vectors.empty() ? 0 : e.vectors.front().size();
      if (j.contains("idf")) e.idf = j["idf"].get<std::vector<double>>();
      e.validate();
      (*index)[j.at("id").get<std::string>()] = out.size();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(lineno, path + ": " + e.what());
    } catch (const InvalidInput& e) {
      throw LoadError(lineno, path + ": " + e.what());
    }
  }
  return out;
}

inline httplib::Headers judge_headers() {
  httplib::Headers h;
  if (const char* key = std::getenv(kJudgeKeyEnv); key && *key)
    h.emplace("Authorization", std::string("Bearer ") + key);
  return h;
}

struct BackendOptions {
  std::uint64_t seed = kDefaultSeed;
  int max_inflight = 1;
  double timeout_sec = 30.0;
  int retries = 3;
  std::size_t max_edit = 1;
};

// Handlers usable in-process or behind `serve`:
//   echo | toy-asr[:CER] | toy-tsum:TASK.json[:COPY] | toy-e2e:MODEL.json
inline std::optional<Handler> make_toy_handler(std::string_view spec, const BackendOptions& o) {
  auto arg = [&](std::string_view prefix) -> std::optional<std::string> {
    if (spec == prefix) return std::string();
    if (spec.starts_with(std::string(prefix) + ":")) return std::string(spec.substr(prefix.size() + 1));
    return std::nullopt;
  };
  if (spec == "echo") return toy::echo_handler();
  if (auto a = arg("toy-asr")) {
    double cer = 0.0;
    if (!a->empty()) {
      try {
        cer = std::stod(*a);
      } catch (const std::exception&) {
        throw UsageError("toy-asr: bad error rate '" + *a + "'");
      }
    }
    auto ch = toy::CorruptionChannel::with_total_rate(cer, derive_seed(o.seed, kStageAsr));
    ch.validate();
    return toy::mock_asr_handler(ch);
  }
  if (auto a = arg("toy-tsum")) {
    if (a->empty()) throw UsageError("toy-tsum needs a task file: toy-tsum:TASK.json[:COPY]");
    std::string path = *a;
    toy::TsumOptions opts;
    if (auto colon = path.rfind(':'); colon != std::string::npos) {
      try {
        opts.copy_fillers = std::stoul(path.substr(colon + 1));
        path.resize(colon);
      } catch (const std::exception&) {
        // not a copy count; the colon belongs to the path
      }
    }
    const auto task = toy::task_config_from_json(read_json(path));
    return toy::oracle_tsum_handler(std::make_shared<toy::Lexicon>(task.content_vocab, o.max_edit), opts);
  }
  if (auto a = arg("toy-e2e")) {
    if (a->empty()) throw UsageError("toy-e2e needs a model file: toy-e2e:MODEL.json");
    return toy::salience_handler(std::make_shared<toy::SalienceModel>(toy::salience_from_json(read_json(*a))));
  }
  return std::nullopt;
}

inline std::unique_ptr<Backend> make_cli_backend(Kind kind, const std::string& spec,
                                                 const BackendOptions& o,
                                                 httplib::Headers headers = {}) {
  if (auto h = make_toy_handler(spec, o)) return std::make_unique<LocalBackend>(kind, *h, o.max_inflight);
  if (spec.starts_with("stdio:") || spec.starts_with("http://")) {
    auto ep = parse_endpoint(kind, spec);
    ep.max_inflight = o.max_inflight;
    ep.timeout_sec = o.timeout_sec;
    ep.retry.attempts = o.retries;
    ep.validate();
    return make_backend(ep, std::move(headers));
  }
  throw UsageError("unknown backend spec '" + spec +
                   "' (expected echo, toy-asr[:CER], toy-tsum:TASK, toy-e2e:MODEL, stdio:CMD or "
                   "http://HOST:PORT)");
}

inline std::string suggest(const std::string& flag, const std::vector<std::string>& known) {
  std::string best;
  std::size_t best_d = 3;
  const auto f = char_tokenize(flag);
  for (const auto& k : known) {
    const std::size_t d = edit_distance(char_tokenize(k), f);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

inline std::vector<std::string> long_flags(const CLI::App& app) {
  std::vector<std::string> out;
  for (const auto* opt : app.get_options())
    for (const auto& n : opt->get_lnames()) out.push_back("--" + n);
  return out;
}

inline std::vector<std::string> read_scores_values(const std::string& path, const std::string& metric,
                                                   std::vector<double>* values) {
  std::istringstream in(read_file(path));
  const auto lines = read_scores(in);
  std::vector<std::string> ids;
  for (const auto& s : lines)
    if (s.metric == metric) {
      ids.push_back(s.id);
      values->push_back(s.value);
    }
  return ids;
}

}  // namespace detail

// Replay files hold the argument vector of a run.
inline nlohmann::ordered_json run_config_json(const std::vector<std::string>& args) {
  nlohmann::ordered_json j;
  j["senssum_run_config"] = 1;
  j["argv"] = args;
  return j;
}

inline std::vector<std::string> run_config_args(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("argv") || !j["argv"].is_array())
    throw DataError("run config: expected an object with an argv array");
  return j["argv"].get<std::vector<std::string>>();
}

class App {
 public:
  App(std::istream& in, std::ostream& out, std::ostream& err) : in_(in), out_(out), err_(err) {
    build();
  }

  int run(std::vector<std::string> args) {
    try {
      args = resolve_config(std::move(args));
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitData;
    }
    try {
      std::vector<std::string> rev(args.rbegin(), args.rend());
      app_.parse(rev);
    } catch (const CLI::CallForHelp& e) {
      return app_.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
      return app_.exit(e, out_, err_);
    } catch (const CLI::ExtrasError& e) {
      err_ << "error: " << e.what() << "\n";
      report_suggestion(args);
      return kExitUsage;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      report_suggestion(args, false);
      if (!args.empty() && !args[0].starts_with("-") && !subs_.count(args[0])) {
        std::vector<std::string> names;
        for (const auto& [key, sub] : subs_)
          if (key.find(' ') == std::string::npos) names.push_back(key);
        if (auto s = detail::suggest(args[0], names); !s.empty())
          err_ << "unknown subcommand '" << args[0] << "'; did you mean '" << s << "'?\n";
      }
      return kExitUsage;
    }
    if (!save_config_.empty()) detail::write_file(save_config_, detail::dump(run_config_json(strip_save_config(args))));
    try {
      return dispatch();
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const InvalidInput& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const BackendError& e) {
      err_ << "backend error: " << e.what() << "\n";
      return kExitBackend;
    } catch (const LoadError& e) {
      err_ << "data error (line " << e.line() << "): " << e.what() << "\n";
      return kExitData;
    } catch (const std::exception& e) {
      err_ << "data error: " << e.what() << "\n";
      return kExitData;
    }
  }

  const CLI::App& app() const { return app_; }

  // Every leaf subcommand path, e.g. {"bpe", "train"}.
  const std::vector<std::vector<std::string>>& command_paths() const { return paths_; }

 private:
  // --config FILE replaces itself with the saved argument vector.
  std::vector<std::string> resolve_config(std::vector<std::string> args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t width = 0;
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw UsageError("--config needs a file");
        path = args[i + 1];
        width = 2;
      } else if (args[i].starts_with("--config=")) {
        path = args[i].substr(9);
        width = 1;
      } else {
        continue;
      }
      auto saved = run_config_args(detail::read_json(path));
      for (const auto& a : saved)
        if (a == "--config" || a.starts_with("--config=")) throw DataError("run config: nested --config");
      std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(i));
      // Saved subcommand path first, then any extra flags given alongside.
      std::vector<std::string> extra(args.begin() + static_cast<std::ptrdiff_t>(i + width), args.end());
      // A flag given again on the command line replaces its saved occurrences.
      std::set<std::string> given;
      for (const auto& a : extra)
        if (a.starts_with("--")) given.insert(a.substr(0, a.find('=')));
      for (std::size_t k = 0; k < saved.size(); ++k) {
        const auto& a = saved[k];
        if (a.starts_with("--") && given.count(a.substr(0, a.find('=')))) {
          if (a.find('=') == std::string::npos && k + 1 < saved.size() && !saved[k + 1].starts_with("--")) ++k;
          continue;
        }
        out.push_back(a);
      }
      out.insert(out.end(), extra.begin(), extra.end());
      return out;
    }
    return args;
  }

  static std::vector<std::string> strip_save_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--save-config") {
        ++i;
        continue;
      }
      if (args[i].starts_with("--save-config=")) continue;
      out.push_back(args[i]);
    }
    return out;
  }

  void report_suggestion(const std::vector<std::string>& args, bool always = true) {
    const CLI::App* scope = &app_;
    std::string key;
    for (const auto& a : args) {
      if (a.starts_with("-")) break;
      const std::string next = key.empty() ? a : key + " " + a;
      auto it = subs_.find(next);
      if (it == subs_.end()) break;
      key = next;
      scope = it->second;
    }
    const auto known = detail::long_flags(*scope);
    for (const auto& a : args) {
      if (!a.starts_with("--")) continue;
      const std::string flag = a.substr(0, a.find('='));
      if (std::find(known.begin(), known.end(), flag) != known.end()) continue;
      if (auto s = detail::suggest(flag, known); !s.empty())
        err_ << "unknown flag '" << flag << "'; did you mean '" << s << "'?\n";
      else if (always)
        err_ << "unknown flag '" << flag << "'\n";
    }
  }

  void add_globals(CLI::App* sub) {
    sub->add_option("--seed", seed_, "Base seed; per-stage seeds are derived from it")
        ->capture_default_str();
    sub->add_option("--max-inflight", max_inflight_, "Concurrent backend requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--config", config_unused_, "Replay a run saved with --save-config");
    sub->add_option("--save-config", save_config_, "Save this invocation for replay");
    sub->add_flag("-v,--verbose", verbose_, "Progress messages on stderr");
  }

  void add_backend_flags(CLI::App* sub) {
    sub->add_option("--timeout", bopts_.timeout_sec, "Per-request backend timeout (s)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--retries", bopts_.retries, "Transport attempts before giving up")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--max-edit", bopts_.max_edit, "Edit tolerance of toy-tsum matching")
        ->capture_default_str();
  }

  detail::BackendOptions bopts() const {
    auto o = bopts_;
    o.seed = seed_;
    o.max_inflight = max_inflight_;
    return o;
  }

  void build();
  int dispatch();

  int cmd_gen_synthetic();
  int cmd_split();
  int cmd_filter_pool();
  int cmd_pseudo_label();
  int cmd_mix();
  int cmd_train_toy();
  int cmd_transduce();
  int cmd_score();
  int cmd_ci();
  int cmd_abtest();
  int cmd_report();
  int cmd_stats();
  int cmd_bpe_train();
  int cmd_bpe_encode();
  int cmd_bpe_decode();
  int cmd_sweep();
  int cmd_serve();
  int cmd_conformance();

  void note(const std::string& msg) {
    if (verbose_) err_ << msg << "\n";
  }

  std::istream& in_;
  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"Speech summarization toolkit: metrics, BPE, manifests, distillation pipeline, "
                "A/B judging and reports.",
                "senssum"};
  std::map<std::string, CLI::App*> subs_;  // "bpe train" etc.
  std::vector<std::vector<std::string>> paths_;

  // globals
  std::uint64_t seed_ = kDefaultSeed;
  int max_inflight_ = 1;
  std::string config_unused_;
  std::string save_config_;
  bool verbose_ = false;
  detail::BackendOptions bopts_;

  // shared option storage
  std::string in_path_, out_path_, core_path_, pseudo_path_, rest_path_, report_path_, log_path_;
  std::string task_path_, save_task_path_, hyp_path_, ref_path_, table_path_, model_path_;
  std::string asr_spec_, tsum_spec_, backend_spec_, judge_spec_ = "mock", kind_str_, mode_str_ = "hyp";
  std::string field_, hyp_field_, ref_field_, metric_, unit_str_ = "word", template_path_;
  std::string a_path_, b_path_, name_a_ = "a", name_b_ = "b", http_addr_, hyp_emb_, ref_emb_;
  std::vector<std::string> train_paths_, patterns_, systems_, b_sweep_;
  std::size_t n_ = 0, k_ = 0, vocab_size_ = 200, n_sentences_ = 100, min_chars_ = 10;
  std::size_t content_lo_ = 2, content_hi_ = 4, filler_lo_ = 1, filler_hi_ = 4;
  std::size_t resamples_ = kDefaultResamples, bpe_size_ = 1000;
  std::string id_prefix_ = "syn", split_str_ = "train";
  double speech_cer_ = 0.0, alpha_ = 1.0, threshold_ = toy::kDefaultSalienceThreshold, level_ = 0.95;
  int beam_width_ = kDefaultBeamWidth;
  bool filter_ = false, use_idf_ = false, echo_ = false, dump_suite_ = false;
  toy::SweepConfig sweep_;
  std::string sweep_json_;
};


inline void App::build() {
  app_.require_subcommand(1);
  app_.set_help_all_flag("--help-all", "Help for every subcommand");
  auto sub = [&](CLI::App* parent, const std::string& name, const std::string& desc, bool leaf = true) {
    auto* s = parent->add_subcommand(name, desc);
    std::string key = parent == &app_ ? name : parent->get_name() + " " + name;
    subs_[key] = s;
    if (leaf) {
      std::vector<std::string> path;
      if (parent != &app_) path.push_back(parent->get_name());
      path.push_back(name);
      paths_.push_back(path);
      add_globals(s);
    }
    return s;
  };

  {
    auto* s = sub(&app_, "gen-synthetic", "Generate a synthetic (transcription, summary) manifest");
    s->add_option("--out", out_path_, "Output manifest (JSONL)")->required();
    s->add_option("--task", task_path_, "Reuse a saved task config (vocabularies) instead of a fresh one");
    s->add_option("--save-task", save_task_path_, "Write the task config (JSON)");
    s->add_option("--vocab-size", vocab_size_, "Content pseudo-words to generate")->capture_default_str();
    s->add_option("--n", n_sentences_, "Sentences")->capture_default_str();
    s->add_option("--content-min", content_lo_, "Min content tokens per sentence")->capture_default_str();
    s->add_option("--content-max", content_hi_, "Max content tokens per sentence")->capture_default_str();
    s->add_option("--filler-min", filler_lo_, "Min filler tokens before each content token")->capture_default_str();
    s->add_option("--filler-max", filler_hi_, "Max filler tokens before each content token")->capture_default_str();
    s->add_option("--id-prefix", id_prefix_, "Record id prefix")->capture_default_str();
    s->add_option("--split", split_str_, "Split label (train|core|eval)")
        ->check(CLI::IsMember({"train", "core", "eval"}))
        ->capture_default_str();
    s->add_option("--speech-cer", speech_cer_, "Attach a corrupted speech surrogate at this character error rate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
  {
    auto* s = sub(&app_, "split", "Split the first K records off as the core set");
    s->add_option("--in", in_path_, "Input manifest")->required();
    s->add_option("--k", k_, "Core size")->required();
    s->add_option("--core-out", core_path_, "Core manifest output")->required();
    s->add_option("--rest-out", rest_path_, "Remaining records output")->required();
  }
  {
    auto* s = sub(&app_, "filter-pool", "Keep KD pool records with long, sentence-final transcriptions");
    s->add_option("--in", in_path_, "Input manifest")->required();
    s->add_option("--out", out_path_, "Filtered manifest")->required();
    s->add_option("--min-chars", min_chars_, "Keep transcriptions longer than this many characters")
        ->capture_default_str();
    s->add_option("--pattern", patterns_, "Sentence-ending suffix (repeatable; default: 。．.?!？！)");
    s->add_option("--report", report_path_, "Write the filter report (JSON) here instead of stdout");
  }
  {
    auto* s = sub(&app_, "pseudo-label", "Generate pseudo-summaries for a pool with a cascade");
    s->add_option("--pool", in_path_, "Pool manifest")->required();
    s->add_option("--tsum", tsum_spec_, "TSum backend spec")->required();
    s->add_option("--asr", asr_spec_, "ASR backend spec (hyp mode)");
    s->add_option("--mode", mode_str_, "hyp: from ASR hypotheses; ref: from reference transcriptions")
        ->check(CLI::IsMember({"hyp", "ref"}))
        ->capture_default_str();
    s->add_option("--out", out_path_, "Pseudo-labeled manifest")->required();
    s->add_option("--log", log_path_, "Per-record log (JSONL)");
    s->add_flag("--filter", filter_, "Filter the pool first (see filter-pool)");
    s->add_option("--min-chars", min_chars_, "Filter: minimum characters")->capture_default_str();
    s->add_option("--pattern", patterns_, "Filter: sentence-ending suffix (repeatable)");
    s->add_option("--beam-width", beam_width_, "Beam width forwarded to backends")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_backend_flags(s);
  }
  {
    auto* s = sub(&app_, "mix", "Core set plus the first N pseudo-labeled records");
    s->add_option("--core", core_path_, "Core manifest")->required();
    s->add_option("--pseudo", pseudo_path_, "Pseudo-labeled manifest")->required();
    s->add_option("--n", n_, "Pseudo-labeled records to add")->required();
    s->add_option("--out", out_path_, "Mixed manifest")->required();
  }
  {
    auto* s = sub(&app_, "train-toy", "Train the toy salience E2E model");
    s->add_option("--train", train_paths_, "Training manifest (repeatable)")->required();
    s->add_option("--out", out_path_, "Model output (JSON)")->required();
    s->add_option("--alpha", alpha_, "Smoothing pseudo-count")->capture_default_str();
    s->add_option("--threshold", threshold_, "Keep tokens with probability >= threshold")
        ->capture_default_str();
  }
  {
    auto* s = sub(&app_, "transduce", "Run a backend (or the cascade) over a manifest");
    s->add_option("--kind", kind_str_, "asr, tsum, e2e or cascade")
        ->check(CLI::IsMember({"asr", "tsum", "e2e", "cascade"}))
        ->required();
    s->add_option("--in", in_path_, "Input manifest")->required();
    s->add_option("--out", out_path_, "Responses (JSONL: id, output, score, error)")->required();
    s->add_option("--backend", backend_spec_, "Backend spec (asr, tsum, e2e)");
    s->add_option("--asr", asr_spec_, "ASR backend spec (cascade)");
    s->add_option("--tsum", tsum_spec_, "TSum backend spec (cascade)");
    s->add_option("--field", field_, "Input: speech, transcription or summary (default: transcription for tsum, else speech)")
        ->check(CLI::IsMember({"speech", "transcription", "summary"}));
    s->add_option("--beam-width", beam_width_, "Beam width forwarded to backends")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_backend_flags(s);
  }
  {
    auto* s = sub(&app_, "score", "Per-sample scores of hypotheses against references");
    s->add_option("--metric", metric_, "rouge-l, bertscore, cr, cer or wer")
        ->check(CLI::IsMember({"rouge-l", "bertscore", "cr", "cer", "wer"}))
        ->required();
    s->add_option("--hyp", hyp_path_, "Hypotheses (JSONL with id and text)")->required();
    s->add_option("--ref", ref_path_, "References (JSONL with id and text)")->required();
    s->add_option("--hyp-field", hyp_field_, "Hypothesis text field (default: output, summary or text)");
    s->add_option("--ref-field", ref_field_, "Reference text field (default: transcription for cr/cer/wer)");
    s->add_option("--unit", unit_str_, "Token unit for rouge-l and cr")
        ->check(CLI::IsMember({"word", "character"}))
        ->capture_default_str();
    s->add_option("--hyp-emb", hyp_emb_, "bertscore: hypothesis embeddings (JSONL id, vectors[, idf])");
    s->add_option("--ref-emb", ref_emb_, "bertscore: reference embeddings");
    s->add_flag("--idf", use_idf_, "bertscore: idf weighting");
    s->add_option("--out", out_path_, "Per-sample scores (JSONL)");
  }
  {
    auto* s = sub(&app_, "ci", "Bootstrap confidence intervals of per-sample scores");
    s->add_option("--scores", in_path_, "Scores (JSONL)")->required();
    s->add_option("--metric", metric_, "Only this metric");
    s->add_option("--resamples", resamples_, "Bootstrap resamples")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--level", level_, "Confidence level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  }
  {
    auto* s = sub(&app_, "abtest", "Pairwise A/B preference test with position swapping");
    s->add_option("--transcripts", ref_path_, "Manifest with reference transcriptions")->required();
    s->add_option("--a", a_path_, "System A outputs (JSONL)")->required();
    s->add_option("--b", b_path_, "System B outputs (JSONL)");
    s->add_option("--b-sweep", b_sweep_, "SIZE=FILE system B outputs per mix size (repeatable)");
    s->add_option("--name-a", name_a_, "System A label")->capture_default_str();
    s->add_option("--name-b", name_b_, "System B label")->capture_default_str();
    s->add_option("--judge", judge_spec_, "mock, stdio:CMD or http://HOST:PORT (key from SENSSUM_JUDGE_KEY)")
        ->capture_default_str();
    s->add_option("--template", template_path_, "Prompt template file");
    s->add_option("--out", out_path_, "Full results (JSON)");
    add_backend_flags(s);
  }
  {
    auto* s = sub(&app_, "report", "Render the results table");
    s->add_option("--system", systems_, "NAME=SCORES.jsonl (repeatable)")->required();
    s->add_option("--resamples", resamples_, "Bootstrap resamples")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--level", level_, "Confidence level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    s->add_option("--json", out_path_, "Also write the summaries as JSON");
  }
  {
    auto* s = sub(&app_, "stats", "Manifest statistics");
    s->add_option("--in", in_path_, "Manifest")->required();
    s->add_option("--unit", unit_str_, "Token unit for compression rates")
        ->check(CLI::IsMember({"word", "character"}))
        ->capture_default_str();
  }
  {
    auto* bpe = sub(&app_, "bpe", "Byte-pair-encoding vocabulary", false);
    bpe->require_subcommand(1);
    auto* t = sub(bpe, "train", "Learn merges from a text corpus (one text per line)");
    t->add_option("--corpus", in_path_, "Corpus file")->required();
    t->add_option("--vocab-size", bpe_size_, "Target vocabulary size (specials included)")->capture_default_str();
    t->add_option("--out", out_path_, "Merge table output")->required();
    auto* e = sub(bpe, "encode", "Encode text lines to space-separated tokens");
    e->add_option("--table", table_path_, "Merge table")->required();
    e->add_option("--in", in_path_, "Text file (one text per line)")->required();
    e->add_option("--out", out_path_, "Output (default stdout)");
    e->add_flag("--ids", use_idf_, "Emit vocabulary ids instead of tokens");
    auto* d = sub(bpe, "decode", "Decode space-separated token lines to text");
    d->add_option("--table", table_path_, "Merge table")->required();
    d->add_option("--in", in_path_, "Token file (one sequence per line)")->required();
    d->add_option("--out", out_path_, "Output (default stdout)");
  }
  {
    auto* s = sub(&app_, "sweep", "Run the complete toy distillation experiment");
    s->add_option("--vocab-size", sweep_.content_vocab_size, "Content pseudo-words")->capture_default_str();
    s->add_option("--core", sweep_.core_size, "Core pairs")->capture_default_str();
    s->add_option("--pool", sweep_.pool_size, "Unlabeled pool size")->capture_default_str();
    s->add_option("--eval", sweep_.eval_size, "Evaluation pairs")->capture_default_str();
    s->add_option("--pseudo-sizes", sweep_.pseudo_sizes, "Pseudo-labeled records per mix")
        ->capture_default_str();
    s->add_option("--speech-cer", sweep_.speech_cer, "Speech surrogate character error rate")->capture_default_str();
    s->add_option("--asr-cer", sweep_.asr_cer, "Mock ASR character error rate")->capture_default_str();
    s->add_option("--max-edit", sweep_.max_edit, "Edit tolerance of the toy TSum")->capture_default_str();
    s->add_option("--alpha", sweep_.alpha, "Salience smoothing")->capture_default_str();
    s->add_option("--threshold", sweep_.threshold, "Salience keep threshold")->capture_default_str();
    s->add_option("--copy-fillers", sweep_.copy_fillers, "Fillers copied by the copy-prone TSum")->capture_default_str();
    s->add_option("--resamples", sweep_.resamples, "Bootstrap resamples")->capture_default_str();
    s->add_option("--json", sweep_json_, "Write all results (JSON)");
  }
  {
    auto* s = sub(&app_, "serve", "Serve a toy backend over the wire protocol");
    s->add_option("--kind", kind_str_, "asr, tsum, e2e or judge")
        ->check(CLI::IsMember({"asr", "tsum", "e2e", "judge"}))
        ->required();
    s->add_option("--handler", backend_spec_, "echo, toy-asr[:CER], toy-tsum:TASK[:COPY], toy-e2e:MODEL")->required();
    s->add_option("--http", http_addr_, "Listen on HOST:PORT instead of stdin/stdout");
    s->add_option("--max-edit", bopts_.max_edit, "Edit tolerance of toy-tsum matching")->capture_default_str();
  }
  {
    auto* s = sub(&app_, "conformance", "Check a backend against the golden wire suite");
    s->add_option("--kind", kind_str_, "asr, tsum, e2e or judge")
        ->check(CLI::IsMember({"asr", "tsum", "e2e", "judge"}))
        ->default_val("asr")
        ->capture_default_str();
    s->add_option("--backend", backend_spec_, "stdio:CMD or http://HOST:PORT");
    s->add_flag("--echo", echo_, "Also require output == input");
    s->add_flag("--dump-suite", dump_suite_, "Print the golden requests (JSONL) and exit");
    s->add_option("--timeout", bopts_.timeout_sec, "Per-request timeout (s)")->capture_default_str();
  }
}

inline int App::dispatch() {
  auto is = [&](const char* key) { return subs_.at(key)->parsed(); };
  if (is("gen-synthetic")) return cmd_gen_synthetic();
  if (is("split")) return cmd_split();
  if (is("filter-pool")) return cmd_filter_pool();
  if (is("pseudo-label")) return cmd_pseudo_label();
  if (is("mix")) return cmd_mix();
  if (is("train-toy")) return cmd_train_toy();
  if (is("transduce")) return cmd_transduce();
  if (is("score")) return cmd_score();
  if (is("ci")) return cmd_ci();
  if (is("abtest")) return cmd_abtest();
  if (is("report")) return cmd_report();
  if (is("stats")) return cmd_stats();
  if (is("bpe train")) return cmd_bpe_train();
  if (is("bpe encode")) return cmd_bpe_encode();
  if (is("bpe decode")) return cmd_bpe_decode();
  if (is("sweep")) return cmd_sweep();
  if (is("serve")) return cmd_serve();
  if (is("conformance")) return cmd_conformance();
  throw UsageError("no subcommand");
}

inline int App::cmd_gen_synthetic() {
  toy::SyntheticTaskConfig task;
  if (!task_path_.empty()) {
    task = toy::task_config_from_json(detail::read_json(task_path_));
  } else {
    task.content_vocab = toy::make_content_vocab(vocab_size_, derive_seed(seed_, kStageVocab));
    task.filler_vocab = toy::default_fillers();
  }
  auto opt_set = [&](const char* flag) { return subs_.at("gen-synthetic")->count(flag) > 0; };
  if (task_path_.empty() || opt_set("--content-min")) task.content_per_sentence.lo = content_lo_;
  if (task_path_.empty() || opt_set("--content-max")) task.content_per_sentence.hi = content_hi_;
  if (task_path_.empty() || opt_set("--filler-min")) task.filler_per_content.lo = filler_lo_;
  if (task_path_.empty() || opt_set("--filler-max")) task.filler_per_content.hi = filler_hi_;
  task.n_sentences = n_sentences_;
  task.seed = derive_seed(seed_, kStageCorpus);
  task.id_prefix = id_prefix_;
  task.split = *parse_split(split_str_);
  task.validate();
  auto corpus = toy::gen_synthetic_corpus(task);
  Manifest m = std::move(corpus.manifest);
  if (speech_cer_ > 0.0)
    m = toy::attach_speech_surrogate(
        std::move(m), toy::CorruptionChannel::with_total_rate(speech_cer_, derive_seed(seed_, kStageSpeech)));
  save_manifest(out_path_, m);
  if (!save_task_path_.empty()) detail::write_file(save_task_path_, detail::dump(to_json(task)));
  nlohmann::ordered_json j;
  j["records"] = m.size();
  j["mean_cr_percent"] = corpus.mean_cr_percent;
  out_ << j.dump() << "\n";
  return kExitOk;
}

inline int App::cmd_split() {
  auto [core, rest] = split_core(load_manifest(in_path_), k_);
  save_manifest(core_path_, core);
  save_manifest(rest_path_, rest);
  out_ << nlohmann::ordered_json{{"core", core.size()}, {"remaining", rest.size()}}.dump() << "\n";
  return kExitOk;
}


inline int App::cmd_filter_pool() {
  FilterRule rule;
  rule.min_chars = min_chars_;
  if (!patterns_.empty()) rule.sentence_end_patterns = patterns_;
  auto res = filter_kd_pool(load_manifest(in_path_), rule);
  save_manifest(out_path_, res.manifest);
  const auto rep = detail::dump(to_json(res.report));
  if (report_path_.empty()) out_ << rep;
  else detail::write_file(report_path_, rep);
  return kExitOk;
}

inline int App::cmd_pseudo_label() {
  kd::KdConfig cfg;
  cfg.mode = *kd::parse_mode(mode_str_);
  cfg.seed = seed_;
  cfg.beam_width = beam_width_;
  if (filter_) {
    FilterRule rule;
    rule.min_chars = min_chars_;
    if (!patterns_.empty()) rule.sentence_end_patterns = patterns_;
    cfg.pool_filter = rule;
  }
  const bool hyp = cfg.mode == kd::Mode::from_asr_hypothesis;
  if (hyp && asr_spec_.empty()) throw UsageError("--asr is required in hyp mode");
  const auto o = bopts();
  // Ref mode never calls the ASR backend.
  std::unique_ptr<Backend> asr = hyp ? detail::make_cli_backend(Kind::asr, asr_spec_, o)
                                     : std::make_unique<LocalBackend>(Kind::asr, toy::echo_handler());
  auto tsum = detail::make_cli_backend(Kind::tsum, tsum_spec_, o);
  const auto pool = load_manifest(in_path_);
  note("pseudo-label: " + std::to_string(pool.size()) + " pool records");
  auto res = kd::generate_pseudo_labels(pool, *asr, *tsum, cfg);
  save_manifest(out_path_, res.manifest);
  if (!log_path_.empty()) {
    std::ostringstream ss;
    kd::write_log(ss, res.log);
    detail::write_file(log_path_, ss.str());
  }
  nlohmann::ordered_json j;
  j["generated"] = res.manifest.size();
  j["missing_input"] = res.missing_input;
  j["backend_failures"] = res.backend_failures;
  j["empty_summaries"] = res.empty_summaries;
  if (res.filter) j["filter"] = to_json(*res.filter);
  out_ << j.dump() << "\n";
  return res.backend_failures ? kExitBackend : kExitOk;
}

inline int App::cmd_mix() {
  save_manifest(out_path_, kd::assemble_mix(load_manifest(core_path_), load_manifest(pseudo_path_), n_));
  return kExitOk;
}

inline int App::cmd_train_toy() {
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  for (const auto& p : train_paths_) {
    auto more = toy::salience_pairs(load_manifest(p));
    pairs.insert(pairs.end(), more.begin(), more.end());
  }
  if (pairs.empty()) throw DataError("train-toy: no (speech, summary) pairs in the training manifests");
  const auto model = toy::train_salience(pairs, alpha_, threshold_);
  detail::write_file(out_path_, detail::dump(to_json(model)));
  out_ << nlohmann::ordered_json{{"pairs", pairs.size()}, {"tokens", model.keep_prob.size()}}.dump() << "\n";
  return kExitOk;
}

inline int App::cmd_transduce() {
  const auto m = load_manifest(in_path_);
  std::string field = field_;
  if (field.empty()) field = kind_str_ == "tsum" ? "transcription" : "speech";
  std::vector<TransduceRequest> reqs;
  for (const auto& r : m.records) {
    std::optional<std::string> x = field == "speech" ? kd::speech_input(r)
                                   : field == "transcription" ? r.transcription
                                                              : r.summary;
    if (!x) throw DataError("record '" + r.id + "' has no " + field);
    reqs.push_back({r.id, *x, beam_width_});
  }
  const auto o = bopts();
  std::vector<TransduceResponse> resp;
  if (kind_str_ == "cascade") {
    if (asr_spec_.empty() || tsum_spec_.empty()) throw UsageError("cascade needs --asr and --tsum");
    auto asr = detail::make_cli_backend(Kind::asr, asr_spec_, o);
    auto tsum = detail::make_cli_backend(Kind::tsum, tsum_spec_, o);
    resp = cascade_transduce(*asr, *tsum, reqs);
  } else {
    if (backend_spec_.empty()) throw UsageError("--backend is required");
    const Kind kind = *parse_kind(kind_str_);
    auto b = detail::make_cli_backend(kind, backend_spec_, o);
    resp = transduce_batch(*b, reqs);
  }
  std::string text;
  std::size_t failed = 0;
  for (const auto& r : resp) {
    text += dump_wire(to_wire(r)) + "\n";
    if (!r.ok()) ++failed;
  }
  detail::write_file(out_path_, text);
  if (failed) {
    err_ << "transduce: " << failed << " of " << resp.size() << " requests failed\n";
    return kExitBackend;
  }
  return kExitOk;
}

inline int App::cmd_score() {
  const Unit unit = unit_str_ == "character" ? Unit::character : Unit::word;
  std::vector<ScoreLine> scores;
  if (metric_ == kMetricBertScore) {
    if (hyp_emb_.empty() || ref_emb_.empty()) throw UsageError("bertscore needs --hyp-emb and --ref-emb");
    std::map<std::string, std::size_t> hi, ri;
    const auto he = detail::read_embeddings(hyp_emb_, &hi);
    const auto re = detail::read_embeddings(ref_emb_, &ri);
    for (const auto& item : detail::read_texts(hyp_path_, hyp_field_)) {
      auto h = hi.find(item.id);
      auto r = ri.find(item.id);
      if (h == hi.end() || r == ri.end()) throw DataError("no embeddings for id " + item.id);
      scores.push_back({item.id, metric_, bertscore_greedy(he[h->second], re[r->second], {use_idf_}).f});
    }
  } else {
    std::string ref_field = ref_field_;
    if (ref_field.empty() && metric_ != kMetricRougeL) ref_field = "transcription";
    const auto refs = detail::by_id(detail::read_texts(ref_path_, ref_field), "references");
    for (const auto& item : detail::read_texts(hyp_path_, hyp_field_)) {
      auto it = refs.find(item.id);
      if (it == refs.end()) throw DataError("no reference for id " + item.id);
      double v = 0.0;
      if (metric_ == kMetricRougeL) {
        v = rouge_l(tokenize(item.text, unit), tokenize(it->second, unit)).f;
      } else if (metric_ == kMetricCr) {
        v = compression_rate(tokenize(item.text, unit), tokenize(it->second, unit));
      } else {
        const Unit u = metric_ == "cer" ? Unit::character : Unit::word;
        v = error_rate(tokenize(item.text, u), tokenize(it->second, u));
      }
      scores.push_back({item.id, metric_, v});
    }
  }
  if (!out_path_.empty()) {
    std::ostringstream ss;
    write_scores(ss, scores);
    detail::write_file(out_path_, ss.str());
  }
  double sum = 0.0;
  for (const auto& s : scores) sum += s.value;
  nlohmann::ordered_json j;
  j["metric"] = metric_;
  j["n"] = scores.size();
  j["mean"] = scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
  out_ << j.dump() << "\n";
  return kExitOk;
}

inline double display_scale(const std::string& metric) { return metric == kMetricCr ? 1.0 : 100.0; }

inline int App::cmd_ci() {
  std::istringstream in(detail::read_file(in_path_));
  const auto groups = group_scores(read_scores(in));
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [metric, values] : groups) {
    if (!metric_.empty() && metric != metric_) continue;
    const auto s = bootstrap_ci(values, resamples_, level_, seed_);
    auto e = to_json(s);
    e["cell"] = format_summary(s, display_scale(metric));
    j[metric] = std::move(e);
  }
  if (j.empty()) throw DataError("no scores" + (metric_.empty() ? std::string() : " for metric " + metric_));
  out_ << detail::dump(j);
  return kExitOk;
}

inline int App::cmd_abtest() {
  if (b_path_.empty() == b_sweep_.empty()) throw UsageError("give exactly one of --b and --b-sweep");
  const auto transcripts = detail::by_id(detail::read_texts(ref_path_, "transcription"), "transcripts");
  const auto a_items = detail::read_texts(a_path_, "");
  std::string tmpl(judge::kDefaultTemplate);
  if (!template_path_.empty()) tmpl = detail::read_file(template_path_);

  std::unique_ptr<judge::Judge> jd;
  if (judge_spec_ == "mock") {
    jd = std::make_unique<judge::MockJudge>();
  } else {
    jd = std::make_unique<judge::BackendJudge>(
        detail::make_cli_backend(Kind::judge, judge_spec_, bopts(), detail::judge_headers()));
  }

  auto run_one = [&](const std::string& b_path) {
    const auto b = detail::by_id(detail::read_texts(b_path, ""), "system b");
    std::vector<judge::ABItem> items;
    for (const auto& a : a_items) {
      auto t = transcripts.find(a.id);
      auto bi = b.find(a.id);
      if (t == transcripts.end()) throw DataError("no transcription for id " + a.id);
      if (bi == b.end()) throw DataError("system b has no output for id " + a.id);
      items.push_back({a.id, t->second, a.text, bi->second, name_a_, name_b_});
    }
    return judge::judge_batch(items, *jd, derive_seed(seed_, kStageJudge), tmpl);
  };

  nlohmann::ordered_json j;
  j["system_a"] = name_a_;
  j["system_b"] = name_b_;
  bool failures = false;
  if (!b_path_.empty()) {
    const auto r = run_one(b_path_);
    failures = r.aggregate.failures > 0;
    out_ << to_json(r.aggregate).dump() << "\n";
    auto full = to_json(r);
    j["per_item"] = full["per_item"];
    j["aggregate"] = full["aggregate"];
  } else {
    std::vector<std::pair<std::size_t, judge::PreferenceResult>> results;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& spec : b_sweep_) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw UsageError("--b-sweep expects SIZE=FILE, got " + spec);
      std::size_t size = 0;
      try {
        size = std::stoul(spec.substr(0, eq));
      } catch (const std::exception&) {
        throw UsageError("--b-sweep: bad size in " + spec);
      }
      const auto r = run_one(spec.substr(eq + 1));
      failures = failures || r.aggregate.failures > 0;
      results.emplace_back(size, r.aggregate);
      per[std::to_string(size)] = to_json(r.aggregate);
    }
    auto curve = nlohmann::ordered_json::array();
    for (const auto& p : judge::preference_curve(results, judge::Side::b))
      curve.push_back({{"mix_size", p.mix_size}, {"pct_e2e", p.pct_e2e}});
    j["results"] = per;
    j["curve"] = curve;
    out_ << curve.dump() << "\n";
  }
  if (!out_path_.empty()) detail::write_file(out_path_, detail::dump(j));
  return failures ? kExitBackend : kExitOk;
}

inline int App::cmd_report() {
  std::vector<SystemResult> systems;
  for (const auto& spec : systems_) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--system expects NAME=FILE, got " + spec);
    std::istringstream in(detail::read_file(spec.substr(eq + 1)));
    SystemResult s{spec.substr(0, eq), {}};
    for (const auto& [metric, values] : group_scores(read_scores(in)))
      s.metrics[metric] = bootstrap_ci(values, resamples_, level_, seed_);
    systems.push_back(std::move(s));
  }
  out_ << render_report(systems);
  if (!out_path_.empty()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& s : systems) {
      nlohmann::ordered_json m = nlohmann::ordered_json::object();
      for (const auto& [name, summary] : s.metrics) m[name] = to_json(summary);
      j[s.name] = m;
    }
    detail::write_file(out_path_, detail::dump(j));
  }
  return kExitOk;
}

inline int App::cmd_stats() {
  out_ << detail::dump(to_json(manifest_stats(load_manifest(in_path_),
                                              unit_str_ == "character" ? Unit::character : Unit::word)));
  return kExitOk;
}

inline int App::cmd_bpe_train() {
  const auto table = bpe::train_bpe(detail::read_lines(in_path_), bpe_size_);
  detail::write_file(out_path_, table.serialize());
  out_ << nlohmann::ordered_json{{"merges", table.merges().size()}, {"vocab_size", table.vocab_size()}}.dump()
       << "\n";
  return kExitOk;
}

namespace detail {
inline bpe::MergeTable load_table(const std::string& path) {
  return bpe::MergeTable::parse(read_file(path));
}

inline void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty()) out << text;
  else write_file(path, text);
}
}  // namespace detail

inline int App::cmd_bpe_encode() {
  const auto table = detail::load_table(table_path_);
  std::string text;
  for (const auto& line : detail::read_lines(in_path_)) {
    const auto toks = bpe::encode(table, line);
    if (use_idf_) {
      std::string row;
      for (int id : bpe::to_ids(table, toks)) row += (row.empty() ? "" : " ") + std::to_string(id);
      text += row + "\n";
    } else {
      text += toks.join() + "\n";
    }
  }
  detail::emit(out_path_, out_, text);
  return kExitOk;
}

inline int App::cmd_bpe_decode() {
  const auto table = detail::load_table(table_path_);
  std::string text;
  for (const auto& line : detail::read_lines(in_path_)) {
    std::vector<std::string> toks;
    for (auto t : unicode::split_whitespace(line)) toks.emplace_back(t);
    text += bpe::decode(table, TokenSeq(std::move(toks))) + "\n";
  }
  detail::emit(out_path_, out_, text);
  return kExitOk;
}

inline nlohmann::ordered_json to_json(const toy::SweepResult& r) {
  nlohmann::ordered_json j;
  j["asr_cer_measured"] = r.asr_cer_measured;
  j["mean_cr_train"] = r.mean_cr_train;
  j["pseudo_hyp_count"] = r.pseudo_hyp_count;
  j["pseudo_ref_count"] = r.pseudo_ref_count;
  nlohmann::ordered_json sys = nlohmann::ordered_json::object();
  auto add = [&](const toy::SystemRun& s) {
    sys[s.name] = {{"rouge-l", to_json(s.rouge_summary)}, {"cr", to_json(s.cr_summary)}};
  };
  add(r.cascade);
  add(r.e2e_base);
  for (const auto& [n, s] : r.e2e_kd_hyp) add(s);
  for (const auto& [n, s] : r.e2e_kd_ref) add(s);
  j["systems"] = sys;
  nlohmann::ordered_json pref = nlohmann::ordered_json::object();
  for (const auto& [n, p] : r.preference) pref[std::to_string(n)] = judge::to_json(p);
  j["preference"] = pref;
  j["extractiveness"] = {{"pseudo_vs_transcript", to_json(r.extractiveness.rl_pseudo_vs_transcript)},
                         {"human_vs_transcript", to_json(r.extractiveness.rl_human_vs_transcript)}};
  return j;
}

inline int App::cmd_sweep() {
  auto cfg = sweep_;
  cfg.seed = seed_;
  cfg.max_inflight = max_inflight_;
  const auto r = toy::run_sweep(cfg);
  out_ << render_report(r.table());
  out_ << "ASR CER: " << format_mean_halfwidth(100.0 * r.asr_cer_measured, 0.0) << "%\n";
  out_ << "Judge preference for E2E-KD over Cascade (%):";
  for (const auto& [n, p] : r.preference) out_ << " " << n << "=" << format_mean_halfwidth(p.pct_b, 0.0);
  out_ << "\nROUGE-L vs transcription: pseudo "
       << format_summary(r.extractiveness.rl_pseudo_vs_transcript, 100.0) << ", human "
       << format_summary(r.extractiveness.rl_human_vs_transcript, 100.0) << "\n";
  if (!sweep_json_.empty()) detail::write_file(sweep_json_, detail::dump(to_json(r)));
  return kExitOk;
}

inline int App::cmd_serve() {
  const Kind kind = *parse_kind(kind_str_);
  (void)kind;
  auto handler = detail::make_toy_handler(backend_spec_, bopts());
  if (!handler) throw UsageError("serve: unknown handler '" + backend_spec_ + "'");
  if (http_addr_.empty()) {
    serve_stdio(*handler, in_, out_);
    return kExitOk;
  }
  const auto colon = http_addr_.rfind(':');
  if (colon == std::string::npos) throw UsageError("--http expects HOST:PORT");
  int port = 0;
  try {
    port = std::stoi(http_addr_.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--http: bad port");
  }
  httplib::Server server;
  install_http_handler(server, *handler);
  note("serving on " + http_addr_);
  if (!server.listen(http_addr_.substr(0, colon), port)) throw BackendError("cannot listen on " + http_addr_);
  return kExitOk;
}

inline int App::cmd_conformance() {
  const Kind kind = *parse_kind(kind_str_);
  if (dump_suite_) {
    for (const auto& c : conformance::golden_suite(kind)) out_ << dump_wire(to_json(c)) << "\n";
    return kExitOk;
  }
  if (backend_spec_.empty()) throw UsageError("--backend is required");
  auto ep = parse_endpoint(kind, backend_spec_);
  ep.timeout_sec = bopts_.timeout_sec;
  ep.max_inflight = max_inflight_;
  conformance::Options opts;
  opts.expect_echo = echo_;
  const auto results = conformance::run_conformance(ep, opts);
  for (const auto& r : results)
    out_ << (r.passed ? "PASS " : "FAIL ") << r.name << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
  return conformance::all_passed(results) ? kExitOk : kExitBackend;
}

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  App app(in, out, err);
  return app.run(args);
}

}  // namespace senssum::cli
