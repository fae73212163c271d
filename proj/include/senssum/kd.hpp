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

// Sequence-level knowledge distillation: pseudo-summaries from a cascade over
// the unlabeled pool, nested training mixes, and extractiveness measurement.

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "senssum/bootstrap.hpp"
#include "senssum/error.hpp"
#include "senssum/manifest.hpp"
#include "senssum/metrics.hpp"
#include "senssum/protocol.hpp"
#include "senssum/tokens.hpp"

namespace senssum::kd {

enum class Mode { from_asr_hypothesis, from_reference_transcription };

inline std::string_view to_string(Mode m) {
  return m == Mode::from_asr_hypothesis ? "hyp" : "ref";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "hyp" || s == "from_asr_hypothesis") return Mode::from_asr_hypothesis;
  if (s == "ref" || s == "from_reference_transcription") return Mode::from_reference_transcription;
  return std::nullopt;
}

struct KdConfig {
  Mode mode = Mode::from_asr_hypothesis;
  // Applied to the pool before generation; unset means no filtering.
  std::optional<FilterRule> pool_filter;
  // Total mix sizes (core included), ascending.
  std::vector<std::size_t> mix_sizes;
  std::uint64_t seed = 0;
  int beam_width = kDefaultBeamWidth;

  void validate(std::size_t core_size) const {
    for (std::size_t i = 0; i < mix_sizes.size(); ++i) {
      if (mix_sizes[i] < core_size)
        throw InvalidInput("kd config: mix size " + std::to_string(mix_sizes[i]) +
                           " smaller than core size " + std::to_string(core_size));
      if (i > 0 && mix_sizes[i] < mix_sizes[i - 1])
        throw InvalidInput("kd config: mix sizes must be ascending");
    }
    if (beam_width < 1) throw InvalidInput("kd config: beam_width must be >= 1");
  }
};

struct LogEntry {
  std::string id;
  std::string stage;
  double latency_ms = 0.0;
  std::optional<std::string> error;
};

inline nlohmann::ordered_json to_json(const LogEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["stage"] = e.stage;
  j["latency_ms"] = e.latency_ms;
  j["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json();
  return j;
}

inline void write_log(std::ostream& out, const std::vector<LogEntry>& log) {
  for (const auto& e : log) out << dump_wire(to_json(e)) << '\n';
}

struct PseudoLabelResult {
  Manifest manifest;
  std::optional<FilterReport> filter;
  std::size_t missing_input = 0;
  std::size_t backend_failures = 0;
  std::size_t empty_summaries = 0;
  std::vector<LogEntry> log;
};

// The speech input of a record: its audio reference if present, else the
// text surrogate.
inline std::optional<std::string> speech_input(const Record& r) {
  if (r.audio) return r.audio;
  return r.extra_string(kSpeechSurrogateKey);
}

// Pseudo-summary per pool record: TSum(ASR(x)) in hypothesis mode, or
// TSum(reference transcription) in reference mode, where the ASR backend
// is never called. Output mirrors pool order; records whose generation
// failed or came back empty are dropped and counted.
inline PseudoLabelResult generate_pseudo_labels(const Manifest& pool, Backend& asr, Backend& tsum,
                                                const KdConfig& cfg) {
  PseudoLabelResult out;
  out.manifest.name = pool.name + ".pseudo";

  const Manifest* source = &pool;
  Manifest filtered;
  if (cfg.pool_filter) {
    auto fr = filter_kd_pool(pool, *cfg.pool_filter);
    filtered = std::move(fr.manifest);
    out.filter = fr.report;
    source = &filtered;
  }
  if (source->empty()) throw InvalidInput("pseudo-label: pool is empty after filtering");

  const bool ref_mode = cfg.mode == Mode::from_reference_transcription;
  std::vector<TransduceRequest> reqs;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < source->size(); ++i) {
    const auto& r = source->records[i];
    const auto input = ref_mode ? r.transcription : speech_input(r);
    if (!input) {
      ++out.missing_input;
      out.log.push_back({r.id, "input", 0.0,
                         ref_mode ? "missing transcription" : "missing audio/speech surrogate"});
      continue;
    }
    reqs.push_back({r.id, *input, cfg.beam_width});
    index.push_back(i);
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<TransduceResponse> resp;
  if (ref_mode) {
    resp = transduce_batch(tsum, reqs);
  } else {
    resp = cascade_transduce(asr, tsum, reqs);
  }
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  const double per_ms = reqs.empty() ? 0.0 : total_ms / static_cast<double>(reqs.size());
  const std::string stage = ref_mode ? "tsum" : "cascade";

  for (std::size_t k = 0; k < resp.size(); ++k) {
    const auto& r = source->records[index[k]];
    out.log.push_back({r.id, stage, per_ms, resp[k].error});
    if (!resp[k].ok()) {
      ++out.backend_failures;
      continue;
    }
    if (word_tokenize(resp[k].output).empty()) {
      ++out.empty_summaries;
      continue;
    }
    Record p = r;
    p.summary = resp[k].output;
    p.origin = ref_mode ? Origin::pseudo_ref : Origin::pseudo_hyp;
    out.manifest.records.push_back(std::move(p));
  }
  return out;
}

// Core followed by the first n_pseudo pseudo records.
inline Manifest assemble_mix(const Manifest& core, const Manifest& pseudo, std::size_t n_pseudo) {
  if (n_pseudo > pseudo.size())
    throw InvalidInput("assemble_mix: requested " + std::to_string(n_pseudo) +
                       " pseudo records but only " + std::to_string(pseudo.size()) + " exist");
  for (std::size_t i = 0; i < n_pseudo; ++i) {
    const auto& r = pseudo.records[i];
    if (!is_pseudo(r.origin)) throw InvalidInput("assemble_mix: record '" + r.id + "' is not pseudo");
    if (!r.summary || word_tokenize(*r.summary).empty())
      throw InvalidInput("assemble_mix: pseudo record '" + r.id + "' has an empty summary");
  }
  Manifest mix;
  mix.name = core.name + "+" + std::to_string(n_pseudo);
  mix.records = core.records;
  mix.records.insert(mix.records.end(), pseudo.records.begin(),
                     pseudo.records.begin() + static_cast<long>(n_pseudo));
  mix.validate();
  return mix;
}

// One mix per configured total size.
inline std::vector<Manifest> mix_schedule(const Manifest& core, const Manifest& pseudo,
                                          const KdConfig& cfg) {
  cfg.validate(core.size());
  std::vector<Manifest> out;
  for (auto total : cfg.mix_sizes) out.push_back(assemble_mix(core, pseudo, total - core.size()));
  return out;
}

struct ExtractivenessReport {
  MetricSummary rl_pseudo_vs_transcript;
  MetricSummary rl_human_vs_transcript;
  std::size_t skipped_pseudo = 0;
  std::size_t skipped_human = 0;
};

// Per-record ROUGE-L F of summary against its own transcription.
inline std::vector<double> rouge_vs_transcript(const Manifest& m, std::size_t* skipped = nullptr) {
  std::vector<double> scores;
  std::size_t skip = 0;
  for (const auto& r : m.records) {
    if (!r.labeled()) {
      ++skip;
      continue;
    }
    scores.push_back(rouge_l(word_tokenize(*r.summary), word_tokenize(*r.transcription)).f);
  }
  if (skipped) *skipped = skip;
  return scores;
}

inline ExtractivenessReport extractiveness_report(const Manifest& pseudo, const Manifest& human,
                                                  std::size_t b = kDefaultResamples,
                                                  double level = 0.95,
                                                  std::uint64_t seed = kDefaultSeed) {
  ExtractivenessReport rep;
  const auto p = rouge_vs_transcript(pseudo, &rep.skipped_pseudo);
  const auto h = rouge_vs_transcript(human, &rep.skipped_human);
  if (p.empty()) throw InvalidInput("extractiveness_report: no labeled pseudo records");
  if (h.empty()) throw InvalidInput("extractiveness_report: no labeled human records");
  rep.rl_pseudo_vs_transcript = bootstrap_ci(p, b, level, seed);
  rep.rl_human_vs_transcript = bootstrap_ci(h, b, level, seed);
  return rep;
}

}  // namespace senssum::kd
