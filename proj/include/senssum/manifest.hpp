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

// Sen-SSum corpus records, JSONL manifests, core/remaining splits, KD-pool
// filtering and corpus statistics.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "senssum/error.hpp"
#include "senssum/metrics.hpp"
#include "senssum/tokens.hpp"
#include "senssum/unicode.hpp"

namespace senssum {

using ordered_json = nlohmann::ordered_json;

enum class Split { train, core, eval };
enum class Origin { human, pseudo_hyp, pseudo_ref };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::core: return "core";
    case Split::eval: return "eval";
  }
  return "train";
}

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::human: return "human";
    case Origin::pseudo_hyp: return "pseudo_hyp";
    case Origin::pseudo_ref: return "pseudo_ref";
  }
  return "human";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "core") return Split::core;
  if (s == "eval") return Split::eval;
  return std::nullopt;
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "human") return Origin::human;
  if (s == "pseudo_hyp") return Origin::pseudo_hyp;
  if (s == "pseudo_ref") return Origin::pseudo_ref;
  return std::nullopt;
}

inline bool is_pseudo(Origin o) { return o != Origin::human; }

struct Record {
  std::string id;
  std::optional<std::string> audio;
  std::optional<std::string> transcription;
  std::optional<std::string> summary;
  Split split = Split::train;
  Origin origin = Origin::human;
  std::optional<std::string> speaker;
  std::optional<double> duration_sec;
  // Unknown keys (e.g. "speech_surrogate"), kept in load order.
  ordered_json extra = ordered_json::object();

  bool labeled() const { return transcription.has_value() && summary.has_value(); }

  std::optional<std::string> extra_string(const std::string& key) const {
    auto it = extra.find(key);
    if (it == extra.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
  }

  // Why this record violates a Record invariant, or empty.
  std::string invariant_violation() const {
    if (id.empty()) return "empty id";
    if (is_pseudo(origin) && !summary) return "pseudo record without summary";
    if (split == Split::core && !labeled()) return "core record lacks transcription or summary";
    if (duration_sec && !(*duration_sec >= 0.0)) return "negative duration_sec";
    return {};
  }

  friend bool operator==(const Record&, const Record&) = default;
};

inline constexpr const char* kSpeechSurrogateKey = "speech_surrogate";

inline ordered_json to_json(const Record& r) {
  ordered_json j = ordered_json::object();
  auto opt = [](const auto& v) -> ordered_json { return v ? ordered_json(*v) : ordered_json(); };
  j["id"] = r.id;
  j["audio"] = opt(r.audio);
  j["transcription"] = opt(r.transcription);
  j["summary"] = opt(r.summary);
  j["split"] = std::string(to_string(r.split));
  j["origin"] = std::string(to_string(r.origin));
  j["speaker"] = opt(r.speaker);
  j["duration_sec"] = opt(r.duration_sec);
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j;
}

inline std::string to_jsonl_line(const Record& r) {
  return to_json(r).dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

// Throws DataError with a description; callers attach line numbers.
inline Record record_from_json(const ordered_json& j) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  Record r;
  auto str = [&](const char* key, bool required) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw DataError(std::string("missing required key '") + key + "'");
      return std::nullopt;
    }
    if (!it->is_string()) throw DataError(std::string("key '") + key + "' must be a string");
    return it->get<std::string>();
  };
  r.id = *str("id", true);
  r.audio = str("audio", false);
  r.transcription = str("transcription", false);
  r.summary = str("summary", false);
  const auto split = str("split", true);
  const auto s = parse_split(*split);
  if (!s) throw DataError("unknown split '" + *split + "'");
  r.split = *s;
  const auto origin = str("origin", true);
  const auto o = parse_origin(*origin);
  if (!o) throw DataError("unknown origin '" + *origin + "'");
  r.origin = *o;
  r.speaker = str("speaker", false);
  if (auto it = j.find("duration_sec"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw DataError("key 'duration_sec' must be a number");
    r.duration_sec = it->get<double>();
  }
  static const std::set<std::string> known = {"id", "audio", "transcription", "summary",
                                              "split", "origin", "speaker", "duration_sec"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) r.extra[k] = v;
  if (auto why = r.invariant_violation(); !why.empty()) throw DataError(why);
  return r;
}

struct Manifest {
  std::string name;
  std::vector<Record> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  // Throws InvalidInput on duplicate ids or per-record invariant violations.
  void validate() const {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (auto why = r.invariant_violation(); !why.empty())
        throw InvalidInput("record " + std::to_string(i) + " ('" + r.id + "'): " + why);
      if (!seen.insert(r.id).second) throw InvalidInput("duplicate id '" + r.id + "'");
    }
  }

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline Manifest parse_manifest(std::istream& in, std::string name = {}) {
  Manifest m;
  m.name = std::move(name);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(lineno, std::string("malformed JSON: ") + e.what());
    }
    Record r;
    try {
      r = record_from_json(j);
    } catch (const DataError& e) {
      throw LoadError(lineno, e.what());
    }
    if (!seen.insert(r.id).second) throw LoadError(lineno, "duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.stem().string());
}

inline void write_manifest(std::ostream& out, const Manifest& m) {
  for (const auto& r : m.records) out << to_jsonl_line(r) << '\n';
}

inline std::string manifest_to_string(const Manifest& m) {
  std::ostringstream os;
  write_manifest(os, m);
  return os.str();
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  write_manifest(out, m);
}

// First k records form the core set; the rest is the remaining set.
inline std::pair<Manifest, Manifest> split_core(const Manifest& m, std::size_t k) {
  if (k > m.size())
    throw InvalidInput("split_core: k=" + std::to_string(k) + " exceeds manifest size " +
                       std::to_string(m.size()));
  for (std::size_t i = 0; i < k; ++i)
    if (!m.records[i].labeled())
      throw InvalidInput("split_core: record '" + m.records[i].id +
                         "' inside the core prefix lacks transcription or summary");
  Manifest core{m.name + ".core", {m.records.begin(), m.records.begin() + static_cast<long>(k)}};
  Manifest rest{m.name + ".remaining",
                {m.records.begin() + static_cast<long>(k), m.records.end()}};
  return {std::move(core), std::move(rest)};
}

inline const std::vector<std::string>& default_sentence_endings() {
  static const std::vector<std::string> v = {"。", "．", ".", "?", "!", "？", "！"};
  return v;
}

// Keeps records whose transcription is longer than min_chars scalar values
// (after NFC) and ends with one of the suffix patterns.
struct FilterRule {
  std::size_t min_chars = 10;
  std::vector<std::string> sentence_end_patterns = default_sentence_endings();

  static FilterRule identity() { return {0, {""}}; }

  bool accepts(std::string_view transcription) const {
    const std::string norm = unicode::nfc(transcription);
    if (unicode::count_scalars(norm) <= min_chars) return false;
    return ends_with_pattern(norm);
  }

  bool ends_with_pattern(std::string_view norm) const {
    for (const auto& p : sentence_end_patterns)
      if (norm.ends_with(p)) return true;
    return false;
  }
};

struct FilterReport {
  std::size_t kept = 0;
  std::size_t rejected_short = 0;
  std::size_t rejected_no_ending = 0;
  std::size_t missing_transcription = 0;

  std::size_t rejected() const { return rejected_short + rejected_no_ending + missing_transcription; }
};

inline ordered_json to_json(const FilterReport& r) {
  ordered_json j;
  j["kept"] = r.kept;
  j["rejected_short"] = r.rejected_short;
  j["rejected_no_ending"] = r.rejected_no_ending;
  j["missing_transcription"] = r.missing_transcription;
  return j;
}

struct FilterResult {
  Manifest manifest;
  FilterReport report;
};

inline FilterResult filter_kd_pool(const Manifest& m, const FilterRule& rule) {
  if (rule.sentence_end_patterns.empty())
    throw InvalidInput("filter_kd_pool: rule has no sentence-end patterns");
  FilterResult out;
  out.manifest.name = m.name;
  for (const auto& r : m.records) {
    if (!r.transcription) {
      ++out.report.missing_transcription;
      continue;
    }
    const std::string norm = unicode::nfc(*r.transcription);
    if (unicode::count_scalars(norm) <= rule.min_chars) {
      ++out.report.rejected_short;
    } else if (!rule.ends_with_pattern(norm)) {
      ++out.report.rejected_no_ending;
    } else {
      ++out.report.kept;
      out.manifest.records.push_back(r);
    }
  }
  return out;
}

struct ManifestStats {
  std::size_t n_samples = 0;
  std::size_t n_speakers = 0;
  double total_dur_hrs = 0.0;
  double mean_dur_sec = 0.0;
  double mean_cr_percent = 0.0;
  std::size_t n_with_duration = 0;
  std::size_t n_with_cr = 0;
};

// Mean CR is the mean of per-record compression rates over records with both
// transcription and summary (and a nonempty transcription).
inline ManifestStats manifest_stats(const Manifest& m, Unit unit = Unit::word) {
  ManifestStats s;
  s.n_samples = m.size();
  std::set<std::string> speakers;
  double dur = 0.0, cr = 0.0;
  for (const auto& r : m.records) {
    if (r.speaker) speakers.insert(*r.speaker);
    if (r.duration_sec) {
      dur += *r.duration_sec;
      ++s.n_with_duration;
    }
    if (r.labeled()) {
      const auto input = tokenize(*r.transcription, unit);
      if (input.empty()) continue;
      cr += compression_rate(tokenize(*r.summary, unit), input);
      ++s.n_with_cr;
    }
  }
  s.n_speakers = speakers.size();
  s.total_dur_hrs = dur / 3600.0;
  s.mean_dur_sec = s.n_with_duration ? dur / static_cast<double>(s.n_with_duration) : 0.0;
  s.mean_cr_percent = s.n_with_cr ? cr / static_cast<double>(s.n_with_cr) : 0.0;
  return s;
}

inline ordered_json to_json(const ManifestStats& s) {
  ordered_json j;
  j["n_samples"] = s.n_samples;
  j["n_speakers"] = s.n_speakers;
  j["total_dur_hrs"] = s.total_dur_hrs;
  j["mean_dur_sec"] = s.mean_dur_sec;
  j["mean_cr_percent"] = s.mean_cr_percent;
  j["n_with_duration"] = s.n_with_duration;
  j["n_with_cr"] = s.n_with_cr;
  return j;
}

}  // namespace senssum
