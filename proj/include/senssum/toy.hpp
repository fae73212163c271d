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

// Deterministic desk-scale stand-ins for the speech models: a synthetic
// sentence-summarization task, a character corruption channel that plays the
// role of ASR noise, a noise-robust oracle summarizer, and a trainable
// per-token salience model used as the end-to-end summarizer.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "senssum/error.hpp"
#include "senssum/manifest.hpp"
#include "senssum/metrics.hpp"
#include "senssum/prng.hpp"
#include "senssum/protocol.hpp"
#include "senssum/tokens.hpp"
#include "senssum/unicode.hpp"

namespace senssum::toy {

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;

  std::size_t draw(Prng& rng) const { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); }
};

struct SyntheticTaskConfig {
  std::vector<std::string> content_vocab;
  std::vector<std::string> filler_vocab;
  CountRange content_per_sentence{2, 4};
  CountRange filler_per_content{1, 4};
  std::size_t n_sentences = 100;
  std::uint64_t seed = 1;
  std::string id_prefix = "syn";
  Split split = Split::train;

  void validate() const {
    if (content_vocab.empty()) throw InvalidInput("synthetic task: empty content vocabulary");
    if (filler_vocab.empty()) throw InvalidInput("synthetic task: empty filler vocabulary");
    if (content_per_sentence.lo > content_per_sentence.hi ||
        filler_per_content.lo > filler_per_content.hi)
      throw InvalidInput("synthetic task: empty count range");
    std::unordered_set<std::string> content(content_vocab.begin(), content_vocab.end());
    for (const auto& f : filler_vocab)
      if (content.count(f)) throw InvalidInput("synthetic task: '" + f + "' is content and filler");
    for (const auto* vocab : {&content_vocab, &filler_vocab})
      for (const auto& w : *vocab)
        if (w.empty() || unicode::split_whitespace(w).size() != 1)
          throw InvalidInput("synthetic task: vocabulary entries must be single words");
  }
};

inline nlohmann::ordered_json to_json(const SyntheticTaskConfig& c) {
  nlohmann::ordered_json j;
  j["content_vocab"] = c.content_vocab;
  j["filler_vocab"] = c.filler_vocab;
  j["content_per_sentence"] = {c.content_per_sentence.lo, c.content_per_sentence.hi};
  j["filler_per_content"] = {c.filler_per_content.lo, c.filler_per_content.hi};
  j["n_sentences"] = c.n_sentences;
  j["seed"] = c.seed;
  j["id_prefix"] = c.id_prefix;
  j["split"] = std::string(to_string(c.split));
  return j;
}

inline SyntheticTaskConfig task_config_from_json(const nlohmann::json& j) {
  SyntheticTaskConfig c;
  try {
    c.content_vocab = j.at("content_vocab").get<std::vector<std::string>>();
    c.filler_vocab = j.at("filler_vocab").get<std::vector<std::string>>();
    const auto cp = j.at("content_per_sentence").get<std::vector<std::size_t>>();
    const auto fp = j.at("filler_per_content").get<std::vector<std::size_t>>();
    if (cp.size() != 2 || fp.size() != 2) throw DataError("count ranges must be [lo, hi]");
    c.content_per_sentence = {cp[0], cp[1]};
    c.filler_per_content = {fp[0], fp[1]};
    c.n_sentences = j.at("n_sentences").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("id_prefix")) c.id_prefix = j["id_prefix"].get<std::string>();
    if (j.contains("split")) {
      auto s = parse_split(j["split"].get<std::string>());
      if (!s) throw DataError("unknown split");
      c.split = *s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synthetic task config: ") + e.what());
  }
  c.validate();
  return c;
}

inline const std::vector<std::string>& default_fillers() {
  static const std::vector<std::string> v = {
      "uh", "um", "so", "well", "like", "you", "know", "i", "mean", "actually",
      "basically", "right", "okay", "yeah", "just", "kind", "of", "sort", "the", "and"};
  return v;
}

// Content-word lookup tolerant to small edit distances (symmetric-delete
// index: every word is indexed under all of its deletion variants up to
// max_edit, and candidates are verified with the exact distance).
class Lexicon {
 public:
  explicit Lexicon(const std::vector<std::string>& words, std::size_t max_edit = 1)
      : max_edit_(max_edit) {
    for (const auto& w : words) add(w);
  }

  // Appends an entry; duplicates keep their first position.
  void add(const std::string& word) {
    if (exact_.count(word)) return;
    const std::size_t i = words_.size();
    words_.push_back(word);
    exact_.emplace(word, i);
    for (const auto& v : deletion_variants(word)) index_[v].push_back(i);
  }

  std::size_t max_edit() const noexcept { return max_edit_; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  bool contains(const std::string& w) const { return exact_.count(w) != 0; }

  // Closest entry within max_edit scalar edits; ties go to the earliest entry.
  std::optional<std::string> match(const std::string& token) const {
    if (auto it = exact_.find(token); it != exact_.end()) return words_[it->second];
    if (max_edit_ == 0) return std::nullopt;
    const auto q = codepoints(token);
    std::size_t best_d = max_edit_ + 1, best_i = 0;
    for (const auto& v : deletion_variants(token)) {
      auto it = index_.find(v);
      if (it == index_.end()) continue;
      for (auto i : it->second) {
        const auto w = codepoints(words_[i]);
        const std::size_t d = detail::edit_distance<std::int32_t>(q, w);
        if (d < best_d || (d == best_d && i < best_i)) {
          best_d = d;
          best_i = i;
        }
      }
    }
    if (best_d > max_edit_) return std::nullopt;
    return words_[best_i];
  }

  std::size_t distance_to_nearest(const std::string& token) const {
    if (exact_.count(token)) return 0;
    const auto q = codepoints(token);
    std::size_t best = max_edit_ + 1;
    for (const auto& v : deletion_variants(token)) {
      auto it = index_.find(v);
      if (it == index_.end()) continue;
      for (auto i : it->second)
        best = std::min(best, detail::edit_distance<std::int32_t>(q, codepoints(words_[i])));
    }
    return best;
  }

 private:
  static std::vector<std::int32_t> codepoints(const std::string& s) {
    std::vector<std::int32_t> out;
    for (const auto& sc : unicode::scalars(s))
      out.push_back(sc.codepoint >= 0 ? sc.codepoint : -1 - static_cast<unsigned char>(sc.bytes[0]));
    return out;
  }

  std::vector<std::string> deletion_variants(const std::string& word) const {
    std::vector<std::string> frontier{word};
    std::unordered_set<std::string> seen{word};
    for (std::size_t d = 0; d < max_edit_; ++d) {
      std::vector<std::string> next;
      for (const auto& w : frontier) {
        const auto sc = unicode::scalars(w);
        for (std::size_t k = 0; k < sc.size(); ++k) {
          std::string v;
          for (std::size_t m = 0; m < sc.size(); ++m)
            if (m != k) v.append(sc[m].bytes);
          if (seen.insert(v).second) next.push_back(std::move(v));
        }
      }
      frontier = std::move(next);
    }
    return {seen.begin(), seen.end()};
  }

  std::vector<std::string> words_;
  std::size_t max_edit_;
  std::unordered_map<std::string, std::size_t> exact_;
  std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

// Pronounceable pseudo-words, pairwise at least `min_distance` edits apart and
// at least that far from every entry of `avoid`.
inline std::vector<std::string> make_content_vocab(std::size_t n, std::uint64_t seed,
                                                   const std::vector<std::string>& avoid = default_fillers(),
                                                   std::size_t min_distance = 3) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                 "s", "t", "v", "z", "br", "dr", "gr", "kl", "pr", "st", "tr"};
  static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  Prng rng(seed);
  std::vector<std::string> accepted;
  Lexicon guard(avoid, min_distance - 1);
  std::size_t attempts = 0;
  while (accepted.size() < n) {
    if (++attempts > 200 * n + 1000) throw InvalidInput("make_content_vocab: vocabulary too dense");
    const std::size_t syllables = 2 + rng.below(2);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += onsets[rng.below(std::size(onsets))];
      w += vowels[rng.below(std::size(vowels))];
    }
    if (rng.below(2)) w += onsets[rng.below(14)];
    if (guard.distance_to_nearest(w) < min_distance) continue;
    accepted.push_back(w);
    guard.add(w);
  }
  return accepted;
}

struct SyntheticCorpus {
  Manifest manifest;
  double mean_cr_percent = 0.0;
};

// Transcription: for each content token, a run of fillers then the token.
// Summary: the content tokens in order. Record i draws from
// Prng(derive_seed(cfg.seed, i)).
inline SyntheticCorpus gen_synthetic_corpus(const SyntheticTaskConfig& cfg) {
  cfg.validate();
  SyntheticCorpus out;
  out.manifest.name = cfg.id_prefix;
  double cr = 0.0;
  for (std::size_t i = 0; i < cfg.n_sentences; ++i) {
    Prng rng(derive_seed(cfg.seed, i));
    std::vector<std::string> transcript, summary;
    const std::size_t nc = cfg.content_per_sentence.draw(rng);
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t nf = cfg.filler_per_content.draw(rng);
      for (std::size_t f = 0; f < nf; ++f)
        transcript.push_back(cfg.filler_vocab[rng.below(cfg.filler_vocab.size())]);
      const auto& tok = cfg.content_vocab[rng.below(cfg.content_vocab.size())];
      transcript.push_back(tok);
      summary.push_back(tok);
    }
    Record r;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%06zu", cfg.id_prefix.c_str(), i);
    r.id = id;
    r.transcription = TokenSeq(transcript).join();
    r.summary = TokenSeq(summary).join();
    r.split = cfg.split;
    r.origin = Origin::human;
    r.speaker = "spk" + std::to_string(rng.below(16));
    r.duration_sec = 0.25 * static_cast<double>(transcript.size());
    if (!transcript.empty())
      cr += compression_rate(TokenSeq(summary), TokenSeq(transcript));
    out.manifest.records.push_back(std::move(r));
  }
  out.mean_cr_percent = cfg.n_sentences ? cr / static_cast<double>(cfg.n_sentences) : 0.0;
  return out;
}

inline std::vector<std::string> default_alphabet() {
  std::vector<std::string> a;
  for (char c = 'a'; c <= 'z'; ++c) a.emplace_back(1, c);
  return a;
}

struct CorruptionChannel {
  double sub_rate = 0.0;
  double del_rate = 0.0;
  double ins_rate = 0.0;
  std::vector<std::string> alphabet = default_alphabet();
  std::uint64_t seed = 0;

  double total_rate() const { return sub_rate + del_rate + ins_rate; }

  void validate() const {
    for (double r : {sub_rate, del_rate, ins_rate})
      if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("channel: rates must lie in [0,1]");
    if (total_rate() > 1.0 + 1e-12) throw InvalidInput("channel: rates sum above 1");
    if (alphabet.empty() && (sub_rate > 0.0 || ins_rate > 0.0))
      throw InvalidInput("channel: empty alphabet");
  }

  // Splits a total character error rate 60/20/20 into sub/del/ins.
  static CorruptionChannel with_total_rate(double rate, std::uint64_t seed) {
    CorruptionChannel ch;
    ch.sub_rate = 0.6 * rate;
    ch.del_rate = 0.2 * rate;
    ch.ins_rate = 0.2 * rate;
    ch.seed = seed;
    return ch;
  }
};

// Per scalar: u = uniform draw; u < sub substitutes a different alphabet
// symbol, u < sub+del deletes, u < sub+del+ins keeps the character and
// inserts an alphabet symbol after it.
inline std::string corrupt(std::string_view text, const CorruptionChannel& ch,
                           std::uint64_t record_seed) {
  ch.validate();
  Prng rng(ch.seed ^ record_seed);
  const std::size_t k = ch.alphabet.size();
  std::string out;
  out.reserve(text.size());
  for (const auto& sc : unicode::scalars(text)) {
    const double u = rng.uniform();
    if (u < ch.sub_rate) {
      const auto self = std::find(ch.alphabet.begin(), ch.alphabet.end(), sc.bytes);
      if (self == ch.alphabet.end()) {
        out += ch.alphabet[rng.below(k)];
      } else if (k > 1) {
        auto r = static_cast<std::size_t>(rng.below(k - 1));
        if (r >= static_cast<std::size_t>(self - ch.alphabet.begin())) ++r;
        out += ch.alphabet[r];
      } else {
        out.append(sc.bytes);
      }
    } else if (u < ch.sub_rate + ch.del_rate) {
      // deleted
    } else if (u < ch.total_rate()) {
      out.append(sc.bytes);
      out += ch.alphabet[rng.below(k)];
    } else {
      out.append(sc.bytes);
    }
  }
  return out;
}

inline std::uint64_t record_seed(std::string_view id) { return fnv1a64(id); }

// Stores corrupt(transcription) under "speech_surrogate" for every record
// with a transcription; the channel is seeded per record from its id.
inline Manifest attach_speech_surrogate(Manifest m, const CorruptionChannel& ch) {
  for (auto& r : m.records)
    if (r.transcription) r.extra[kSpeechSurrogateKey] = corrupt(*r.transcription, ch, record_seed(r.id));
  return m;
}

// Mock ASR: the channel applied to the request input, seeded by request id.
inline Handler mock_asr_handler(CorruptionChannel ch) {
  ch.validate();
  return [ch = std::move(ch)](const TransduceRequest& req) {
    TransduceResponse r;
    r.id = req.id;
    r.output = corrupt(req.input, ch, record_seed(req.id));
    return r;
  };
}

inline Handler echo_handler() {
  return [](const TransduceRequest& req) {
    TransduceResponse r;
    r.id = req.id;
    r.output = req.input;
    return r;
  };
}

struct TsumOptions {
  // Also copy up to this many non-content tokens directly preceding each
  // recovered content token, which makes summaries more extractive.
  std::size_t copy_fillers = 0;
};

// Keeps every token within the lexicon's edit tolerance of a content word,
// emitting the canonical form, and drops the rest.
inline std::string oracle_tsum(std::string_view text, const Lexicon& lexicon, TsumOptions opts = {}) {
  const auto words = unicode::split_whitespace(text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto m = lexicon.match(words[i]);
    if (!m) continue;
    std::size_t first = i;
    while (first > 0 && i - first < opts.copy_fillers && !lexicon.match(words[first - 1])) --first;
    for (std::size_t j = first; j < i; ++j) out.emplace_back(words[j]);
    out.push_back(*m);
  }
  return TokenSeq(out).join();
}

inline std::string oracle_tsum(std::string_view text, const SyntheticTaskConfig& cfg,
                               std::size_t max_edit) {
  return oracle_tsum(text, Lexicon(cfg.content_vocab, max_edit));
}

inline Handler oracle_tsum_handler(std::shared_ptr<const Lexicon> lexicon, TsumOptions opts = {}) {
  return [lexicon = std::move(lexicon), opts](const TransduceRequest& req) {
    TransduceResponse r;
    r.id = req.id;
    r.output = oracle_tsum(req.input, *lexicon, opts);
    return r;
  };
}

// Per-token keep probabilities learned from (input, summary) pairs.
struct SalienceModel {
  std::map<std::string, double> keep_prob;
  double alpha = 1.0;
  double default_prob = 0.5;
  double threshold = 0.5;

  double prob(const std::string& token) const {
    auto it = keep_prob.find(token);
    return it == keep_prob.end() ? default_prob : it->second;
  }

  static SalienceModel untrained(double threshold) {
    SalienceModel m;
    m.threshold = threshold;
    return m;
  }

  friend bool operator==(const SalienceModel&, const SalienceModel&) = default;
};

inline constexpr double kDefaultSalienceThreshold = 0.5;

// Input tokens on the LCS alignment with the summary count as kept:
// keep_prob(t) = (kept_t + alpha) / (seen_t + 2 alpha).
inline SalienceModel train_salience(const std::vector<std::pair<TokenSeq, TokenSeq>>& pairs,
                                    double alpha = 1.0,
                                    double threshold = kDefaultSalienceThreshold) {
  if (pairs.empty()) throw InvalidInput("train_salience: no training pairs");
  if (!(alpha >= 0.0)) throw InvalidInput("train_salience: alpha must be nonnegative");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // kept, seen
  for (const auto& [input, summary] : pairs) {
    const auto mask = lcs_mask(input, summary);
    for (std::size_t i = 0; i < input.size(); ++i) {
      auto& c = counts[input[i]];
      c.first += mask[i] ? 1 : 0;
      c.second += 1;
    }
  }
  SalienceModel m;
  m.alpha = alpha;
  m.threshold = threshold;
  m.default_prob = alpha > 0.0 ? alpha / (2.0 * alpha) : 0.5;
  for (const auto& [tok, c] : counts) {
    const double den = static_cast<double>(c.second) + 2.0 * alpha;
    m.keep_prob[tok] = (static_cast<double>(c.first) + alpha) / den;
  }
  return m;
}

inline TokenSeq infer_salience(const SalienceModel& model, const TokenSeq& input) {
  std::vector<std::string> out;
  for (const auto& t : input)
    if (model.prob(t) >= model.threshold) out.push_back(t);
  return TokenSeq(std::move(out), input.unit());
}

inline Handler salience_handler(std::shared_ptr<const SalienceModel> model) {
  return [model = std::move(model)](const TransduceRequest& req) {
    TransduceResponse r;
    r.id = req.id;
    r.output = infer_salience(*model, word_tokenize(req.input)).join();
    return r;
  };
}

inline nlohmann::ordered_json to_json(const SalienceModel& m) {
  nlohmann::ordered_json j;
  j["alpha"] = m.alpha;
  j["default_prob"] = m.default_prob;
  j["threshold"] = m.threshold;
  nlohmann::ordered_json kp = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.keep_prob) kp[k] = v;
  j["keep_prob"] = kp;
  return j;
}

inline SalienceModel salience_from_json(const nlohmann::json& j) {
  SalienceModel m;
  try {
    m.alpha = j.at("alpha").get<double>();
    m.default_prob = j.at("default_prob").get<double>();
    m.threshold = j.at("threshold").get<double>();
    for (const auto& [k, v] : j.at("keep_prob").items()) m.keep_prob[k] = v.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("salience model: ") + e.what());
  }
  auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in01(m.default_prob)) throw DataError("salience model: default_prob outside [0,1]");
  for (const auto& [k, v] : m.keep_prob)
    if (!in01(v)) throw DataError("salience model: keep_prob outside [0,1] for '" + k + "'");
  return m;
}

}  // namespace senssum::toy
