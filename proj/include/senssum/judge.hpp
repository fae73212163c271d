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

// Pairwise A/B preference judging with position swapping.
//
// Each item is judged twice, once with each summary in the first slot.
// Agreement is a win, disagreement a tie, and any unparseable or failed
// reply a failure.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "senssum/error.hpp"
#include "senssum/metrics.hpp"
#include "senssum/prng.hpp"
#include "senssum/protocol.hpp"
#include "senssum/tokens.hpp"

namespace senssum::judge {

struct ABItem {
  std::string id;
  std::string transcription;
  std::string summary_a;
  std::string summary_b;
  std::string system_a;
  std::string system_b;

  void validate() const {
    if (system_a == system_b) throw InvalidInput("ab item '" + id + "': system labels must differ");
  }

  ABItem swapped() const { return {id, transcription, summary_b, summary_a, system_b, system_a}; }
};

inline constexpr std::string_view kDefaultTemplate =
    "You are given the reference transcription of one spoken sentence and two candidate "
    "summaries of it.\n"
    "Select the better summary of the two, considering the reference transcription.\n"
    "\n"
    "Transcription: {transcription}\n"
    "Summary A: {summary_a}\n"
    "Summary B: {summary_b}\n"
    "\n"
    "Answer with exactly one letter: A or B.";

struct PromptMeta {
  bool empty_transcription = false;
  bool degenerate_a = false;
  bool degenerate_b = false;
};

struct PromptPair {
  std::string forward;  // summary_a in slot A
  std::string swapped;  // summary_b in slot A
  PromptMeta meta;
};

inline std::string render_template(std::string_view tmpl, std::string_view transcription,
                                   std::string_view slot_a, std::string_view slot_b) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    auto try_field = [&](std::string_view name, std::string_view value) {
      if (tmpl.substr(i).starts_with(name)) {
        out.append(value);
        i += name.size();
        return true;
      }
      return false;
    };
    if (try_field("{transcription}", transcription) || try_field("{summary_a}", slot_a) ||
        try_field("{summary_b}", slot_b))
      continue;
    out += tmpl[i++];
  }
  return out;
}

inline bool blank(std::string_view s) { return word_tokenize(s).empty(); }

inline PromptPair build_prompts(const ABItem& item, std::string_view tmpl = kDefaultTemplate) {
  item.validate();
  PromptPair p;
  p.forward = render_template(tmpl, item.transcription, item.summary_a, item.summary_b);
  p.swapped = render_template(tmpl, item.transcription, item.summary_b, item.summary_a);
  p.meta.empty_transcription = blank(item.transcription);
  p.meta.degenerate_a = blank(item.summary_a);
  p.meta.degenerate_b = blank(item.summary_b);
  return p;
}

// First standalone "A" or "B" (delimited by non-alphanumerics), else nullopt.
inline std::optional<char> parse_choice(std::string_view reply) {
  auto alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           static_cast<unsigned char>(c) >= 0x80;
  };
  for (std::size_t i = 0; i < reply.size();) {
    if (!alnum(reply[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && alnum(reply[j])) ++j;
    const auto tok = reply.substr(i, j - i);
    if (tok == "A") return 'A';
    if (tok == "B") return 'B';
    i = j;
  }
  return std::nullopt;
}

// One presentation of an item to the judge.
struct JudgeQuery {
  std::string id;
  std::string prompt;
  std::string transcription;
  std::string slot_a;
  std::string slot_b;
};

class Judge {
 public:
  virtual ~Judge() = default;
  // One reply per query, in order; nullopt marks a failed call.
  virtual std::vector<std::optional<std::string>> ask(std::span<const JudgeQuery> queries) = 0;
};

// Prefers the slot with higher ROUGE-L F against the transcription. Exact
// ties answer "A", so a swapped pair of ties disagrees and becomes a tie.
class MockJudge final : public Judge {
 public:
  static char choose(const JudgeQuery& q) {
    const auto t = word_tokenize(q.transcription);
    const double fa = rouge_l(word_tokenize(q.slot_a), t).f;
    const double fb = rouge_l(word_tokenize(q.slot_b), t).f;
    return fb > fa ? 'B' : 'A';
  }

  std::vector<std::optional<std::string>> ask(std::span<const JudgeQuery> queries) override {
    std::vector<std::optional<std::string>> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.emplace_back(std::string(1, choose(q)));
    return out;
  }
};

// Remote judge over the backend protocol (kind "judge"): the prompt travels
// as the request input and the reply is the response output.
class BackendJudge final : public Judge {
 public:
  explicit BackendJudge(std::unique_ptr<Backend> backend) : backend_(std::move(backend)) {
    if (backend_->kind() != Kind::judge) throw InvalidInput("BackendJudge: backend kind is not judge");
  }

  std::vector<std::optional<std::string>> ask(std::span<const JudgeQuery> queries) override {
    std::vector<TransduceRequest> reqs;
    reqs.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
      reqs.push_back({queries[i].id + "#" + std::to_string(i), queries[i].prompt, 1});
    std::vector<std::optional<std::string>> out(queries.size());
    try {
      const auto resp = transduce_batch(*backend_, reqs);
      for (std::size_t i = 0; i < resp.size(); ++i)
        if (resp[i].ok()) out[i] = resp[i].output;
    } catch (const BackendError&) {
      // Every query of the batch counts as failed.
    }
    return out;
  }

 private:
  std::unique_ptr<Backend> backend_;
};

enum class Outcome { win_a, win_b, tie, failure };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::win_a: return "win_a";
    case Outcome::win_b: return "win_b";
    case Outcome::tie: return "tie";
    case Outcome::failure: return "failure";
  }
  return "failure";
}

struct ItemVerdict {
  std::string id;
  std::optional<std::string> forward_reply;
  std::optional<std::string> swapped_reply;
  Outcome outcome = Outcome::failure;
  PromptMeta meta;
};

struct PreferenceResult {
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
  std::size_t ties = 0;
  std::size_t failures = 0;
  double pct_a = 0.0;
  double pct_b = 0.0;

  std::size_t total() const { return wins_a + wins_b + ties + failures; }

  friend bool operator==(const PreferenceResult&, const PreferenceResult&) = default;
};

// Percentages are over decided items (wins only).
inline PreferenceResult aggregate(std::size_t wins_a, std::size_t wins_b, std::size_t ties,
                                  std::size_t failures) {
  PreferenceResult r{wins_a, wins_b, ties, failures, 0.0, 0.0};
  const std::size_t decided = wins_a + wins_b;
  if (decided) {
    r.pct_a = 100.0 * static_cast<double>(wins_a) / static_cast<double>(decided);
    r.pct_b = 100.0 * static_cast<double>(wins_b) / static_cast<double>(decided);
  }
  return r;
}

struct JudgeResult {
  std::vector<ItemVerdict> per_item;
  PreferenceResult aggregate;
};

// Queries are submitted in an order shuffled by `seed`; results are folded
// in item order.
inline JudgeResult judge_batch(std::span<const ABItem> items, Judge& judge, std::uint64_t seed = 0,
                               std::string_view tmpl = kDefaultTemplate) {
  std::vector<JudgeQuery> queries;
  std::vector<PromptMeta> metas;
  queries.reserve(2 * items.size());
  for (const auto& item : items) {
    const auto p = build_prompts(item, tmpl);
    metas.push_back(p.meta);
    queries.push_back({item.id, p.forward, item.transcription, item.summary_a, item.summary_b});
    queries.push_back({item.id, p.swapped, item.transcription, item.summary_b, item.summary_a});
  }

  std::vector<std::size_t> order(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Prng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<JudgeQuery> shuffled;
  shuffled.reserve(queries.size());
  for (auto i : order) shuffled.push_back(queries[i]);

  auto replies_shuffled = judge.ask(shuffled);
  if (replies_shuffled.size() != shuffled.size())
    throw BackendError("judge returned a wrong number of replies");
  std::vector<std::optional<std::string>> replies(queries.size());
  for (std::size_t k = 0; k < order.size(); ++k) replies[order[k]] = std::move(replies_shuffled[k]);

  JudgeResult out;
  std::size_t wa = 0, wb = 0, ties = 0, fails = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ItemVerdict v;
    v.id = items[i].id;
    v.meta = metas[i];
    v.forward_reply = replies[2 * i];
    v.swapped_reply = replies[2 * i + 1];
    const auto c1 = v.forward_reply ? parse_choice(*v.forward_reply) : std::nullopt;
    const auto c2 = v.swapped_reply ? parse_choice(*v.swapped_reply) : std::nullopt;
    if (!c1 || !c2) {
      v.outcome = Outcome::failure;
      ++fails;
    } else {
      // Map slot letters back to systems; in the swapped pass slot A is b.
      const bool first_says_a = *c1 == 'A';
      const bool second_says_a = *c2 == 'B';
      if (first_says_a == second_says_a) {
        v.outcome = first_says_a ? Outcome::win_a : Outcome::win_b;
        ++(first_says_a ? wa : wb);
      } else {
        v.outcome = Outcome::tie;
        ++ties;
      }
    }
    out.per_item.push_back(std::move(v));
  }
  out.aggregate = aggregate(wa, wb, ties, fails);
  return out;
}

inline nlohmann::ordered_json to_json(const PreferenceResult& r) {
  nlohmann::ordered_json j;
  j["wins_a"] = r.wins_a;
  j["wins_b"] = r.wins_b;
  j["ties"] = r.ties;
  j["failures"] = r.failures;
  j["pct_a"] = r.pct_a;
  j["pct_b"] = r.pct_b;
  return j;
}

inline nlohmann::ordered_json to_json(const JudgeResult& r) {
  nlohmann::ordered_json j;
  auto per = nlohmann::ordered_json::array();
  auto opt = [](const std::optional<std::string>& s) {
    return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json();
  };
  for (const auto& v : r.per_item) {
    nlohmann::ordered_json e;
    e["id"] = v.id;
    e["forward_reply"] = opt(v.forward_reply);
    e["swapped_reply"] = opt(v.swapped_reply);
    e["outcome"] = std::string(to_string(v.outcome));
    e["empty_transcription"] = v.meta.empty_transcription;
    e["degenerate_a"] = v.meta.degenerate_a;
    e["degenerate_b"] = v.meta.degenerate_b;
    per.push_back(std::move(e));
  }
  j["per_item"] = std::move(per);
  j["aggregate"] = to_json(r.aggregate);
  return j;
}

enum class Side { a, b };

struct CurvePoint {
  std::size_t mix_size = 0;
  double pct_e2e = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Preference for the E2E system per mix size, sorted by size, unsmoothed.
inline std::vector<CurvePoint> preference_curve(
    const std::vector<std::pair<std::size_t, PreferenceResult>>& results, Side e2e_side = Side::b) {
  if (results.size() < 2) throw InvalidInput("preference_curve: need at least two mix sizes");
  std::vector<CurvePoint> out;
  for (const auto& [size, r] : results)
    out.push_back({size, e2e_side == Side::a ? r.pct_a : r.pct_b});
  std::stable_sort(out.begin(), out.end(),
                   [](const CurvePoint& x, const CurvePoint& y) { return x.mix_size < y.mix_size; });
  return out;
}

}  // namespace senssum::judge
