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

// Byte-pair encoding with an end-of-word marker.
//
// Encoded streams are lossless: single spaces between words are implicit and
// every other whitespace character is emitted as an escape token "<U+XXXX>".
// Merges whose result would be a word-internal symbol ending in the marker or
// spelling an escape token are never learned, so decoding is unambiguous.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "senssum/error.hpp"
#include "senssum/tokens.hpp"
#include "senssum/unicode.hpp"

namespace senssum::bpe {

inline constexpr std::string_view kEndOfWord = "</w>";
inline constexpr std::string_view kFormatTag = "bpe-v1";
inline const std::vector<std::string> kSpecials = {"<pad>", "<unk>", "<s>", "</s>"};
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;

namespace detail {

inline bool ends_with_marker(std::string_view s) {
  return s.size() > kEndOfWord.size() && s.ends_with(kEndOfWord);
}

inline std::string whitespace_escape(std::int32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "<U+%04X>", static_cast<unsigned>(cp));
  return buf;
}

// Returns the codepoint if `s` is exactly an escape token for whitespace.
inline std::int32_t parse_whitespace_escape(std::string_view s) {
  if (s.size() < 8 || s.size() > 10 || !s.starts_with("<U+") || !s.ends_with(">")) return -1;
  std::int32_t cp = 0;
  for (char c : s.substr(3, s.size() - 4)) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return -1;
    cp = cp * 16 + d;
  }
  if (!unicode::is_whitespace(cp) || whitespace_escape(cp) != s) return -1;
  return cp;
}

// A merged symbol that is not word-final must not look like a word end or an
// escape token.
inline bool merge_allowed(const std::string& left, const std::string& right) {
  if (ends_with_marker(right)) return true;
  const std::string merged = left + right;
  return !merged.ends_with(kEndOfWord) && parse_whitespace_escape(merged) < 0;
}

inline std::vector<std::string> initial_symbols(std::string_view word) {
  std::vector<std::string> out;
  for (const auto& sc : unicode::scalars(word)) out.emplace_back(sc.bytes);
  if (!out.empty()) out.back() += kEndOfWord;
  return out;
}

inline void apply_merge(std::vector<std::string>& symbols, const std::string& left,
                        const std::string& right) {
  if (symbols.size() < 2) return;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      i += 1;
    }
  }
  symbols = std::move(out);
}

struct Segment {
  std::string text;
  bool whitespace;
};

inline std::vector<Segment> segment(std::string_view text) {
  std::vector<Segment> out;
  for (const auto& sc : unicode::scalars(text)) {
    const bool ws = unicode::is_whitespace(sc.codepoint);
    if (out.empty() || out.back().whitespace != ws) out.push_back({"", ws});
    out.back().text.append(sc.bytes);
  }
  return out;
}

}  // namespace detail

// Trained merge list plus the base-symbol inventory it was trained over.
class MergeTable {
 public:
  MergeTable() = default;
  MergeTable(std::size_t target_size, std::vector<std::pair<std::string, std::string>> merges,
             std::vector<std::string> inventory)
      : target_size_(target_size), merges_(std::move(merges)), inventory_(std::move(inventory)) {
    std::sort(inventory_.begin(), inventory_.end());
    inventory_.erase(std::unique(inventory_.begin(), inventory_.end()), inventory_.end());
    rebuild_vocab();
  }

  std::size_t target_size() const noexcept { return target_size_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const noexcept {
    return merges_;
  }
  const std::vector<std::string>& inventory() const noexcept { return inventory_; }
  // Id order: specials, sorted inventory, merged symbols in merge order.
  const std::vector<std::string>& vocab() const noexcept { return id_to_symbol_; }
  std::size_t vocab_size() const noexcept { return id_to_symbol_.size(); }

  int id(const std::string& symbol) const {
    auto it = symbol_to_id_.find(symbol);
    return it == symbol_to_id_.end() ? kUnkId : it->second;
  }
  bool contains(const std::string& symbol) const { return symbol_to_id_.count(symbol) != 0; }

  // Segmentation of one whitespace-free word.
  std::vector<std::string> encode_word(std::string_view word) const {
    auto symbols = detail::initial_symbols(word);
    for (const auto& [left, right] : merges_) detail::apply_merge(symbols, left, right);
    return symbols;
  }

  // "bpe-v1 <target_size>", then "left right" per merge in training order,
  // then one inventory symbol per line (inventory lines carry no space).
  std::string serialize() const {
    std::string out;
    out += std::string(kFormatTag) + " " + std::to_string(target_size_) + "\n";
    for (const auto& [l, r] : merges_) out += l + " " + r + "\n";
    for (const auto& s : inventory_) out += s + "\n";
    return out;
  }

  static MergeTable parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw DataError("bpe table: empty input");
    std::size_t target = 0;
    {
      std::istringstream hdr(line);
      std::string tag;
      if (!(hdr >> tag >> target) || tag != kFormatTag)
        throw LoadError(1, "bpe table: expected header '" + std::string(kFormatTag) +
                               " <target_size>'");
    }
    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::string> inventory;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) throw LoadError(lineno, "bpe table: empty line");
      const auto sp = line.find(' ');
      if (sp == std::string::npos) {
        inventory.push_back(line);
        continue;
      }
      if (!inventory.empty()) throw LoadError(lineno, "bpe table: merge after inventory");
      if (sp == 0 || sp + 1 >= line.size() || line.find(' ', sp + 1) != std::string::npos)
        throw LoadError(lineno, "bpe table: malformed merge line");
      merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return MergeTable(target, std::move(merges), std::move(inventory));
  }

  friend bool operator==(const MergeTable& a, const MergeTable& b) {
    return a.target_size_ == b.target_size_ && a.merges_ == b.merges_ &&
           a.inventory_ == b.inventory_;
  }

 private:
  void rebuild_vocab() {
    id_to_symbol_.clear();
    symbol_to_id_.clear();
    auto add = [&](const std::string& s) {
      if (symbol_to_id_.emplace(s, static_cast<int>(id_to_symbol_.size())).second)
        id_to_symbol_.push_back(s);
    };
    for (const auto& s : kSpecials) add(s);
    for (const auto& s : inventory_) add(s);
    for (const auto& [l, r] : merges_) add(l + r);
  }

  std::size_t target_size_ = 0;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> inventory_;
  std::vector<std::string> id_to_symbol_;
  std::unordered_map<std::string, int> symbol_to_id_;
};

// Greedy most-frequent-pair merging. Ties go to the lexicographically
// smallest (left, right) pair. Stops when the vocabulary (specials included)
// reaches target_size or no pair occurs at least twice.
inline MergeTable train_bpe(const std::vector<std::string>& corpus, std::size_t target_size) {
  if (corpus.empty()) throw InvalidInput("train_bpe: empty corpus");

  std::map<std::string, std::uint64_t> word_counts;
  for (const auto& line : corpus)
    for (auto& w : unicode::split_whitespace(line)) ++word_counts[w];

  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> words;
  std::set<std::string> inventory;
  for (const auto& [w, c] : word_counts) {
    auto syms = detail::initial_symbols(w);
    inventory.insert(syms.begin(), syms.end());
    words.emplace_back(std::move(syms), c);
  }

  const std::size_t base = kSpecials.size() + inventory.size();
  if (target_size < base)
    throw InvalidInput("train_bpe: target_size " + std::to_string(target_size) +
                       " below base vocabulary size " + std::to_string(base));

  std::set<std::string> vocab(inventory.begin(), inventory.end());
  std::size_t vocab_size = base;
  std::vector<std::pair<std::string, std::string>> merges;

  while (vocab_size < target_size) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
    for (const auto& [syms, c] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        if (detail::merge_allowed(syms[i], syms[i + 1])) pair_counts[{syms[i], syms[i + 1]}] += c;

    const std::pair<std::string, std::string>* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [p, c] : pair_counts) {
      if (c > best_count) {
        best = &p;
        best_count = c;
      }
    }
    if (best == nullptr || best_count < 2) break;

    const auto merge = *best;
    for (auto& [syms, c] : words) detail::apply_merge(syms, merge.first, merge.second);
    if (vocab.insert(merge.first + merge.second).second) ++vocab_size;
    merges.push_back(merge);
  }

  return MergeTable(target_size, std::move(merges),
                    std::vector<std::string>(inventory.begin(), inventory.end()));
}

// Unknown characters pass through as singleton symbols.
inline TokenSeq encode(const MergeTable& table, std::string_view text) {
  const auto segs = detail::segment(text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& seg = segs[i];
    if (!seg.whitespace) {
      for (auto& s : table.encode_word(seg.text)) out.push_back(std::move(s));
      continue;
    }
    const bool between_words = i > 0 && i + 1 < segs.size();
    if (between_words && seg.text == " ") continue;
    for (const auto& sc : unicode::scalars(seg.text))
      out.push_back(detail::whitespace_escape(sc.codepoint));
  }
  return TokenSeq(std::move(out), Unit::word);
}

inline std::string decode(const MergeTable& /*table*/, const TokenSeq& tokens) {
  std::string out;
  bool in_word = false;
  bool after_word = false;
  for (const auto& tok : tokens) {
    if (const auto cp = detail::parse_whitespace_escape(tok); cp >= 0 && !in_word) {
      out += unicode::encode_utf8(cp);
      after_word = false;
      continue;
    }
    if (!in_word && after_word) out += ' ';
    if (detail::ends_with_marker(tok)) {
      out.append(tok, 0, tok.size() - kEndOfWord.size());
      in_word = false;
      after_word = true;
    } else {
      if (tok.ends_with(kEndOfWord)) throw InvalidInput("bpe decode: bare end-of-word marker");
      out += tok;
      in_word = true;
      after_word = false;
    }
  }
  if (in_word) throw InvalidInput("bpe decode: token stream ends inside a word");
  return out;
}

// Vocabulary ids; unknown symbols map to the <unk> id.
inline std::vector<int> to_ids(const MergeTable& table, const TokenSeq& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(table.id(t));
  return ids;
}

}  // namespace senssum::bpe
