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

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "senssum/error.hpp"
#include "senssum/unicode.hpp"

namespace senssum {

enum class Unit { word, character };

inline std::string_view to_string(Unit u) {
  return u == Unit::word ? "word" : "character";
}

// Tokenized text. Tokens are never empty; word tokens never contain
// whitespace. The unit is fixed at construction.
class TokenSeq {
 public:
  TokenSeq() = default;
  explicit TokenSeq(std::vector<std::string> tokens, Unit unit = Unit::word)
      : tokens_(std::move(tokens)), unit_(unit) {
    for (const auto& t : tokens_) {
      if (t.empty()) throw InvalidInput("TokenSeq: empty token");
      if (unit_ == Unit::word) {
        for (const auto& sc : unicode::scalars(t)) {
          if (unicode::is_whitespace(sc.codepoint))
            throw InvalidInput("TokenSeq: word token contains whitespace: '" + t + "'");
        }
      }
    }
  }

  Unit unit() const noexcept { return unit_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  // Space-joined text; inverse of word_tokenize for normalized input.
  std::string join(std::string_view sep = " ") const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (i) out += sep;
      out += tokens_[i];
    }
    return out;
  }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
  Unit unit_ = Unit::word;
};

struct WordTokenizerOptions {
  bool lowercase = false;
};

// NFC, then split on Unicode whitespace.
inline TokenSeq word_tokenize(std::string_view text, WordTokenizerOptions opts = {}) {
  std::string norm = unicode::nfc(text);
  if (opts.lowercase) norm = unicode::lowercase(norm);
  return TokenSeq(unicode::split_whitespace(norm), Unit::word);
}

struct CharTokenizerOptions {
  bool keep_whitespace = false;
};

// One token per Unicode scalar value of the NFC form.
inline TokenSeq char_tokenize(std::string_view text, CharTokenizerOptions opts = {}) {
  const std::string norm = unicode::nfc(text);
  std::vector<std::string> out;
  for (const auto& sc : unicode::scalars(norm)) {
    if (!opts.keep_whitespace && unicode::is_whitespace(sc.codepoint)) continue;
    out.emplace_back(sc.bytes);
  }
  return TokenSeq(std::move(out), Unit::character);
}

inline TokenSeq tokenize(std::string_view text, Unit unit) {
  return unit == Unit::word ? word_tokenize(text) : char_tokenize(text);
}

}  // namespace senssum
