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

// UTF-8 helpers. Normalization and character classes come from ICU.

#include <unicode/bytestream.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "senssum/error.hpp"

namespace senssum::unicode {

// One decoded unit of a UTF-8 string. Invalid bytes decode to a single-byte
// unit with codepoint -1 so higher layers can pass them through unchanged.
struct Scalar {
  std::string_view bytes;
  std::int32_t codepoint;
};

inline std::vector<Scalar> scalars(std::string_view text) {
  std::vector<Scalar> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      i = start + 1;
    }
    out.push_back({text.substr(static_cast<std::size_t>(start),
                               static_cast<std::size_t>(i - start)),
                   c});
  }
  return out;
}

inline std::size_t count_scalars(std::string_view text) {
  return scalars(text).size();
}

inline bool is_whitespace(std::int32_t codepoint) {
  return codepoint >= 0 && u_isUWhiteSpace(codepoint);
}

inline std::string encode_utf8(std::int32_t codepoint) {
  char buf[4];
  std::int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, 4, codepoint, error);
  if (error) throw InvalidInput("codepoint not encodable as UTF-8");
  return {buf, static_cast<std::size_t>(len)};
}

inline std::string nfc(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  std::string out;
  icu::StringByteSink<std::string> sink(&out);
  norm->normalizeUTF8(0, icu::StringPiece(text.data(), static_cast<int32_t>(text.size())),
                      sink, nullptr, status);
  if (U_FAILURE(status)) {
    // ICU rejects ill-formed UTF-8; leave such text as is.
    return std::string(text);
  }
  return out;
}

// Simple (1:1) lowercase mapping per scalar.
inline std::string lowercase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& sc : scalars(text)) {
    if (sc.codepoint < 0) {
      out.append(sc.bytes);
    } else {
      out += encode_utf8(u_tolower(sc.codepoint));
    }
  }
  return out;
}

// Splits on runs of Unicode whitespace; no empty pieces.
inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (const auto& sc : scalars(text)) {
    if (is_whitespace(sc.codepoint)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.append(sc.bytes);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace senssum::unicode
