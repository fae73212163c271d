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


#include <catch_amalgamated.hpp>

#include "senssum/tokens.hpp"
#include "senssum/unicode.hpp"

using namespace senssum;

TEST_CASE("nfc composes combining sequences", "[unicode]") {
  CHECK(unicode::nfc("e\xCC\x81") == "\xC3\xA9");
  CHECK(unicode::nfc("plain") == "plain");
  // ill-formed input passes through
  const std::string bad = "a\xFF" "b";
  CHECK(unicode::nfc(bad) == bad);
}

TEST_CASE("scalars decode utf-8 and flag invalid bytes", "[unicode]") {
  const auto s = unicode::scalars("a\xC3\xA9\xE6\x97\xA5\xFF");
  REQUIRE(s.size() == 4);
  CHECK(s[0].codepoint == 'a');
  CHECK(s[1].codepoint == 0xE9);
  CHECK(s[2].codepoint == 0x65E5);
  CHECK(s[3].codepoint == -1);
  CHECK(s[2].bytes == "\xE6\x97\xA5");
  CHECK(unicode::count_scalars("日本語") == 3);
}

TEST_CASE("whitespace classes", "[unicode]") {
  CHECK(unicode::is_whitespace(' '));
  CHECK(unicode::is_whitespace('\t'));
  CHECK(unicode::is_whitespace(0x3000));
  CHECK_FALSE(unicode::is_whitespace('a'));
  CHECK(unicode::split_whitespace("  a\tb\xE3\x80\x80" "c \n") == std::vector<std::string>{"a", "b", "c"});
  CHECK(unicode::split_whitespace("").empty());
}

TEST_CASE("encode_utf8 round trips through scalars", "[unicode]") {
  for (std::int32_t cp : {0x41, 0xE9, 0x3042, 0x1F600}) {
    const auto s = unicode::scalars(unicode::encode_utf8(cp));
    REQUIRE(s.size() == 1);
    CHECK(s[0].codepoint == cp);
  }
}

TEST_CASE("lowercase", "[unicode]") {
  CHECK(unicode::lowercase("HeLLo ÄÖ") == "hello äö");
}

TEST_CASE("TokenSeq validation", "[tokens]") {
  CHECK_THROWS_AS(TokenSeq({"a", ""}), InvalidInput);
  CHECK_THROWS_AS(TokenSeq({"a b"}), InvalidInput);
  CHECK_NOTHROW(TokenSeq({" "}, Unit::character));
  TokenSeq t({"x", "y"});
  CHECK(t.join() == "x y");
  CHECK(t.join("") == "xy");
  CHECK(t.unit() == Unit::word);
  CHECK(t == TokenSeq({"x", "y"}));
  CHECK_FALSE(t == TokenSeq({"x", "y"}, Unit::character));
}

TEST_CASE("word tokenizer", "[tokens]") {
  CHECK(word_tokenize("The  cat\tsat").tokens() == std::vector<std::string>{"The", "cat", "sat"});
  CHECK(word_tokenize("The CAT", {true}).tokens() == std::vector<std::string>{"the", "cat"});
  CHECK(word_tokenize("").empty());
}

TEST_CASE("character tokenizer", "[tokens]") {
  CHECK(char_tokenize("abc").tokens() == std::vector<std::string>{"a", "b", "c"});
  CHECK(char_tokenize("").empty());
  // "é" spelled as e + combining acute, plus "a": two tokens after NFC
  const auto t = char_tokenize("e\xCC\x81" "a");
  REQUIRE(t.size() == 2);
  CHECK(t[0] == unicode::nfc("e\xCC\x81"));
  CHECK(t[1] == "a");
  CHECK(char_tokenize("a b").size() == 2);
  CHECK(char_tokenize("a b", {true}).size() == 3);
  CHECK(char_tokenize("日本語").size() == 3);
  CHECK(tokenize("a b", Unit::word).size() == 2);
  CHECK(tokenize("a b", Unit::character).unit() == Unit::character);
}
