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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "senssum/metrics.hpp"
#include "senssum/prng.hpp"

using namespace senssum;
using Catch::Approx;

namespace {

TokenSeq seq(std::initializer_list<const char*> xs) {
  std::vector<std::string> v(xs.begin(), xs.end());
  return TokenSeq(v);
}

TokenSeq from_ints(const std::vector<int>& xs) {
  std::vector<std::string> v;
  for (int x : xs) v.push_back(std::string(1, static_cast<char>('a' + x)));
  return TokenSeq(v);
}

// Longest subsequence of a (by subset enumeration) that is also one of b.
std::size_t lcs_brute(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    const auto len = static_cast<std::size_t>(__builtin_popcount(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = len;
  }
  return best;
}

// Breadth-first search over single-token edits.
std::size_t edit_bfs(const std::vector<int>& a, const std::vector<int>& b, int alphabet) {
  if (a == b) return 0;
  std::vector<std::vector<int>> frontier{a};
  std::set<std::vector<int>> seen{a};
  for (std::size_t d = 1;; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& s : frontier) {
      std::vector<std::vector<int>> nb;
      for (std::size_t i = 0; i < s.size(); ++i) {
        auto del = s;
        del.erase(del.begin() + static_cast<long>(i));
        nb.push_back(del);
        for (int c = 0; c < alphabet; ++c)
          if (c != s[i]) {
            auto sub = s;
            sub[i] = c;
            nb.push_back(sub);
          }
      }
      for (std::size_t i = 0; i <= s.size(); ++i)
        for (int c = 0; c < alphabet; ++c) {
          auto ins = s;
          ins.insert(ins.begin() + static_cast<long>(i), c);
          nb.push_back(ins);
        }
      for (auto& x : nb) {
        if (x == b) return d;
        if (x.size() <= std::max(a.size(), b.size()) + 1 && seen.insert(x).second) next.push_back(x);
      }
    }
    frontier = std::move(next);
  }
}

std::vector<std::vector<int>> all_seqs(std::size_t max_len, int alphabet) {
  std::vector<std::vector<int>> out{{}};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == max_len) continue;
    for (int c = 0; c < alphabet; ++c) {
      auto s = out[i];
      s.push_back(c);
      out.push_back(s);
    }
  }
  return out;
}

std::vector<int> random_seq(Prng& rng, std::size_t max_len, int alphabet) {
  std::vector<int> s(rng.below(max_len + 1));
  for (auto& x : s) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
  return s;
}

}  // namespace

TEST_CASE("lcs_length examples", "[metrics]") {
  CHECK(lcs_length(seq({"a", "b", "c"}), seq({"a", "b", "c"})) == 3);
  CHECK(lcs_length(seq({"a", "b"}), seq({"c", "d"})) == 0);
  CHECK(lcs_length(seq({"a", "b", "c", "d"}), seq({"a", "c", "d", "e"})) == 3);
  CHECK(lcs_length(seq({}), seq({"a"})) == 0);
}

TEST_CASE("lcs_length and rouge_l match subset enumeration up to length 6", "[metrics][oracle]") {
  const auto seqs = all_seqs(6, 3);
  std::vector<TokenSeq> ts;
  for (const auto& s : seqs) ts.push_back(from_ints(s));
  for (std::size_t i = 0; i < seqs.size(); i += 3) {
    for (std::size_t j = 0; j < seqs.size(); j += 5) {
      const std::size_t want = lcs_brute(seqs[i], seqs[j]);
      REQUIRE(lcs_length(ts[i], ts[j]) == want);
      const auto r = rouge_l(ts[i], ts[j]);
      if (seqs[i].empty() || seqs[j].empty()) {
        REQUIRE(r == RougeScore{});
      } else {
        const double p = static_cast<double>(want) / static_cast<double>(seqs[i].size());
        const double q = static_cast<double>(want) / static_cast<double>(seqs[j].size());
        REQUIRE(r.precision == Approx(p).margin(1e-15));
        REQUIRE(r.recall == Approx(q).margin(1e-15));
        REQUIRE(r.f == Approx(p + q > 0 ? 2 * p * q / (p + q) : 0.0).margin(1e-15));
      }
    }
  }
}

TEST_CASE("lcs_mask marks one longest common subsequence", "[metrics]") {
  Prng rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto a = random_seq(rng, 9, 3), b = random_seq(rng, 9, 3);
    const auto mask = lcs_mask(from_ints(a), from_ints(b));
    std::vector<int> picked;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (mask[i]) picked.push_back(a[i]);
    REQUIRE(picked.size() == lcs_brute(a, b));
    REQUIRE(lcs_brute(picked, b) == picked.size());  // picked is a subsequence of b
  }
  // deterministic tie-break: prefer the later match in a
  const auto m = lcs_mask(seq({"x", "x"}), seq({"x"}));
  CHECK(m == std::vector<bool>{false, true});
}

TEST_CASE("edit_distance examples", "[metrics]") {
  CHECK(edit_distance(seq({"a"}), seq({"a"})) == 0);
  CHECK(edit_distance(seq({}), seq({"a", "b"})) == 2);
  CHECK(edit_distance(seq({"the", "cat", "sat"}), seq({"the", "cat", "sat", "down"})) == 1);
}

TEST_CASE("edit_distance matches edit-graph search up to length 3", "[metrics][oracle]") {
  const auto seqs = all_seqs(3, 3);
  for (const auto& a : seqs)
    for (const auto& b : seqs) REQUIRE(edit_distance(from_ints(a), from_ints(b)) == edit_bfs(a, b, 3));
}

TEST_CASE("edit_distance is a metric on random triples", "[metrics][property]") {
  Prng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const auto a = from_ints(random_seq(rng, 10, 4)), b = from_ints(random_seq(rng, 10, 4)),
               c = from_ints(random_seq(rng, 10, 4));
    REQUIRE(edit_distance(a, b) == edit_distance(b, a));
    REQUIRE(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    REQUIRE((edit_distance(a, b) == 0) == (a == b));
  }
}

TEST_CASE("error_rate", "[metrics]") {
  CHECK(error_rate(seq({"a", "b"}), seq({"a", "b"})) == 0.0);
  CHECK(error_rate(seq({"the", "cat", "sat", "down"}), seq({"the", "cat", "sat"})) == Approx(1.0 / 3.0));
  CHECK(error_rate(seq({}), seq({"a", "b", "c", "d"})) == 1.0);
  CHECK(error_rate(seq({"a", "b", "c"}), seq({"z"})) == 3.0);
  CHECK_THROWS_AS(error_rate(seq({"a"}), seq({})), InvalidInput);
  CHECK_THROWS_AS(error_rate(char_tokenize("ab"), seq({"ab"})), InvalidInput);
}

TEST_CASE("compression_rate", "[metrics]") {
  CHECK(compression_rate(seq({"a", "b"}), seq({"a", "b"})) == 100.0);
  CHECK(compression_rate(seq({"a", "b", "c"}), word_tokenize("1 2 3 4 5 6 7 8 9 10 11 12")) == 25.0);
  CHECK_THROWS_AS(compression_rate(seq({"a"}), seq({})), InvalidInput);
  // depends on lengths only
  Prng rng(3);
  for (int t = 0; t < 200; ++t) {
    auto a = random_seq(rng, 8, 3), b = random_seq(rng, 8, 3);
    if (b.empty()) continue;
    auto a2 = a, b2 = b;
    for (auto& x : a2) x = (x + 1) % 3;
    for (auto& x : b2) x = 2 - x;
    REQUIRE(compression_rate(from_ints(a), from_ints(b)) == compression_rate(from_ints(a2), from_ints(b2)));
  }
}

TEST_CASE("rouge_l examples", "[metrics]") {
  CHECK(rouge_l(seq({"x", "y", "z"}), seq({"x", "y", "z"})) == RougeScore{1.0, 1.0, 1.0});
  const std::vector<TokenSeq> refs{seq({"a", "b", "c", "d"})};
  const auto r = rouge_l(seq({"a", "c", "d", "e"}), std::span<const TokenSeq>(refs));
  CHECK(r.precision == Approx(0.75));
  CHECK(r.recall == Approx(0.75));
  CHECK(r.f == Approx(0.75));
  CHECK(rouge_l(seq({}), seq({"a"})) == RougeScore{});
  CHECK_THROWS_AS(rouge_l(seq({"a"}), std::span<const TokenSeq>()), InvalidInput);
}

TEST_CASE("rouge_l multi-reference takes the best F", "[metrics]") {
  const std::vector<TokenSeq> refs{seq({"q"}), seq({"a", "b"}), seq({"a", "b", "z"})};
  const auto r = rouge_l(seq({"a", "b"}), std::span<const TokenSeq>(refs));
  CHECK(r.f == 1.0);
  const std::vector<TokenSeq> tie{seq({"a", "x"}), seq({"x", "a"})};
  const auto t = rouge_l(seq({"a"}), std::span<const TokenSeq>(tie));
  CHECK(t == rouge_l(seq({"a"}), tie[0]));
}

TEST_CASE("rouge_l of a sequence against itself is 1", "[metrics][property]") {
  Prng rng(17);
  for (int t = 0; t < 1000; ++t) {
    auto s = random_seq(rng, 30, 5);
    if (s.empty()) continue;
    const auto x = from_ints(s);
    REQUIRE(rouge_l(x, x).f == 1.0);
  }
}

TEST_CASE("metrics reject mixed units", "[metrics]") {
  CHECK_THROWS_AS(lcs_length(char_tokenize("ab"), word_tokenize("ab")), InvalidInput);
  CHECK_THROWS_AS(rouge_l(char_tokenize("ab"), word_tokenize("ab")), InvalidInput);
}

namespace {

EmbeddingSeq emb(std::vector<std::vector<double>> v) {
  EmbeddingSeq e;
  e.dim = v.front().size();
  e.vectors = std::move(v);
  return e;
}

}  // namespace

TEST_CASE("bertscore edge cases", "[metrics][bertscore]") {
  const auto e = emb({{1, 0}, {0, 1}});
  const auto s = bertscore_greedy(e, e);
  CHECK(s.precision == Approx(1.0));
  CHECK(s.recall == Approx(1.0));
  CHECK(s.f == Approx(1.0));
  const auto o = bertscore_greedy(emb({{1, 0, 0}}), emb({{0, 1, 0}, {0, 0, 1}}));
  CHECK(o.precision == 0.0);
  CHECK(o.recall == 0.0);
  CHECK(o.f == 0.0);
  CHECK_THROWS_AS(bertscore_greedy(emb({{1, 0}}), emb({{1, 0, 0}})), InvalidInput);
  CHECK_THROWS_AS(bertscore_greedy(emb({{0, 0}}), emb({{1, 0}})), InvalidInput);
  EmbeddingSeq empty;
  empty.dim = 2;
  CHECK_THROWS_AS(bertscore_greedy(empty, e), InvalidInput);
}

TEST_CASE("bertscore 2x2 against hand similarity matrix", "[metrics][bertscore][oracle]") {
  // h1=(1,0), h2=(0.6,0.8); r1=(0.8,0.6), r2=(0,1); cosines are dot products
  const auto h = emb({{1, 0}, {0.6, 0.8}});
  const auto r = emb({{0.8, 0.6}, {0, 1}});
  const double sim[2][2] = {{0.8, 0.0}, {0.6 * 0.8 + 0.8 * 0.6, 0.8}};
  double p = 0, q = 0;
  for (int i = 0; i < 2; ++i) p += std::max(sim[i][0], sim[i][1]) / 2;
  for (int j = 0; j < 2; ++j) q += std::max(sim[0][j], sim[1][j]) / 2;
  const auto s = bertscore_greedy(h, r);
  CHECK(s.precision == Approx(p).margin(1e-12));  // (0.8+0.96)/2
  CHECK(s.recall == Approx(q).margin(1e-12));     // (0.96+0.8)/2
  CHECK(s.f == Approx(2 * p * q / (p + q)).margin(1e-12));

  auto hw = h;
  hw.idf = std::vector<double>{3.0, 1.0};
  auto rw = r;
  rw.idf = std::vector<double>{1.0, 1.0};
  const auto w = bertscore_greedy(hw, rw, {true});
  CHECK(w.precision == Approx((3 * 0.8 + 1 * 0.96) / 4).margin(1e-12));
  CHECK(w.recall == Approx(q).margin(1e-12));
}

TEST_CASE("bertscore precision and recall swap with arguments", "[metrics][bertscore][property]") {
  Prng rng(23);
  auto rnd = [&](std::size_t n) {
    std::vector<std::vector<double>> v(n, std::vector<double>(4));
    for (auto& x : v)
      for (auto& c : x) c = rng.uniform() * 2 - 1 + 1e-3;
    return emb(v);
  };
  for (int t = 0; t < 200; ++t) {
    const auto a = rnd(1 + rng.below(6)), b = rnd(1 + rng.below(6));
    const auto ab = bertscore_greedy(a, b), ba = bertscore_greedy(b, a);
    REQUIRE(ab.precision == Approx(ba.recall).margin(1e-12));
    REQUIRE(ab.recall == Approx(ba.precision).margin(1e-12));
  }
}
